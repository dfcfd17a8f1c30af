#include <gtest/gtest.h>

#include "momsyn/builder.hpp"
#include "momsyn/extract.hpp"
#include "momsyn/scenarios.hpp"
#include "momsyn/synthesis.hpp"

using namespace momsyn;
using scenarios::ObstacleScenario;

namespace {

// Noise-free rollout of the extracted policies from the Dirac start.
std::vector<VectorXd> mean_path(const SynthesisProblem& p, const SynthesisSolution& sol) {
  std::vector<VectorXd> x{p.initial.mean()};
  for (int t = 0; t < p.dims.N; ++t) {
    const AffinePolicy& pol = sol.policies[t];
    const VectorXd u = pol.k1 + pol.K2 * x.back();
    const SystemStage& st = p.stage(t);
    x.push_back(st.f + st.A * x.back() + st.B * u);
  }
  return x;
}

}  // namespace

TEST(ObstacleForms, KeepOutMatchesDistance) {
  const VectorXd c = Eigen::Vector2d(-7.5, 0.5);
  const MatrixXd H = scenarios::keep_out_form(c, 1.1, 2);
  VectorXd z(5);
  z << 1.0, -6.0, 1.0, 0.3, -0.2;
  // z'Hz = rho^2 - ||x - c||^2
  EXPECT_NEAR(z.dot(H * z), 1.21 - (z.segment(1, 2) - c).squaredNorm(), 1e-12);
  const MatrixXd P = scenarios::input_power_form(2, 2, 0.1);
  EXPECT_NEAR(z.dot(P * z), 0.09 + 0.04 - 0.1, 1e-12);
}

TEST(ObstacleScenario, Test1Counts) {
  const SynthesisProblem p = scenarios::make_obstacle_problem(ObstacleScenario::test1());
  EXPECT_NO_THROW(p.validate());
  const auto [sdp, map] = builder::build(p);
  EXPECT_EQ(sdp.blocks().size(), 61u);
  EXPECT_EQ(static_cast<int>(sdp.inequalities().size()), 183);
  EXPECT_EQ(map.moment_blocks.size(), 61u);
}

TEST(ObstacleScenario, RejectsBadData) {
  ObstacleScenario s = ObstacleScenario::test1();
  s.obstacles[0].radius = 0.0;
  EXPECT_THROW(scenarios::make_obstacle_problem(s), std::invalid_argument);
  s = ObstacleScenario::test1();
  s.margin = -0.1;
  EXPECT_THROW(scenarios::make_obstacle_problem(s), std::invalid_argument);
  s = ObstacleScenario::test1();
  s.obstacles[1].center = Eigen::Vector3d(0, 0, 0);
  EXPECT_THROW(scenarios::make_obstacle_problem(s), DimensionError);
}

TEST(ObstacleScenario, Test1DeterministicAndClear) {
  const ObstacleScenario s = ObstacleScenario::test1();
  const SynthesisProblem p = scenarios::make_obstacle_problem(s);
  const SynthesisSolution sol = synthesize(p);
  ASSERT_EQ(sol.solver_status, SolverStatus::optimal);
  // Independent cvxpy/Clarabel solve of the same program: 1139.753.
  EXPECT_NEAR(sol.objective, 1139.753, 0.02);
  EXPECT_EQ(extract::classify(sol.policies), extract::PolicyKind::deterministic);

  const auto x = mean_path(p, sol);
  for (const auto& xt : x) {
    for (const auto& o : s.obstacles) EXPECT_GE((xt - o.center).norm(), o.radius);
  }
  EXPECT_LT(x.back().norm(), 0.5);
}

TEST(ObstacleScenario, Test2IsStochastic) {
  const ObstacleScenario s = ObstacleScenario::test2();
  const SynthesisProblem p = scenarios::make_obstacle_problem(s);
  const SynthesisSolution sol = synthesize(p);
  ASSERT_EQ(sol.solver_status, SolverStatus::optimal);
  EXPECT_EQ(extract::classify(sol.policies), extract::PolicyKind::stochastic);
  // The mean path goes straight through the disk; only the spread satisfies
  // the expectation constraint.
  const auto x = mean_path(p, sol);
  double closest = 1e9;
  for (const auto& xt : x) closest = std::min(closest, (xt - s.obstacles[0].center).norm());
  EXPECT_LT(closest, s.obstacles[0].radius);
  for (int t = 0; t <= p.dims.N; ++t) {
    for (const auto& c : p.constraints) {
      EXPECT_LE(quad_expectation(sol.moments[t], c.form), 1e-6) << "stage " << t;
    }
  }
}

TEST(ObstacleScenario, PerturbedTest2IsDeterministic) {
  const SynthesisProblem p =
      scenarios::make_obstacle_problem(ObstacleScenario::test2(0.1));
  const SynthesisSolution sol = synthesize(p);
  ASSERT_EQ(sol.solver_status, SolverStatus::optimal);
  EXPECT_EQ(extract::classify(sol.policies), extract::PolicyKind::deterministic);
}
