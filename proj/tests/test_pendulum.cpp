#include <cmath>
#include <numbers>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "momsyn/duality.hpp"
#include "momsyn/pendulum.hpp"
#include "momsyn/synthesis.hpp"

using namespace momsyn;
using namespace momsyn::pendulum;

namespace {

constexpr double kPi = std::numbers::pi;

// Central differences of the ODE at (x, 0).
Linearization numeric_jacobian(const PendulumParams& p, const Eigen::Vector4d& x) {
  const double eps = 1e-6;
  Linearization L;
  for (int j = 0; j < 4; ++j) {
    Eigen::Vector4d e = Eigen::Vector4d::Zero();
    e(j) = eps;
    L.A.col(j) = (dynamics(p, x + e, 0.0) - dynamics(p, x - e, 0.0)) / (2 * eps);
  }
  L.B = (dynamics(p, x, eps) - dynamics(p, x, -eps)) / (2 * eps);
  return L;
}

AffinePolicy zero_policy() { return AffinePolicy::zero(4, 1); }

}  // namespace

TEST(PendulumModel, LinearizationsMatchFiniteDifferences) {
  for (const double l : {1.0, 0.5}) {
    PendulumParams p;
    p.l = l;
    p.m2 = 0.3;  // make the coupling terms visible
    const Linearization a = linearize_hanging(p);
    const Linearization an = numeric_jacobian(p, Eigen::Vector4d::Zero());
    EXPECT_LT((a.A - an.A).norm(), 1e-6);
    EXPECT_LT((a.B - an.B).norm(), 1e-6);
    const Linearization b = linearize_upright(p);
    const Linearization bn = numeric_jacobian(p, Eigen::Vector4d(0, kPi, 0, 0));
    EXPECT_LT((b.A - bn.A).norm(), 1e-6);
    EXPECT_LT((b.B - bn.B).norm(), 1e-6);
  }
}

TEST(PendulumModel, Equilibria) {
  const PendulumParams p;
  EXPECT_LT(dynamics(p, Eigen::Vector4d::Zero(), 0.0).norm(), 1e-15);
  // sin(pi) is only zero to rounding.
  EXPECT_LT(dynamics(p, Eigen::Vector4d(2.0, kPi, 0, 0), 0.0).norm(), 1e-14);
  // Pendulum at rest: the cart accelerates as u / m1.
  EXPECT_NEAR(dynamics(p, Eigen::Vector4d::Zero(), 2.0)(2), 2.0, 1e-15);
}

TEST(PendulumModel, Discretizations) {
  const PendulumParams p;
  const SystemStage v = escape_stage(p, ModelVariant::verbatim);
  EXPECT_DOUBLE_EQ(v.B(2, 0), p.h / p.m2);
  EXPECT_DOUBLE_EQ(v.B(3, 0), p.h * p.l / p.m1);
  EXPECT_DOUBLE_EQ(v.A(3, 1), -p.h * (p.m1 + p.m2) * p.g / (p.l * p.m2));
  EXPECT_DOUBLE_EQ(v.A(0, 2), p.h);

  const Linearization L = linearize_hanging(p);
  const SystemStage e = escape_stage(p, ModelVariant::consistent, Discretization::euler);
  EXPECT_LT((e.A - (Eigen::Matrix4d::Identity() + p.h * L.A)).norm(), 1e-15);
  const SystemStage z = escape_stage(p, ModelVariant::consistent, Discretization::zoh);
  // Agrees with Euler to first order in h.
  EXPECT_LT((z.A - e.A).norm(), p.h * p.h * 20.0);
  EXPECT_LT((z.B - e.B).norm(), p.h * p.h);
  // Exact ZOH keeps the undamped oscillation on the unit circle; Euler
  // expands it by sqrt(1 + (omega h)^2).
  Eigen::Matrix2d Az, Ae;
  Az << z.A(1, 1), z.A(1, 3), z.A(3, 1), z.A(3, 3);
  Ae << e.A(1, 1), e.A(1, 3), e.A(3, 1), e.A(3, 3);
  const double omega2 = (p.m1 + p.m2) * p.g / (p.l * p.m1);
  EXPECT_NEAR(duality::spectral_radius(Az), 1.0, 1e-12);
  EXPECT_NEAR(duality::spectral_radius(Ae), std::sqrt(1 + omega2 * p.h * p.h), 1e-12);
}

TEST(PendulumModel, EnergyForm) {
  const PendulumParams p;
  // The cap equals the upright potential energy 2 m2 g l.
  EXPECT_NEAR(energy(p, ModelVariant::consistent, 2.0, 0.0), 2 * p.m2 * p.g * p.l, 1e-15);
  EXPECT_NEAR(energy(p, ModelVariant::verbatim, 0.0, 1.0), 0.5 * p.g * p.l * p.l, 1e-15);
  const MatrixXd H = energy_form(p, ModelVariant::consistent, 2.0);
  VectorXd z(6);
  z << 1.0, 0.3, 1.5, -0.2, 0.7, 4.0;
  EXPECT_NEAR(z.dot(H * z),
              energy(p, ModelVariant::consistent, 1.5, 0.7) -
                  energy(p, ModelVariant::consistent, 2.0, 0.0),
              1e-15);
}

TEST(PendulumEscape, ConsistentDesignIsFeasibleWithActiveBounds) {
  const PendulumParams p;
  const SynthesisProblem prob = escape_problem(p);
  const SynthesisSolution sol = synthesize(prob);
  ASSERT_EQ(sol.solver_status, SolverStatus::optimal);
  const double level = 1e4 * p.h;
  EXPECT_LE(std::abs(sol.policies[0].sigma_v.trace() - level), 1e-4 * level);
  const double cap = energy(p, ModelVariant::consistent, 2.0, 0.0);
  const double Ee = quad_expectation(
      sol.moments[0], QuadraticForm(energy_form(p, ModelVariant::consistent, 0.0), FormSense::cost));
  EXPECT_LE(Ee, cap + 1e-6);
  EXPECT_GT(Ee, 0.99 * cap);  // the energy reward drives it to the cap
}

TEST(PendulumEscape, VerbatimDesignIsInfeasible) {
  const PendulumParams p;
  EscapeDesign d;
  d.variant = ModelVariant::verbatim;
  // The excitation alone gives E x4^2 >= (h l / m1)^2 * 1e4 h.
  const double floor = energy(p, d.variant, 0.0, 1.0) * std::pow(p.h * p.l / p.m1, 2) * 1e4 * p.h;
  EXPECT_GT(floor, energy(p, d.variant, 2.0, 0.0));
  EXPECT_EQ(synthesize(escape_problem(p, d)).solver_status, SolverStatus::infeasible);
}

TEST(PendulumStabilizer, ClosedLoopIsStable) {
  const PendulumParams p;
  const Stabilizer s = design_stabilizer(p);
  ASSERT_EQ(s.policy.K2.rows(), 1);
  EXPECT_GT(min_eigenvalue(s.P), 0.0);
  // Zero-order hold of the upright linearization.
  const Linearization L = linearize_upright(p);
  Eigen::Matrix<double, 5, 5> M = Eigen::Matrix<double, 5, 5>::Zero();
  M.topLeftCorner<4, 4>() = L.A * p.h;
  M.topRightCorner<4, 1>() = L.B * p.h;
  const Eigen::Matrix<double, 5, 5> E = M.exp();
  const Eigen::Matrix4d Ad = E.topLeftCorner<4, 4>();
  const Eigen::Vector4d Bd = E.topRightCorner<4, 1>();
  EXPECT_GT(duality::spectral_radius(Ad), 1.0);
  const MatrixXd Acl = Ad + Bd * s.policy.K2;
  EXPECT_LT(duality::spectral_radius(Acl), 1.0);
  // P satisfies the Lyapunov decrease for the closed loop.
  EXPECT_GT(min_eigenvalue(s.P - Acl.transpose() * s.P * Acl), 0.0);
}

TEST(PendulumSimulation, RestingStatesStayPut) {
  const PendulumParams p;
  simulate::SimConfig cfg;
  cfg.horizon = 500;
  const SwitchRule never{MatrixXd::Identity(4, 4), -1.0};
  const auto hanging = simulate_pendulum(p, zero_policy(), zero_policy(), never, cfg);
  EXPECT_LT(hanging.batch.states[0].norm(), 1e-15);
  EXPECT_LT(hanging.switch_time[0], 0.0);

  const Stabilizer s = design_stabilizer(p);
  const SwitchRule always{s.P, 1e300};
  const auto up = simulate_pendulum(p, zero_policy(), s.policy, always, cfg,
                                    Eigen::Vector4d(0.0, kPi, 0.0, 0.0));
  EXPECT_EQ(up.switch_time[0], 0.0);
  const MatrixXd& X = up.batch.states[0];
  for (int k = 0; k < X.rows(); ++k) {
    EXPECT_LT(upright_deviation(X.row(k).transpose()).norm(), 1e-12);
  }
  EXPECT_DOUBLE_EQ(up.batch.dt, p.h);
}

TEST(PendulumSimulation, DivergenceReportsTime) {
  const PendulumParams p;
  AffinePolicy wild = zero_policy();
  wild.K2(0, 2) = 200.0;  // positive velocity feedback on the cart
  simulate::SimConfig cfg;
  cfg.horizon = 2000;
  const SwitchRule never{MatrixXd::Identity(4, 4), -1.0};
  try {
    simulate_pendulum(p, wild, zero_policy(), never, cfg, Eigen::Vector4d(0, 0, 1e-3, 0));
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.time(), 0.0);
    EXPECT_LT(e.time(), 20.0);
  }
}

TEST(PendulumSimulation, Reproducible) {
  const PendulumParams p;
  AffinePolicy esc = zero_policy();
  esc.sigma_v(0, 0) = 1.0;
  simulate::SimConfig cfg;
  cfg.trajectories = 2;
  cfg.horizon = 300;
  cfg.seed = 5;
  const SwitchRule never{MatrixXd::Identity(4, 4), -1.0};
  const auto a = simulate_pendulum(p, esc, zero_policy(), never, cfg);
  const auto b = simulate_pendulum(p, esc, zero_policy(), never, cfg);
  EXPECT_EQ(a.batch.states[1], b.batch.states[1]);
  EXPECT_NE(a.batch.states[0], a.batch.states[1]);
}

TEST(PendulumSwingUp, TwoSeedsReachAndHoldUpright) {
  const PendulumParams p;
  const SynthesisSolution sol = synthesize(escape_problem(p));
  ASSERT_EQ(sol.solver_status, SolverStatus::optimal);
  const Stabilizer s = design_stabilizer(p);
  const double c = attraction_level(p, s);
  EXPECT_GT(c, 0.0);
  for (std::uint64_t seed : {1u, 2u}) {
    simulate::SimConfig cfg;
    cfg.seed = seed;
    cfg.horizon = static_cast<int>(std::lround(80.0 / p.h));
    const auto run = simulate_pendulum(p, sol.policies[0], s.policy, {s.P, c}, cfg);
    const double ts = run.switch_time[0];
    ASSERT_GE(ts, 0.0) << "seed " << seed;
    EXPECT_LE(ts, 60.0);
    const MatrixXd& X = run.batch.states[0];
    for (int k = static_cast<int>(std::lround((ts + 10.0) / p.h)); k < X.rows(); ++k) {
      ASSERT_LE(std::abs(upright_deviation(X.row(k).transpose())(1)), 0.05)
          << "seed " << seed << " t=" << k * p.h;
    }
  }
}
