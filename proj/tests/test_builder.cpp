#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "momsyn/builder.hpp"
#include "momsyn/duality.hpp"
#include "momsyn/extract.hpp"
#include "momsyn/synthesis.hpp"
#include "test_util.hpp"

using namespace momsyn;
using momsyn::testing_util::random_pd;
using momsyn::testing_util::random_stage;

namespace {

MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  MatrixXd M(rows.size(), rows.begin()->size());
  int i = 0;
  for (const auto& r : rows) {
    int j = 0;
    for (double v : r) M(i, j++) = v;
    ++i;
  }
  return M;
}

SystemStage scalar_stage(double a, double b, double w, double f = 0.0) {
  return SystemStage(VectorXd::Constant(1, f), MatrixXd::Constant(1, 1, a),
                     MatrixXd::Constant(1, 1, b), MatrixXd::Constant(1, 1, w));
}

SynthesisProblem scalar_finite(int N) {
  SynthesisProblem p;
  p.dims = {1, 1, N, 0};
  p.mode = Mode::finite;
  if (N > 0) p.stages = {scalar_stage(0.5, 1.0, 0.2)};
  p.costs = {QuadraticForm(MatrixXd(Eigen::Vector3d(0, 1, 1).asDiagonal()),
                           FormSense::cost)};
  p.initial = StateMoment::from_mean_covariance(VectorXd::Constant(1, 1.0),
                                                MatrixXd::Constant(1, 1, 2.0));
  return p;
}

SynthesisProblem scalar_stationary(double a, double b, double w, const MatrixXd& R) {
  SynthesisProblem p;
  p.dims = {1, 1, 0, 0};
  p.mode = Mode::stationary;
  p.stages = {scalar_stage(a, b, w)};
  p.costs = {QuadraticForm(R, FormSense::cost)};
  p.initial = StateMoment::dirac(VectorXd::Zero(1));
  return p;
}

// Random finite LQR instance with PSD costs and full-rank initial moment.
SynthesisProblem random_lqr(std::mt19937_64& rng, int n, int m, int N) {
  SynthesisProblem p;
  p.dims = {n, m, N, 0};
  p.mode = Mode::finite;
  for (int t = 0; t < N; ++t) p.stages.push_back(random_stage(rng, n, m));
  for (int t = 0; t <= N; ++t) {
    MatrixXd R = MatrixXd::Zero(1 + n + m, 1 + n + m);
    R.block(1, 1, n + m, n + m) = random_pd(rng, n + m, 0.2);
    p.costs.emplace_back(R, FormSense::cost);
  }
  const VectorXd mean = testing_util::random_matrix(rng, n, 1);
  p.initial = StateMoment::from_mean_covariance(mean, random_pd(rng, n, 0.2));
  return p;
}

}  // namespace

TEST(BuildFinite, CountsForScalarOneStep) {
  const auto [sdp, map] = builder::build_finite(scalar_finite(1));
  ASSERT_EQ(sdp.blocks().size(), 2u);
  EXPECT_EQ(sdp.blocks()[0].size, 3);
  EXPECT_EQ(sdp.blocks()[1].size, 3);
  int pins = 0, recursion = 0;
  for (const auto& c : sdp.equalities()) {
    if (c.label.rfind("initial", 0) == 0) ++pins;
    if (c.label.rfind("propagate", 0) == 0) ++recursion;
  }
  EXPECT_EQ(pins, 3);
  EXPECT_EQ(recursion, 3);
  EXPECT_EQ(sdp.equalities().size(), 6u);
  EXPECT_TRUE(sdp.inequalities().empty());
  EXPECT_EQ(map.moment_blocks.size(), 2u);
}

TEST(BuildFinite, OneInequalityPerStageAndForm) {
  SynthesisProblem p = scalar_finite(4);
  MatrixXd H = MatrixXd::Zero(3, 3);
  H(0, 0) = -1.0;
  H(2, 2) = 1.0;
  p.dims.s = 2;
  p.constraints.push_back({std::nullopt, QuadraticForm(H, FormSense::leq_zero)});
  p.constraints.push_back({std::nullopt, QuadraticForm(2 * H, FormSense::leq_zero)});
  const auto lowered = builder::build_finite(p);
  EXPECT_EQ(lowered.first.inequalities().size(), 10u);
}

TEST(BuildFinite, RejectsGammaAndWrongMode) {
  SynthesisProblem p = scalar_finite(1);
  p.gamma = 0.5;
  EXPECT_THROW(builder::build_finite(p), std::invalid_argument);
  p.gamma.reset();
  p.mode = Mode::stationary;
  EXPECT_THROW(builder::build_finite(p), std::invalid_argument);
}

TEST(BuildFinite, RejectsDimensionMismatch) {
  SynthesisProblem p = scalar_finite(1);
  p.costs = {QuadraticForm(MatrixXd::Identity(4, 4), FormSense::cost)};
  EXPECT_THROW(builder::build_finite(p), DimensionError);
}

TEST(BuildFinite, MatchesRiccatiOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 1 + trial % 3, m = 1 + trial % 2, N = 2 + trial;
    const SynthesisProblem p = random_lqr(rng, n, m, N);
    const SynthesisSolution sol = synthesize(p);
    ASSERT_EQ(sol.solver_status, SolverStatus::optimal) << "trial " << trial;

    std::vector<MatrixXd> costs;
    for (const auto& c : p.costs) costs.push_back(c.M);
    const auto ric = duality::riccati_lqr(p.stages, costs);
    const double oracle = (ric.values[0] * p.initial.data()).trace();
    EXPECT_NEAR(sol.objective, oracle, 1e-6 * std::max(1.0, std::abs(oracle)));
    for (int t = 0; t < N; ++t) {
      EXPECT_LT((sol.policies[t].gain() - ric.gains[t]).norm(), 1e-4)
          << "trial " << trial << " stage " << t;
    }
    ASSERT_TRUE(ric.terminal_gain.has_value());
    EXPECT_LT((sol.policies[N].gain() - *ric.terminal_gain).norm(), 1e-4);
  }
}

TEST(BuildFinite, PropertiesOnRandomInstances) {
  std::mt19937_64 rng(7);
  const sdp::SolverSettings settings;
  for (int trial = 0; trial < 6; ++trial) {
    const SynthesisProblem p = random_lqr(rng, 2, 1, 3);
    const auto [program, map] = builder::build(p);
    const auto sol = sdp::solve(program, settings);
    ASSERT_EQ(sol.status, SolverStatus::optimal);
    const auto moments = map.extract(sol.X);
    for (double r : propagation_residuals(p, moments)) {
      EXPECT_LE(r, 10 * settings.feas_tol);
    }
    double obj = 0.0;
    for (int t = 0; t <= p.dims.N; ++t) obj += quad_expectation(moments[t], p.cost(t));
    EXPECT_NEAR(obj, sol.objective, 1e-8 * std::max(1.0, std::abs(obj)));
    // PSD costs and no constraints: the optimal policy is deterministic.
    for (const auto& S : moments) {
      EXPECT_LE(extract::extract_policy(S).sigma_v.trace(), 1e-6);
    }
  }
}

TEST(BuildStationary, ScalarAverageCostMatchesDare) {
  const double a = 0.5, b = 1.0, w = 1.0;
  const auto p = scalar_stationary(a, b, w, MatrixXd(Eigen::Vector3d(0, 1, 1).asDiagonal()));
  const auto sol = synthesize(p);
  ASSERT_EQ(sol.solver_status, SolverStatus::optimal);

  // P^2 - a^2 P - 1 = 0 for q = r = b = 1.
  const double P = 0.5 * (a * a + std::sqrt(a * a * a * a + 4.0));
  const double k = -a * P / (1.0 + P);
  const double var = w / (1.0 - (a + k) * (a + k));
  const double avg = var * (1.0 + k * k);
  EXPECT_NEAR(sol.objective, avg, 1e-7);
  EXPECT_NEAR(sol.policies[0].K2(0, 0), k, 1e-5);
  EXPECT_NEAR(sol.policies[0].k1(0), 0.0, 1e-6);
}

TEST(BuildStationary, NoiselessFixedPointAtOrigin) {
  const MatrixXd R = Eigen::Vector3d(2.0, 1.0, 1.0).asDiagonal();
  const auto sol = synthesize(scalar_stationary(0.9, 1.0, 0.0, R));
  ASSERT_EQ(sol.solver_status, SolverStatus::optimal);
  MatrixXd E = MatrixXd::Zero(3, 3);
  E(0, 0) = 1.0;
  EXPECT_LT((sol.moments[0].data() - E).norm(), 1e-6);
  EXPECT_NEAR(sol.objective, 2.0, 1e-7);
}

TEST(BuildStationary, Counts) {
  const auto [sdp, map] = builder::build_stationary(
      scalar_stationary(0.5, 1.0, 1.0, MatrixXd::Identity(3, 3)));
  EXPECT_EQ(sdp.blocks().size(), 1u);
  // sigma11 plus the lower triangle of the (1+n) residual.
  EXPECT_EQ(sdp.equalities().size(), 1u + 3u);
}

TEST(StationaryTail, DiscountWeights) {
  const auto w = builder::discount_weights(2, 0.5);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
  EXPECT_DOUBLE_EQ(w[1], 0.5);
  EXPECT_DOUBLE_EQ(w[2], 0.5);
  const auto w0 = builder::discount_weights(1, 0.0);
  EXPECT_DOUBLE_EQ(w0[0], 1.0);
  EXPECT_DOUBLE_EQ(w0[1], 0.0);
  EXPECT_THROW(builder::discount_weights(2, 1.0), std::invalid_argument);
  EXPECT_THROW(builder::discount_weights(2, -0.1), std::invalid_argument);
}

TEST(StationaryTail, ZeroHorizonIsScaledStationary) {
  const MatrixXd R = Eigen::Vector3d(0.0, 1.0, 1.0).asDiagonal();
  const auto stat = scalar_stationary(0.5, 1.0, 1.0, R);
  SynthesisProblem tail = stat;
  tail.mode = Mode::stationary_tail;
  tail.gamma = 0.75;

  const auto ls = builder::build(stat);
  const auto lt = builder::build(tail);
  ASSERT_EQ(ls.first.blocks().size(), lt.first.blocks().size());
  ASSERT_EQ(ls.first.equalities().size(), lt.first.equalities().size());
  for (std::size_t i = 0; i < ls.first.equalities().size(); ++i) {
    EXPECT_DOUBLE_EQ(ls.first.equalities()[i].rhs, lt.first.equalities()[i].rhs);
  }
  EXPECT_LT((lt.first.objective()[0] - 4.0 * ls.first.objective()[0]).norm(), 1e-15);

  const auto ss = synthesize(stat);
  const auto st = synthesize(tail);
  ASSERT_EQ(st.solver_status, SolverStatus::optimal);
  EXPECT_NEAR(st.objective, 4.0 * ss.objective, 1e-7);
}

TEST(StationaryTail, ConvergesTowardsStationaryCovariance) {
  SynthesisProblem p = scalar_stationary(0.5, 1.0, 1.0,
                                         MatrixXd(Eigen::Vector3d(0, 1, 1).asDiagonal()));
  p.mode = Mode::stationary_tail;
  p.gamma = 0.9;
  p.dims.N = 3;
  p.initial = StateMoment::dirac(VectorXd::Constant(1, 5.0));
  const auto sol = synthesize(p);
  ASSERT_EQ(sol.solver_status, SolverStatus::optimal);
  ASSERT_EQ(sol.residuals.size(), 4u);
  for (double r : sol.residuals) EXPECT_LT(r, 1e-6);
  EXPECT_NEAR(sol.moments[0].Sigma22()(0, 0), 25.0, 1e-7);

  p.gamma = 1.0;
  EXPECT_THROW(builder::build(p), std::invalid_argument);
}

TEST(Excitation, ZeroLevelIsRedundant) {
  std::mt19937_64 rng(3);
  SynthesisProblem p = random_lqr(rng, 2, 1, 2);
  const auto base = synthesize(p);
  p.excitation.push_back({std::nullopt, 0.0});
  const auto with = synthesize(p);
  ASSERT_EQ(with.solver_status, SolverStatus::optimal);
  EXPECT_NEAR(with.objective, base.objective, 1e-7 * std::max(1.0, base.objective));
}

TEST(Excitation, ScalarBoundIsActive) {
  SynthesisProblem p;
  p.dims = {1, 1, 0, 0};
  p.mode = Mode::finite;
  p.costs = {QuadraticForm(MatrixXd(Eigen::Vector3d(0, 0, 1).asDiagonal()),
                           FormSense::cost)};
  p.initial = StateMoment::from_mean_covariance(VectorXd::Zero(1),
                                                MatrixXd::Identity(1, 1));
  p.excitation.push_back({0, 0.3});
  const auto sol = synthesize(p);
  ASSERT_EQ(sol.solver_status, SolverStatus::optimal);
  EXPECT_NEAR(sol.moments[0].Sigma33()(0, 0), 0.3, 1e-7);
  EXPECT_NEAR(sol.policies[0].sigma_v(0, 0), 0.3, 1e-6);
  EXPECT_NEAR(sol.objective, 0.3, 1e-7);
}

TEST(Excitation, BlockAndConstraintCounts) {
  auto lowered = builder::build(scalar_finite(2));
  const auto eq_before = lowered.first.equalities().size();
  builder::add_schur_excitation(lowered.first, lowered.second, std::nullopt, 0.1);
  EXPECT_EQ(lowered.first.blocks().size(), 6u);
  EXPECT_EQ(lowered.second.excitation_blocks.size(), 3u);
  // Y is tied to Sigma on every lower-triangular entry.
  EXPECT_EQ(lowered.first.equalities().size(), eq_before + 3u * 6u);
  EXPECT_THROW(builder::add_schur_excitation(lowered.first, lowered.second, 7, 0.1),
               DimensionError);
  EXPECT_THROW(builder::add_schur_excitation(lowered.first, lowered.second, 0, -1.0),
               std::invalid_argument);
}

TEST(Builder, EntrySelector) {
  const MatrixXd X = mat({{1, 2, 3}, {2, 5, 6}, {3, 6, 9}});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      EXPECT_DOUBLE_EQ((builder::entry_selector(3, i, j) * X).trace(), X(i, j));
}

TEST(Builder, LoweringMapCoversEveryEntry) {
  const auto [sdp, map] = builder::build(scalar_finite(2));
  std::vector<MatrixXd> X;
  for (const auto& b : sdp.blocks()) X.push_back(MatrixXd::Zero(b.size, b.size));
  X[map.moment_blocks[1]](2, 1) = X[map.moment_blocks[1]](1, 2) = 4.0;
  const auto moments = map.extract(X);
  ASSERT_EQ(moments.size(), 3u);
  EXPECT_DOUBLE_EQ(moments[1].Sigma23()(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(moments[0].data().norm(), 0.0);
}
