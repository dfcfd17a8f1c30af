#include "momsyn/sdp.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace momsyn::sdp {
namespace {

MatrixXd unit(int d, int i, int j) {
  MatrixXd E = MatrixXd::Zero(d, d);
  E(i, j) += 0.5;
  E(j, i) += 0.5;
  return E;
}

LinearConstraint on_block(int block, const MatrixXd& A, double rhs) {
  LinearConstraint c;
  c.terms.push_back({block, A});
  c.rhs = rhs;
  return c;
}

TEST(Svec, Identity) {
  const VectorXd v = svec(MatrixXd::Identity(2, 2));
  ASSERT_EQ(v.size(), 3);
  EXPECT_EQ(v(0), 1.0);
  EXPECT_EQ(v(1), 0.0);
  EXPECT_EQ(v(2), 1.0);
}

TEST(Svec, OffDiagonalScaledBySqrt2) {
  MatrixXd M(2, 2);
  M << 0, 1, 1, 0;
  const VectorXd v = svec(M);
  EXPECT_EQ(v(0), 0.0);
  EXPECT_DOUBLE_EQ(v(1), std::sqrt(2.0));
  EXPECT_EQ(v(2), 0.0);
}

TEST(Svec, RejectsNonSquare) {
  EXPECT_THROW(svec(MatrixXd::Zero(2, 3)), DimensionError);
}

TEST(Svec, PreservesTraceInnerProductAndRoundTrips) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 7);
    const MatrixXd A = testing_util::random_symmetric(rng, d);
    const MatrixXd B = testing_util::random_symmetric(rng, d);
    EXPECT_NEAR(svec(A).dot(svec(B)), (A * B).trace(), 1e-13 * (1 + A.norm() * B.norm()));
    EXPECT_LT((smat(svec(A)) - A).cwiseAbs().maxCoeff(), 1e-15 * (1 + A.norm()));
  }
}

TEST(Solve, PinnedScalar) {
  SdpProblem p;
  const int b = p.add_block("x", 1);
  p.add_objective(b, MatrixXd::Identity(1, 1));
  p.add_equality(on_block(b, MatrixXd::Identity(1, 1), 2.0));
  const SdpSolution s = solve(p);
  ASSERT_EQ(s.status, SolverStatus::optimal);
  EXPECT_NEAR(s.objective, 2.0, 1e-7);
}

TEST(Solve, AmGmExample) {
  // X11 X22 >= X12^2 = 1, so X11 + X22 >= 2 with equality at [[1,1],[1,1]].
  SdpProblem p;
  const int b = p.add_block("x", 2);
  p.add_objective(b, MatrixXd::Identity(2, 2));
  p.add_equality(on_block(b, unit(2, 0, 1), 1.0));
  const SdpSolution s = solve(p);
  ASSERT_EQ(s.status, SolverStatus::optimal);
  EXPECT_NEAR(s.objective, 2.0, 1e-7);
  EXPECT_NEAR(s.X[0](0, 0), 1.0, 1e-5);
  EXPECT_NEAR(s.X[0](1, 1), 1.0, 1e-5);
  EXPECT_NEAR(s.X[0](0, 1), 1.0, 1e-8);
}

TEST(Solve, ContradictoryEqualitiesAreInfeasible) {
  SdpProblem p;
  const int b = p.add_block("x", 1);
  p.add_objective(b, MatrixXd::Identity(1, 1));
  p.add_equality(on_block(b, MatrixXd::Identity(1, 1), 1.0));
  p.add_equality(on_block(b, MatrixXd::Identity(1, 1), 2.0));
  EXPECT_EQ(solve(p).status, SolverStatus::infeasible);
}

TEST(Solve, InfeasibleInequalityDetectedByCertificate) {
  // trace(X) <= -1 with X >= 0.
  SdpProblem p;
  const int b = p.add_block("x", 2);
  p.add_objective(b, MatrixXd::Identity(2, 2));
  p.add_equality(on_block(b, unit(2, 0, 1), 0.5));
  p.add_inequality(on_block(b, MatrixXd::Identity(2, 2), -1.0));
  EXPECT_EQ(solve(p).status, SolverStatus::infeasible);
}

TEST(Solve, UnboundedDetected) {
  // min -X11 s.t. X22 = 1.
  SdpProblem p;
  const int b = p.add_block("x", 2);
  p.add_objective(b, -unit(2, 0, 0));
  p.add_equality(on_block(b, unit(2, 1, 1), 1.0));
  EXPECT_EQ(solve(p).status, SolverStatus::unbounded);
}

TEST(Solve, MinimumEigenvalueOracle) {
  // min <C, X> s.t. trace X = 1 equals lambda_min(C).
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + static_cast<int>(rng() % 6);
    const MatrixXd C = testing_util::random_symmetric(rng, d);
    SdpProblem p;
    const int b = p.add_block("x", d);
    p.add_objective(b, C);
    p.add_equality(on_block(b, MatrixXd::Identity(d, d), 1.0));
    const SdpSolution s = solve(p);
    ASSERT_EQ(s.status, SolverStatus::optimal);
    EXPECT_NEAR(s.objective, min_eigenvalue(C), 1e-7);
  }
}

TEST(Solve, InequalityMultiplierAndActiveSet) {
  // min -X11 - X22  s.t. X11 + X22 <= 3, X12 = 0 (2x2): optimum -3.
  SdpProblem p;
  const int b = p.add_block("x", 2);
  p.add_objective(b, -MatrixXd::Identity(2, 2));
  p.add_equality(on_block(b, unit(2, 0, 1), 0.0));
  p.add_inequality(on_block(b, MatrixXd::Identity(2, 2), 3.0));
  const SdpSolution s = solve(p);
  ASSERT_EQ(s.status, SolverStatus::optimal);
  EXPECT_NEAR(s.objective, -3.0, 1e-7);
  EXPECT_NEAR(s.y_ineq(0), -1.0, 1e-6);
  EXPECT_LE(s.max_ineq_violation, 1e-8);
}

TEST(Solve, MultiBlockCoupling) {
  // Two blocks tied by X1_11 + X2_11 = 4, cost X1_11 + 3 X2_11 -> all in X1.
  SdpProblem p;
  const int b1 = p.add_block("a", 2);
  const int b2 = p.add_block("b", 3);
  p.add_objective(b1, unit(2, 0, 0));
  p.add_objective(b2, 3 * unit(3, 0, 0));
  LinearConstraint c;
  c.terms.push_back({b1, unit(2, 0, 0)});
  c.terms.push_back({b2, unit(3, 0, 0)});
  c.rhs = 4.0;
  p.add_equality(c);
  const SdpSolution s = solve(p);
  ASSERT_EQ(s.status, SolverStatus::optimal);
  EXPECT_NEAR(s.objective, 4.0, 1e-7);
  EXPECT_NEAR(s.X[b1](0, 0), 4.0, 1e-6);
}

TEST(Solve, ResidualsAreSelfConsistent) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 3;
    SdpProblem p;
    const int b = p.add_block("x", d);
    p.add_objective(b, testing_util::random_pd(rng, d));
    // Constraints satisfied by the identity matrix.
    for (int j = 0; j < 3; ++j) {
      const MatrixXd A = testing_util::random_symmetric(rng, d);
      p.add_equality(on_block(b, A, A.trace()));
    }
    const SdpSolution s = solve(p);
    ASSERT_EQ(s.status, SolverStatus::optimal);
    const Residuals r = evaluate_residuals(p, s.X);
    EXPECT_DOUBLE_EQ(r.max_eq_residual, s.max_eq_residual);
    EXPECT_DOUBLE_EQ(r.min_block_eigenvalue, s.min_block_eigenvalue);
    EXPECT_LE(s.max_eq_residual, 1e-8);
    EXPECT_GE(s.min_block_eigenvalue, -1e-8);
    EXPECT_NEAR(s.objective, p.objective_value(s.X), 1e-12 * (1 + std::abs(s.objective)));
  }
}

TEST(Solve, DependentConsistentRowsAreHarmless) {
  SdpProblem p;
  const int b = p.add_block("x", 1);
  p.add_objective(b, MatrixXd::Identity(1, 1));
  p.add_equality(on_block(b, MatrixXd::Identity(1, 1), 2.0));
  p.add_equality(on_block(b, 2 * MatrixXd::Identity(1, 1), 4.0));
  p.add_equality(on_block(b, MatrixXd::Zero(1, 1), 0.0));
  const SdpSolution s = solve(p);
  ASSERT_EQ(s.status, SolverStatus::optimal);
  EXPECT_NEAR(s.objective, 2.0, 1e-7);
}

TEST(SdpProblem, RejectsDuplicateBlockNamesAndBadShapes) {
  SdpProblem p;
  p.add_block("x", 2);
  EXPECT_THROW(p.add_block("x", 3), std::invalid_argument);
  EXPECT_THROW(p.add_equality(on_block(0, MatrixXd::Identity(3, 3), 1.0)),
               DimensionError);
}

TEST(DumpTriplets, Format) {
  SdpProblem p;
  const int b = p.add_block("x", 2);
  p.add_objective(b, MatrixXd::Identity(2, 2));
  p.add_equality(on_block(b, unit(2, 0, 1), 1.0));
  p.add_inequality(on_block(b, unit(2, 1, 1), 5.0));
  std::ostringstream os;
  dump_triplets(p, os);
  const std::string expected =
      "sdp 1 1 1\n"
      "block 0 2 x\n"
      "obj -1 0 0 0 1\n"
      "obj -1 0 1 1 1\n"
      "eq 0 0 1 0 0.5\n"
      "rhs eq 0 1\n"
      "ineq 0 0 1 1 1\n"
      "rhs ineq 0 5\n";
  EXPECT_EQ(os.str(), expected);
}

}  // namespace
}  // namespace momsyn::sdp
