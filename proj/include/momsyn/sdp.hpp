#pragma once

// Standard-form block-diagonal semidefinite programs.
//
//   minimize    sum_k <C_k, X_k>
//   subject to  sum_k <A_jk, X_k>  = b_j    (equalities)
//               sum_k <A_jk, X_k> <= b_j    (inequalities)
//               X_k >= 0
//
// <A, X> = trace(A X). All coefficient matrices are symmetric.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "momsyn/core.hpp"

namespace momsyn::sdp {

struct BlockSpec {
  std::string name;
  int size = 0;
  // Optional face: X = face * Y * face^T with Y >= 0 of side face.cols().
  // Empty means the full PSD cone.
  MatrixXd face;
};

struct BlockTerm {
  int block = 0;
  MatrixXd coeff;  // symmetric, size x size
};

struct LinearConstraint {
  std::vector<BlockTerm> terms;
  double rhs = 0.0;
  std::string label;

  // Sum of <coeff, X[block]>.
  double evaluate(const std::vector<MatrixXd>& X) const;
};

class SdpProblem {
 public:
  // Returns the block index. Throws std::invalid_argument on duplicate names.
  int add_block(const std::string& name, int size);
  int block_index(const std::string& name) const;
  // Declares that block k is known to lie in {T Y T^T : Y >= 0}. T must have
  // full column rank. The solver optimizes over Y, which restores an interior
  // when equalities pin part of X to a singular matrix.
  void restrict_to_face(int block, const MatrixXd& T);

  // Adds to the objective coefficient of a block.
  void add_objective(int block, const MatrixXd& C);
  void add_equality(LinearConstraint c);
  void add_inequality(LinearConstraint c);

  const std::vector<BlockSpec>& blocks() const { return blocks_; }
  const std::vector<MatrixXd>& objective() const { return objective_; }
  const std::vector<LinearConstraint>& equalities() const { return equalities_; }
  const std::vector<LinearConstraint>& inequalities() const {
    return inequalities_;
  }

  double objective_value(const std::vector<MatrixXd>& X) const;

  // Throws if a coefficient is asymmetric or sized wrongly.
  void validate() const;

 private:
  void check_constraint(const LinearConstraint& c) const;

  std::vector<BlockSpec> blocks_;
  std::vector<MatrixXd> objective_;
  std::vector<LinearConstraint> equalities_;
  std::vector<LinearConstraint> inequalities_;
};

struct Residuals {
  // max_j |a_j(X) - b_j| / (1 + ||b||_inf)
  double max_eq_residual = 0.0;
  // max_j max(0, a_j(X) - b_j) / (1 + ||b||_inf)
  double max_ineq_violation = 0.0;
  double min_block_eigenvalue = 0.0;
};

Residuals evaluate_residuals(const SdpProblem& problem,
                             const std::vector<MatrixXd>& X);

struct SdpSolution {
  std::vector<MatrixXd> X;  // one per problem block
  VectorXd y_eq;            // equality multipliers
  VectorXd y_ineq;          // inequality multipliers (<= 0 at optimum)
  double objective = 0.0;
  double dual_objective = 0.0;
  SolverStatus status = SolverStatus::numerical_trouble;
  double max_eq_residual = 0.0;
  double max_ineq_violation = 0.0;
  double min_block_eigenvalue = 0.0;
  int iterations = 0;
};

struct SolverSettings {
  double feas_tol = 1e-8;
  double gap_tol = 1e-11;
  int max_iters = 200;
  bool verbose = false;
};

// Primal-dual interior point method (HKM direction, Mehrotra predictor-
// corrector). Inequalities become equalities with 1x1 slack blocks.
SdpSolution solve(const SdpProblem& problem, const SolverSettings& settings = {});

// Column-major lower-triangle stacking, off-diagonals scaled by sqrt(2).
VectorXd svec(const MatrixXd& M);
MatrixXd smat(const VectorXd& v);

// Sparse triplet text dump:
//   header  "sdp <blocks> <equalities> <inequalities>"
//   blocks  "block <index> <size> <name>"
//   entries "<kind> <constraint> <block> <row> <col> <value>" for the lower
//           triangle, kind in {obj, eq, ineq}; obj uses constraint index -1
//   rhs     "rhs <kind> <constraint> <value>"
void dump_triplets(const SdpProblem& problem, std::ostream& os);

}  // namespace momsyn::sdp
