#pragma once

// Domain types shared by every stage of the moment-based synthesis pipeline.
//
// Throughout, the stacked vector is z = (1, x, u) with x in R^n and u in R^m,
// so moment matrices and quadratic forms are (1+n+m) x (1+n+m).

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace momsyn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Thrown when operands disagree in shape. The message names the block.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a matrix that must be PSD / positive definite is not.
class DefinitenessError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Dimensions {
  int n = 1;  // state
  int m = 1;  // input
  int N = 0;  // final stage index
  int s = 0;  // quadratic constraints per stage

  int moment_size() const { return 1 + n + m; }
  int state_moment_size() const { return 1 + n; }
  void validate() const;
};

// Symmetric part of M. Warns on stderr if the input was asymmetric above
// 1e-9 (relative to its largest entry).
MatrixXd symmetrized(const MatrixXd& M, const char* what = "matrix");

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const MatrixXd& S);

// True if S is PSD up to the eigenvalue floor -tol * max(1, ||S||_2).
bool is_psd(const MatrixXd& S, double tol = 1e-9);

// Eigenvalue-clipped symmetric square root, R * R^T = S_+.
MatrixXd psd_sqrt(const MatrixXd& S);

// Projection onto the PSD cone by clipping negative eigenvalues.
MatrixXd psd_clip(const MatrixXd& S);

// Moore-Penrose inverse of a symmetric matrix, dropping eigenvalues below
// rel_tol * max|eig|.
MatrixXd symmetric_pinv(const MatrixXd& S, double rel_tol);

void require_shape(const MatrixXd& M, Eigen::Index rows, Eigen::Index cols,
                   const std::string& what);

struct SystemStage {
  VectorXd f;
  MatrixXd A;
  MatrixXd B;
  MatrixXd sigma_w;

  SystemStage() = default;
  SystemStage(VectorXd f_, MatrixXd A_, MatrixXd B_, MatrixXd sigma_w_);

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }

  // [1 0 0; f A B], the map (1, x, u) -> (1, x_+) without noise.
  MatrixXd transition() const;

  // Throws DimensionError / DefinitenessError.
  void validate(int n, int m) const;
};

// Second moment E (1,x)(1,x)^T.
class StateMoment {
 public:
  StateMoment() = default;
  explicit StateMoment(const MatrixXd& data);

  static StateMoment dirac(const VectorXd& x);
  static StateMoment from_mean_covariance(const VectorXd& mean,
                                          const MatrixXd& cov);

  const MatrixXd& data() const { return data_; }
  int n() const { return static_cast<int>(data_.rows()) - 1; }

  double sigma11() const { return data_(0, 0); }
  Eigen::RowVectorXd sigma12() const { return data_.row(0).tail(n()); }
  MatrixXd Sigma22() const { return data_.bottomRightCorner(n(), n()); }

  // Valid only when sigma11 == 1.
  VectorXd mean() const { return data_.col(0).tail(n()) / sigma11(); }
  MatrixXd covariance() const;

 private:
  MatrixXd data_;
};

// Second moment E (1,x,u)(1,x,u)^T with named blocks.
class MomentMatrix {
 public:
  MomentMatrix() = default;
  MomentMatrix(const MatrixXd& data, int n, int m);

  const MatrixXd& data() const { return data_; }
  int n() const { return n_; }
  int m() const { return m_; }
  int size() const { return 1 + n_ + m_; }

  double sigma11() const { return data_(0, 0); }
  Eigen::RowVectorXd sigma12() const { return data_.block(0, 1, 1, n_); }
  Eigen::RowVectorXd sigma13() const { return data_.block(0, 1 + n_, 1, m_); }
  MatrixXd Sigma22() const { return data_.block(1, 1, n_, n_); }
  MatrixXd Sigma23() const { return data_.block(1, 1 + n_, n_, m_); }
  MatrixXd Sigma33() const { return data_.block(1 + n_, 1 + n_, m_, m_); }

  // Rows of u against (1, x): [sigma31 Sigma32], m x (1+n).
  MatrixXd input_state_block() const {
    return data_.block(1 + n_, 0, m_, 1 + n_);
  }
  // The (1, x) marginal.
  StateMoment state_moment() const {
    return StateMoment(data_.topLeftCorner(1 + n_, 1 + n_));
  }

 private:
  MatrixXd data_;
  int n_ = 0;
  int m_ = 0;
};

enum class FormSense { cost, leq_zero };

struct QuadraticForm {
  MatrixXd M;
  FormSense sense = FormSense::cost;

  QuadraticForm() = default;
  QuadraticForm(const MatrixXd& M_, FormSense sense_);
};

// u = k1 + K2 x + v,  v ~ (0, sigma_v) independent of the past.
struct AffinePolicy {
  VectorXd k1;
  MatrixXd K2;
  MatrixXd sigma_v;

  int n() const { return static_cast<int>(K2.cols()); }
  int m() const { return static_cast<int>(K2.rows()); }
  // [k1 K2], m x (1+n).
  MatrixXd gain() const;
  static AffinePolicy zero(int n, int m);
};

enum class Mode { finite, stationary, stationary_tail };

struct StageConstraint {
  std::optional<int> stage;  // nullopt: every stage
  QuadraticForm form;
};

// Lower bound Sigma^v >= level * I on the input excitation.
struct ExcitationBound {
  std::optional<int> stage;  // nullopt: every stage
  double level = 0.0;
};

struct SynthesisProblem {
  Dimensions dims;
  // finite: N stages; stationary: 1; stationary_tail: N+1 (stage N is the
  // tail) or 1 (shared by all stages).
  std::vector<SystemStage> stages;
  // finite / stationary_tail: N+1 or 1; stationary: 1.
  std::vector<QuadraticForm> costs;
  std::vector<StageConstraint> constraints;
  std::vector<ExcitationBound> excitation;
  StateMoment initial;
  Mode mode = Mode::finite;
  std::optional<double> gamma;

  // Number of moment matrices the program optimizes over.
  int moment_count() const {
    return mode == Mode::stationary ? 1 : dims.N + 1;
  }
  const SystemStage& stage(int t) const;
  const QuadraticForm& cost(int t) const;
  // Throws DimensionError / std::invalid_argument.
  void validate() const;
};

enum class SolverStatus { optimal, infeasible, unbounded, numerical_trouble };

const char* to_string(SolverStatus s);
const char* to_string(Mode m);

struct SynthesisSolution {
  Mode mode = Mode::finite;
  std::vector<MomentMatrix> moments;
  std::vector<AffinePolicy> policies;
  double objective = 0.0;
  SolverStatus solver_status = SolverStatus::numerical_trouble;
  // Frobenius norm of the propagation residual per transition.
  std::vector<double> residuals;
  int iterations = 0;
  double max_eq_residual = 0.0;
  double min_block_eigenvalue = 0.0;
};

// sigma_plus - ( G sigma G^T + blkdiag(0, sigma_w) ), G = [1 0 0; f A B].
MatrixXd ftilde_residual(const MomentMatrix& sigma,
                         const StateMoment& sigma_plus,
                         const SystemStage& stage);

// The (1, x_+) moment reached from sigma in one step.
StateMoment propagate_moment(const MomentMatrix& sigma,
                             const SystemStage& stage);

// trace(sigma * M).
double quad_expectation(const MomentMatrix& sigma, const QuadraticForm& form);

}  // namespace momsyn
