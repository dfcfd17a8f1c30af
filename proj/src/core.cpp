#include "momsyn/core.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

namespace momsyn {

namespace {

constexpr double kAsymmetryWarn = 1e-9;

std::string shape_str(Eigen::Index r, Eigen::Index c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

}  // namespace

void Dimensions::validate() const {
  if (n < 1) throw std::invalid_argument("dims: n must be >= 1");
  if (m < 1) throw std::invalid_argument("dims: m must be >= 1");
  if (N < 0) throw std::invalid_argument("dims: N must be >= 0");
  if (s < 0) throw std::invalid_argument("dims: s must be >= 0");
}

void require_shape(const MatrixXd& M, Eigen::Index rows, Eigen::Index cols,
                   const std::string& what) {
  if (M.rows() != rows || M.cols() != cols) {
    throw DimensionError(what + ": expected " + shape_str(rows, cols) +
                         ", got " + shape_str(M.rows(), M.cols()));
  }
}

MatrixXd symmetrized(const MatrixXd& M, const char* what) {
  if (M.rows() != M.cols()) {
    throw DimensionError(std::string(what) + ": not square (" +
                         shape_str(M.rows(), M.cols()) + ")");
  }
  if (M.size() == 0) return M;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > kAsymmetryWarn * scale) {
    std::cerr << "warning: " << what << " asymmetric by " << asym
              << ", symmetrizing\n";
  }
  return 0.5 * (M + M.transpose());
}

double min_eigenvalue(const MatrixXd& S) {
  if (S.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool is_psd(const MatrixXd& S, double tol) {
  if (S.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  return ev(0) >= -tol * scale;
}

MatrixXd psd_sqrt(const MatrixXd& S) {
  if (S.size() == 0) return S;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  const VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal();
}

MatrixXd psd_clip(const MatrixXd& S) {
  if (S.size() == 0) return S;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  const VectorXd d = es.eigenvalues().cwiseMax(0.0);
  MatrixXd P = es.eigenvectors() * d.asDiagonal() *
               es.eigenvectors().transpose();
  return 0.5 * (P + P.transpose());
}

MatrixXd symmetric_pinv(const MatrixXd& S, double rel_tol) {
  if (S.size() == 0) return S;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  const VectorXd& ev = es.eigenvalues();
  const double cutoff = rel_tol * ev.cwiseAbs().maxCoeff();
  VectorXd inv = VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > cutoff && ev(i) != 0.0) inv(i) = 1.0 / ev(i);
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

SystemStage::SystemStage(VectorXd f_, MatrixXd A_, MatrixXd B_,
                         MatrixXd sigma_w_)
    : f(std::move(f_)), A(std::move(A_)), B(std::move(B_)),
      sigma_w(symmetrized(sigma_w_, "sigma_w")) {}

MatrixXd SystemStage::transition() const {
  const int nn = n();
  const int mm = m();
  MatrixXd G = MatrixXd::Zero(1 + nn, 1 + nn + mm);
  G(0, 0) = 1.0;
  G.block(1, 0, nn, 1) = f;
  G.block(1, 1, nn, nn) = A;
  G.block(1, 1 + nn, nn, mm) = B;
  return G;
}

void SystemStage::validate(int nn, int mm) const {
  if (f.size() != nn) {
    throw DimensionError("stage.f: expected length " + std::to_string(nn) +
                         ", got " + std::to_string(f.size()));
  }
  require_shape(A, nn, nn, "stage.A");
  require_shape(B, nn, mm, "stage.B");
  require_shape(sigma_w, nn, nn, "stage.sigma_w");
  if ((sigma_w - sigma_w.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("stage.sigma_w: not symmetric");
  }
  if (min_eigenvalue(sigma_w) < -1e-10) {
    throw DefinitenessError("stage.sigma_w: not positive semidefinite");
  }
}

StateMoment::StateMoment(const MatrixXd& data)
    : data_(symmetrized(data, "state moment")) {
  if (data_.rows() < 2) {
    throw DimensionError("state moment: needs at least 2 rows (1 + n)");
  }
}

StateMoment StateMoment::dirac(const VectorXd& x) {
  VectorXd z(1 + x.size());
  z << 1.0, x;
  return StateMoment(z * z.transpose());
}

StateMoment StateMoment::from_mean_covariance(const VectorXd& mean,
                                              const MatrixXd& cov) {
  require_shape(cov, mean.size(), mean.size(), "covariance");
  const Eigen::Index n = mean.size();
  MatrixXd S(1 + n, 1 + n);
  S(0, 0) = 1.0;
  S.block(0, 1, 1, n) = mean.transpose();
  S.block(1, 0, n, 1) = mean;
  S.block(1, 1, n, n) = cov + mean * mean.transpose();
  return StateMoment(S);
}

MatrixXd StateMoment::covariance() const {
  const VectorXd mu = mean();
  return Sigma22() / sigma11() - mu * mu.transpose();
}

MomentMatrix::MomentMatrix(const MatrixXd& data, int n, int m)
    : n_(n), m_(m) {
  if (n < 1 || m < 1) throw DimensionError("moment matrix: n, m must be >= 1");
  require_shape(data, 1 + n + m, 1 + n + m, "moment matrix");
  data_ = symmetrized(data, "moment matrix");
}

QuadraticForm::QuadraticForm(const MatrixXd& M_, FormSense sense_)
    : M(symmetrized(M_, "quadratic form")), sense(sense_) {}

MatrixXd AffinePolicy::gain() const {
  MatrixXd K(K2.rows(), 1 + K2.cols());
  K << k1, K2;
  return K;
}

AffinePolicy AffinePolicy::zero(int n, int m) {
  return AffinePolicy{VectorXd::Zero(m), MatrixXd::Zero(m, n),
                      MatrixXd::Zero(m, m)};
}

const SystemStage& SynthesisProblem::stage(int t) const {
  if (stages.size() == 1) return stages.front();
  return stages.at(static_cast<std::size_t>(t));
}

const QuadraticForm& SynthesisProblem::cost(int t) const {
  if (costs.size() == 1) return costs.front();
  return costs.at(static_cast<std::size_t>(t));
}

void SynthesisProblem::validate() const {
  dims.validate();
  const int d = dims.moment_size();
  const int N = dims.N;
  const std::size_t nst = stages.size();
  const std::size_t ncost = costs.size();
  switch (mode) {
    case Mode::finite:
      if (gamma) throw std::invalid_argument("gamma supplied in finite mode");
      if (nst != static_cast<std::size_t>(N) && !(nst == 1 && N >= 1)) {
        throw DimensionError("stages: finite mode needs N=" +
                             std::to_string(N) + " stages, got " +
                             std::to_string(nst));
      }
      if (ncost != static_cast<std::size_t>(N + 1) && ncost != 1) {
        throw DimensionError("costs: finite mode needs N+1 or 1 costs");
      }
      break;
    case Mode::stationary:
      if (gamma) throw std::invalid_argument("gamma supplied in stationary mode");
      if (nst != 1) throw DimensionError("stages: stationary mode needs 1 stage");
      if (ncost != 1) throw DimensionError("costs: stationary mode needs 1 cost");
      break;
    case Mode::stationary_tail:
      if (!gamma) throw std::invalid_argument("stationary_tail mode needs gamma");
      if (!(*gamma >= 0.0 && *gamma < 1.0)) {
        throw std::invalid_argument("gamma must lie in [0, 1)");
      }
      if (nst != static_cast<std::size_t>(N + 1) && nst != 1) {
        throw DimensionError("stages: stationary_tail needs N+1 or 1 stages");
      }
      if (ncost != static_cast<std::size_t>(N + 1) && ncost != 1) {
        throw DimensionError("costs: stationary_tail needs N+1 or 1 costs");
      }
      break;
  }
  for (std::size_t i = 0; i < nst; ++i) {
    try {
      stages[i].validate(dims.n, dims.m);
    } catch (const std::exception& e) {
      throw DimensionError("stages[" + std::to_string(i) + "]: " + e.what());
    }
  }
  for (std::size_t i = 0; i < ncost; ++i) {
    require_shape(costs[i].M, d, d, "costs[" + std::to_string(i) + "]");
  }
  const int last = moment_count() - 1;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const auto& c = constraints[i];
    require_shape(c.form.M, d, d, "constraints[" + std::to_string(i) + "].H");
    if (c.stage && (*c.stage < 0 || *c.stage > last)) {
      throw DimensionError("constraints[" + std::to_string(i) +
                           "].stage out of range");
    }
  }
  for (std::size_t i = 0; i < excitation.size(); ++i) {
    const auto& e = excitation[i];
    if (!(e.level >= 0.0)) {
      throw std::invalid_argument("excitation level must be >= 0");
    }
    if (e.stage && (*e.stage < 0 || *e.stage > last)) {
      throw DimensionError("excitation[" + std::to_string(i) +
                           "].stage out of range");
    }
  }
  require_shape(initial.data(), dims.state_moment_size(),
                dims.state_moment_size(), "initial");
}

const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::optimal: return "optimal";
    case SolverStatus::infeasible: return "infeasible";
    case SolverStatus::unbounded: return "unbounded";
    case SolverStatus::numerical_trouble: return "numerical_trouble";
  }
  return "unknown";
}

const char* to_string(Mode m) {
  switch (m) {
    case Mode::finite: return "finite";
    case Mode::stationary: return "stationary";
    case Mode::stationary_tail: return "stationary_tail";
  }
  return "unknown";
}

MatrixXd ftilde_residual(const MomentMatrix& sigma,
                         const StateMoment& sigma_plus,
                         const SystemStage& stage) {
  const int n = sigma.n();
  const int m = sigma.m();
  if (stage.n() != n || stage.m() != m) {
    throw DimensionError("ftilde_residual: stage is " +
                         shape_str(stage.n(), stage.m()) +
                         " (n x m) but sigma is " + shape_str(n, m));
  }
  require_shape(stage.f, n, 1, "ftilde_residual: stage.f");
  require_shape(stage.sigma_w, n, n, "ftilde_residual: sigma_w");
  require_shape(sigma_plus.data(), 1 + n, 1 + n, "ftilde_residual: sigma_plus");
  const MatrixXd G = stage.transition();
  MatrixXd R = sigma_plus.data() - G * sigma.data() * G.transpose();
  R.bottomRightCorner(n, n) -= stage.sigma_w;
  return 0.5 * (R + R.transpose());
}

StateMoment propagate_moment(const MomentMatrix& sigma,
                             const SystemStage& stage) {
  const int n = sigma.n();
  if (stage.n() != n || stage.m() != sigma.m()) {
    throw DimensionError("propagate_moment: stage/sigma dimension mismatch");
  }
  const MatrixXd G = stage.transition();
  MatrixXd S = G * sigma.data() * G.transpose();
  S.bottomRightCorner(n, n) += stage.sigma_w;
  return StateMoment(0.5 * (S + S.transpose()));
}

double quad_expectation(const MomentMatrix& sigma, const QuadraticForm& form) {
  require_shape(form.M, sigma.size(), sigma.size(), "quad_expectation: form");
  return sigma.data().cwiseProduct(form.M).sum();
}

}  // namespace momsyn
