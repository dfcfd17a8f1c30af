#include "momsyn/sdp.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace momsyn::sdp {

double LinearConstraint::evaluate(const std::vector<MatrixXd>& X) const {
  double v = 0.0;
  for (const auto& t : terms) v += t.coeff.cwiseProduct(X.at(t.block)).sum();
  return v;
}

int SdpProblem::add_block(const std::string& name, int size) {
  if (size < 1) throw std::invalid_argument("sdp block size must be >= 1");
  for (const auto& b : blocks_) {
    if (b.name == name) {
      throw std::invalid_argument("duplicate sdp block name: " + name);
    }
  }
  blocks_.push_back({name, size, MatrixXd()});
  objective_.push_back(MatrixXd::Zero(size, size));
  return static_cast<int>(blocks_.size()) - 1;
}

void SdpProblem::restrict_to_face(int block, const MatrixXd& T) {
  if (block < 0 || block >= static_cast<int>(blocks_.size())) {
    throw std::out_of_range("restrict_to_face: no block " + std::to_string(block));
  }
  BlockSpec& b = blocks_[block];
  if (T.rows() != b.size || T.cols() < 1 || T.cols() > b.size) {
    throw std::invalid_argument("restrict_to_face: face of block '" + b.name +
                                "' must be " + std::to_string(b.size) + " x k");
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(T);
  if (qr.rank() != T.cols()) {
    throw std::invalid_argument("restrict_to_face: face is rank deficient");
  }
  b.face = T;
}

int SdpProblem::block_index(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name == name) return static_cast<int>(i);
  }
  throw std::out_of_range("no sdp block named " + name);
}

void SdpProblem::add_objective(int block, const MatrixXd& C) {
  const int d = blocks_.at(block).size;
  require_shape(C, d, d, "objective of block " + blocks_[block].name);
  objective_[block] += C;
}

void SdpProblem::check_constraint(const LinearConstraint& c) const {
  for (const auto& t : c.terms) {
    if (t.block < 0 || t.block >= static_cast<int>(blocks_.size())) {
      throw DimensionError("constraint " + c.label + ": unknown block");
    }
    const int d = blocks_[t.block].size;
    require_shape(t.coeff, d, d,
                  "constraint " + c.label + " on block " + blocks_[t.block].name);
  }
}

void SdpProblem::add_equality(LinearConstraint c) {
  check_constraint(c);
  equalities_.push_back(std::move(c));
}

void SdpProblem::add_inequality(LinearConstraint c) {
  check_constraint(c);
  inequalities_.push_back(std::move(c));
}

double SdpProblem::objective_value(const std::vector<MatrixXd>& X) const {
  double v = 0.0;
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    v += objective_[k].cwiseProduct(X.at(k)).sum();
  }
  return v;
}

void SdpProblem::validate() const {
  auto sym = [](const MatrixXd& M, const std::string& what) {
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument(what + ": coefficient not symmetric");
    }
  };
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    sym(objective_[k], "objective " + blocks_[k].name);
  }
  for (const auto* list : {&equalities_, &inequalities_}) {
    for (const auto& c : *list) {
      check_constraint(c);
      for (const auto& t : c.terms) sym(t.coeff, "constraint " + c.label);
    }
  }
}

Residuals evaluate_residuals(const SdpProblem& problem,
                             const std::vector<MatrixXd>& X) {
  Residuals r;
  double bnorm = 0.0;
  for (const auto& c : problem.equalities()) bnorm = std::max(bnorm, std::abs(c.rhs));
  for (const auto& c : problem.inequalities()) bnorm = std::max(bnorm, std::abs(c.rhs));
  const double scale = 1.0 + bnorm;
  for (const auto& c : problem.equalities()) {
    r.max_eq_residual =
        std::max(r.max_eq_residual, std::abs(c.evaluate(X) - c.rhs) / scale);
  }
  for (const auto& c : problem.inequalities()) {
    r.max_ineq_violation =
        std::max(r.max_ineq_violation, (c.evaluate(X) - c.rhs) / scale);
  }
  double mineig = std::numeric_limits<double>::infinity();
  for (const auto& Xk : X) mineig = std::min(mineig, min_eigenvalue(Xk));
  r.min_block_eigenvalue = X.empty() ? 0.0 : mineig;
  return r;
}

VectorXd svec(const MatrixXd& M) {
  if (M.rows() != M.cols()) {
    throw DimensionError("svec: matrix is not square");
  }
  const Eigen::Index d = M.rows();
  VectorXd v(d * (d + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    v(k++) = M(j, j);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      v(k++) = std::sqrt(2.0) * 0.5 * (M(i, j) + M(j, i));
    }
  }
  return v;
}

MatrixXd smat(const VectorXd& v) {
  const double root = (std::sqrt(8.0 * static_cast<double>(v.size()) + 1.0) - 1.0) / 2.0;
  const auto d = static_cast<Eigen::Index>(std::llround(root));
  if (d * (d + 1) / 2 != v.size()) {
    throw DimensionError("smat: length is not triangular");
  }
  MatrixXd M(d, d);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    M(j, j) = v(k++);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      M(i, j) = M(j, i) = v(k++) / std::sqrt(2.0);
    }
  }
  return M;
}

void dump_triplets(const SdpProblem& problem, std::ostream& os) {
  const auto& blocks = problem.blocks();
  os.precision(17);
  os << "sdp " << blocks.size() << ' ' << problem.equalities().size() << ' '
     << problem.inequalities().size() << '\n';
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    os << "block " << k << ' ' << blocks[k].size << ' ' << blocks[k].name << '\n';
  }
  auto emit = [&](const char* kind, long idx, int block, const MatrixXd& M) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      for (Eigen::Index i = j; i < M.rows(); ++i) {
        if (M(i, j) != 0.0) {
          os << kind << ' ' << idx << ' ' << block << ' ' << i << ' ' << j
             << ' ' << M(i, j) << '\n';
        }
      }
    }
  };
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    emit("obj", -1, static_cast<int>(k), problem.objective()[k]);
  }
  auto emit_list = [&](const char* kind, const std::vector<LinearConstraint>& list) {
    for (std::size_t j = 0; j < list.size(); ++j) {
      for (const auto& t : list[j].terms) {
        emit(kind, static_cast<long>(j), t.block, t.coeff);
      }
      os << "rhs " << kind << ' ' << j << ' ' << list[j].rhs << '\n';
    }
  };
  emit_list("eq", problem.equalities());
  emit_list("ineq", problem.inequalities());
}

}  // namespace momsyn::sdp
