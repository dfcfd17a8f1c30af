// Infeasible-start primal-dual path following for block-diagonal SDPs.
//
// Search direction: HKM (X dZ Z^-1 symmetrized), Mehrotra predictor-corrector.
// Rows are normalized, b and C are scaled to unit size, and linearly
// dependent equality rows are removed before iterating; an inconsistent
// dependent row is itself a Farkas certificate of infeasibility.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "momsyn/sdp.hpp"

namespace momsyn::sdp {

namespace {

struct Row {
  std::vector<BlockTerm> terms;
  double rhs = 0.0;
};

// Entry of a row restricted to one block.
struct BlockEntry {
  int row = 0;
  const MatrixXd* coeff = nullptr;
};

struct Standardized {
  std::vector<int> sizes;  // original blocks followed by slack blocks
  std::vector<MatrixXd> C;
  std::vector<Row> rows;   // equalities then inequalities (with slack)
  int num_original_blocks = 0;
  int num_eq = 0;
};

Standardized standardize(const SdpProblem& p) {
  Standardized s;
  for (const auto& b : p.blocks()) s.sizes.push_back(b.size);
  s.C = p.objective();
  s.num_original_blocks = static_cast<int>(p.blocks().size());
  s.num_eq = static_cast<int>(p.equalities().size());
  for (const auto& c : p.equalities()) s.rows.push_back({c.terms, c.rhs});
  for (const auto& c : p.inequalities()) {
    const int slack = static_cast<int>(s.sizes.size());
    s.sizes.push_back(1);
    s.C.push_back(MatrixXd::Zero(1, 1));
    Row r{c.terms, c.rhs};
    r.terms.push_back({slack, MatrixXd::Constant(1, 1, 1.0)});
    s.rows.push_back(std::move(r));
  }
  // Face restrictions: trace(A T Y T^T) = trace(T^T A T Y).
  for (int k = 0; k < s.num_original_blocks; ++k) {
    const MatrixXd& T = p.blocks()[k].face;
    if (T.size() == 0) continue;
    s.sizes[k] = static_cast<int>(T.cols());
    s.C[k] = T.transpose() * s.C[k] * T;
    for (auto& r : s.rows) {
      for (auto& t : r.terms) {
        if (t.block == k) t.coeff = T.transpose() * t.coeff * T;
      }
    }
  }
  return s;
}

double frob2(const std::vector<MatrixXd>& V) {
  double v = 0.0;
  for (const auto& M : V) v += M.squaredNorm();
  return v;
}

double inner(const std::vector<MatrixXd>& A, const std::vector<MatrixXd>& B) {
  double v = 0.0;
  for (std::size_t k = 0; k < A.size(); ++k) v += A[k].cwiseProduct(B[k]).sum();
  return v;
}

// Largest alpha with X + alpha * D >= 0 (infinity if unbounded).
double max_step(const MatrixXd& X, const MatrixXd& D) {
  Eigen::LLT<MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  const MatrixXd& L = llt.matrixL();
  MatrixXd W = L.triangularView<Eigen::Lower>().solve(D);
  W = L.triangularView<Eigen::Lower>().solve(W.transpose()).transpose();
  W = 0.5 * (W + W.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(W, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

class Ipm {
 public:
  Ipm(std::vector<int> sizes, std::vector<MatrixXd> C, std::vector<Row> rows,
      const SolverSettings& settings)
      : sizes_(std::move(sizes)), C_(std::move(C)), rows_(std::move(rows)),
        settings_(settings) {
    nblocks_ = static_cast<int>(sizes_.size());
    m_ = static_cast<int>(rows_.size());
    b_.resize(m_);
    for (int j = 0; j < m_; ++j) b_(j) = rows_[j].rhs;
    by_block_.assign(nblocks_, {});
    for (int j = 0; j < m_; ++j) {
      for (const auto& t : rows_[j].terms) by_block_[t.block].push_back({j, &t.coeff});
    }
    total_dim_ = 0;
    for (int d : sizes_) total_dim_ += d;

    // Gram matrix of the constraint rows, G = A A^T, for projections onto
    // the primal affine space. Rows are independent after presolve.
    MatrixXd G = MatrixXd::Zero(m_, m_);
    for (int k = 0; k < nblocks_; ++k) {
      const auto& entries = by_block_[k];
      for (std::size_t a = 0; a < entries.size(); ++a) {
        for (std::size_t c = a; c < entries.size(); ++c) {
          const double v = entries[a].coeff->cwiseProduct(*entries[c].coeff).sum();
          G(entries[a].row, entries[c].row) += v;
          if (c != a) G(entries[c].row, entries[a].row) += v;
        }
      }
    }
    gram_.compute(G);
  }

  struct Result {
    std::vector<MatrixXd> X, Z;
    VectorXd y;
    SolverStatus status = SolverStatus::numerical_trouble;
    int iterations = 0;
  };

  Result run() {
    initialize();
    Result res;
    const double bnorm = b_.norm();
    const double cnorm = std::sqrt(frob2(C_));
    double best_merit = std::numeric_limits<double>::infinity();
    std::vector<MatrixXd> best_X, best_Z;
    VectorXd best_y;
    double best_relp = 0.0, best_reld = 0.0, best_gap = 0.0;
    int stall = 0;
    double peak_dobj = 1.0;

    for (int iter = 0; iter <= settings_.max_iters; ++iter) {
      res.iterations = iter;
      const VectorXd rp = b_ - apply_A(X_);
      std::vector<MatrixXd> Rd = C_;
      apply_At(y_, Rd, -1.0);
      for (int k = 0; k < nblocks_; ++k) Rd[k] -= Z_[k];

      const double pobj = inner(C_, X_);
      const double dobj = b_.dot(y_);
      const double relp = rp.norm() / (1.0 + bnorm);
      const double reld = std::sqrt(frob2(Rd)) / (1.0 + cnorm);
      const double gap = inner(X_, Z_);
      const double relgap =
          std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
      const double relcompl = gap / (1.0 + std::abs(pobj) + std::abs(dobj));
      const double mu = gap / total_dim_;

      if (settings_.verbose) {
        std::cerr << "ipm " << iter << " pobj=" << pobj << " dobj=" << dobj
                  << " relp=" << relp << " reld=" << reld << " gap=" << relgap
                  << " mu=" << mu << '\n';
      }

      if (relp <= settings_.feas_tol * 0.1 && reld <= settings_.feas_tol * 0.1 &&
          relgap <= settings_.gap_tol && relcompl <= settings_.gap_tol) {
        res.status = SolverStatus::optimal;
        break;
      }

      // Farkas-type certificates on the current iterate.
      if (dobj > 0.0) {
        std::vector<MatrixXd> AtyZ = C_;
        for (int k = 0; k < nblocks_; ++k) AtyZ[k] -= Rd[k];
        const double ratio = std::sqrt(frob2(AtyZ)) / dobj;
        if (ratio < kInfeasTol && relp > settings_.feas_tol) {
          res.status = SolverStatus::infeasible;
          break;
        }
        // A dual objective diverging on a nearly feasible path is progress
        // toward a certificate.
        if (relp < 1e-6 && reld < 1e-6 && dobj > 1.25 * peak_dobj) {
          peak_dobj = dobj;
          stall = 0;
        }
      }
      if (pobj < 0.0) {
        const double ax = apply_A(X_).norm();
        if (ax / -pobj < kInfeasTol && reld > settings_.feas_tol) {
          res.status = SolverStatus::unbounded;
          break;
        }
      }
      if (iter == settings_.max_iters) break;

      const double merit = std::max({relp, reld, relgap});
      if (merit < best_merit) {
        best_X = X_;
        best_Z = Z_;
        best_y = y_;
        best_relp = relp;
        best_reld = reld;
        best_gap = std::max(relgap, relcompl);
      }
      if (merit < 0.999 * best_merit) {
        best_merit = merit;
        stall = 0;
      } else if (++stall > 30) {
        break;
      }
      best_merit = std::min(best_merit, merit);

      if (!step(rp, Rd, mu)) break;
    }
    // Without convergence, hand back the least-bad iterate seen. Rank-deficient
    // optima (Dirac starts) stall the gap around 1e-7; a feasible iterate that
    // close is accepted.
    if (res.status == SolverStatus::numerical_trouble && !best_X.empty()) {
      X_ = best_X;
      Z_ = best_Z;
      y_ = best_y;
      if (best_relp <= settings_.feas_tol && best_reld <= settings_.feas_tol &&
          best_gap <= kStallGapTol) {
        res.status = SolverStatus::optimal;
      }
    }
    res.X = X_;
    res.Z = Z_;
    res.y = y_;
    return res;
  }

 private:
  static constexpr double kInfeasTol = 1e-7;
  static constexpr double kStallGapTol = 1e-6;

  void initialize() {
    X_.resize(nblocks_);
    Z_.resize(nblocks_);
    y_ = VectorXd::Zero(m_);
    for (int k = 0; k < nblocks_; ++k) {
      const double d = sizes_[k];
      double xi = std::max(10.0, std::sqrt(d));
      double eta = std::max(10.0, std::sqrt(d));
      for (const auto& e : by_block_[k]) {
        const double an = e.coeff->norm();
        xi = std::max(xi, d * (1.0 + std::abs(b_(e.row))) / (1.0 + an));
        eta = std::max(eta, an);
      }
      eta = std::max(eta, C_[k].norm());
      X_[k] = xi * MatrixXd::Identity(sizes_[k], sizes_[k]);
      Z_[k] = eta * MatrixXd::Identity(sizes_[k], sizes_[k]);
    }
  }

  VectorXd apply_A(const std::vector<MatrixXd>& X) const {
    VectorXd v = VectorXd::Zero(m_);
    for (int k = 0; k < nblocks_; ++k) {
      for (const auto& e : by_block_[k]) v(e.row) += e.coeff->cwiseProduct(X[k]).sum();
    }
    return v;
  }

  // Out += scale * A^T(y).
  void apply_At(const VectorXd& y, std::vector<MatrixXd>& out, double scale) const {
    for (int k = 0; k < nblocks_; ++k) {
      for (const auto& e : by_block_[k]) out[k] += (scale * y(e.row)) * *e.coeff;
    }
  }

  // Trace of A_j against a general (nonsymmetric) matrix, per row.
  VectorXd apply_A_general(const std::vector<MatrixXd>& G) const {
    VectorXd v = VectorXd::Zero(m_);
    for (int k = 0; k < nblocks_; ++k) {
      for (const auto& e : by_block_[k]) v(e.row) += e.coeff->cwiseProduct(G[k]).sum();
    }
    return v;
  }

  bool factor_schur() {
    MatrixXd M = MatrixXd::Zero(m_, m_);
    std::vector<MatrixXd> G;
    for (int k = 0; k < nblocks_; ++k) {
      const auto& entries = by_block_[k];
      if (sizes_[k] == 1) {
        const double w = X_[k](0, 0) * Zinv_[k](0, 0);
        for (const auto& ei : entries) {
          for (const auto& ej : entries) {
            M(ei.row, ej.row) += w * (*ei.coeff)(0, 0) * (*ej.coeff)(0, 0);
          }
        }
        continue;
      }
      G.resize(entries.size());
      for (std::size_t a = 0; a < entries.size(); ++a) {
        G[a] = X_[k] * *entries[a].coeff * Zinv_[k];
      }
      for (std::size_t a = 0; a < entries.size(); ++a) {
        for (std::size_t c = a; c < entries.size(); ++c) {
          const double v = entries[c].coeff->cwiseProduct(G[a]).sum();
          M(entries[a].row, entries[c].row) += v;
          if (c != a) M(entries[c].row, entries[a].row) += v;
        }
      }
    }
    M = 0.5 * (M + M.transpose());
    schur_ = M;
    llt_.compute(M);
    if (llt_.info() == Eigen::Success) {
      use_ldlt_ = false;
      return true;
    }
    const double reg = 1e-13 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    M.diagonal().array() += reg;
    llt_.compute(M);
    if (llt_.info() == Eigen::Success) {
      use_ldlt_ = false;
      return true;
    }
    ldlt_.compute(M);
    use_ldlt_ = true;
    return ldlt_.info() == Eigen::Success;
  }

  VectorXd schur_factor_solve(const VectorXd& rhs) const {
    return use_ldlt_ ? VectorXd(ldlt_.solve(rhs)) : VectorXd(llt_.solve(rhs));
  }

  // A few rounds of refinement against the unregularized matrix; the Schur
  // complement gets badly conditioned as blocks lose rank near the optimum.
  VectorXd schur_solve(const VectorXd& rhs) const {
    VectorXd x = schur_factor_solve(rhs);
    const double rn = rhs.norm();
    for (int it = 0; it < 3; ++it) {
      const VectorXd r = rhs - schur_ * x;
      if (r.norm() <= 1e-15 * rn) break;
      x += schur_factor_solve(r);
    }
    return x;
  }

  // Minimal-norm correction so that A(dX) = r exactly (up to roundoff in a
  // well-conditioned Gram solve). Keeps primal feasibility from drifting
  // when the Schur complement is nearly singular.
  void project_affine(std::vector<MatrixXd>& dX, const VectorXd& r) const {
    if (m_ == 0 || gram_.info() != Eigen::Success) return;
    for (int it = 0; it < 2; ++it) {
      const VectorXd res = r - apply_A(dX);
      const VectorXd w = gram_.solve(res);
      apply_At(w, dX, 1.0);
    }
  }

 public:
  // Moves X onto A(X) = b when that keeps every block within `floor` of PSD.
  void polish(std::vector<MatrixXd>& X, double floor) const {
    std::vector<MatrixXd> P = X;
    project_affine(P, b_);
    for (int k = 0; k < nblocks_; ++k) {
      P[k] = 0.5 * (P[k] + P[k].transpose());
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(P[k], Eigen::EigenvaluesOnly);
      if (es.eigenvalues()(0) < -floor) return;
    }
    X = std::move(P);
  }

 private:
  // Solves the Newton system for complementarity target Rc (block list).
  void direction(const VectorXd& rp, const std::vector<MatrixXd>& Rd,
                 const std::vector<MatrixXd>& Rc, std::vector<MatrixXd>& dX,
                 VectorXd& dy, std::vector<MatrixXd>& dZ) const {
    std::vector<MatrixXd> T(nblocks_);
    for (int k = 0; k < nblocks_; ++k) {
      T[k] = (Rc[k] - X_[k] * Rd[k]) * Zinv_[k];
    }
    const VectorXd rhs = rp - apply_A_general(T);
    dy = schur_solve(rhs);
    dZ = Rd;
    apply_At(dy, dZ, -1.0);
    dX.resize(nblocks_);
    for (int k = 0; k < nblocks_; ++k) {
      MatrixXd D = (Rc[k] - X_[k] * dZ[k]) * Zinv_[k];
      dX[k] = 0.5 * (D + D.transpose());
    }
    project_affine(dX, rp);
  }

  double step_length(const std::vector<MatrixXd>& V,
                     const std::vector<MatrixXd>& dV) const {
    double a = std::numeric_limits<double>::infinity();
    for (int k = 0; k < nblocks_; ++k) a = std::min(a, max_step(V[k], dV[k]));
    return a;
  }

  bool step(const VectorXd& rp, const std::vector<MatrixXd>& Rd, double mu) {
    Zinv_.resize(nblocks_);
    for (int k = 0; k < nblocks_; ++k) {
      Eigen::LLT<MatrixXd> llt(Z_[k]);
      if (llt.info() != Eigen::Success) return false;
      Zinv_[k] = llt.solve(MatrixXd::Identity(sizes_[k], sizes_[k]));
      Zinv_[k] = 0.5 * (Zinv_[k] + Zinv_[k].transpose());
    }
    if (!factor_schur()) return false;

    // Predictor.
    std::vector<MatrixXd> Rc(nblocks_);
    for (int k = 0; k < nblocks_; ++k) Rc[k] = -X_[k] * Z_[k];
    std::vector<MatrixXd> dXa, dZa;
    VectorXd dya;
    direction(rp, Rd, Rc, dXa, dya, dZa);
    const double ap = std::min(1.0, step_length(X_, dXa));
    const double ad = std::min(1.0, step_length(Z_, dZa));
    double mu_aff = 0.0;
    for (int k = 0; k < nblocks_; ++k) {
      mu_aff += (X_[k] + ap * dXa[k]).cwiseProduct(Z_[k] + ad * dZa[k]).sum();
    }
    mu_aff /= total_dim_;
    const double ratio = std::clamp(mu_aff / mu, 0.0, 1.0);
    const double sigma = std::max(ratio * ratio * ratio, 1e-12);

    // Corrector.
    for (int k = 0; k < nblocks_; ++k) {
      Rc[k] = sigma * mu * MatrixXd::Identity(sizes_[k], sizes_[k]) -
              X_[k] * Z_[k] - dXa[k] * dZa[k];
    }
    std::vector<MatrixXd> dX, dZ;
    VectorXd dy;
    direction(rp, Rd, Rc, dX, dy, dZ);

    const double tau = 0.98;
    const double alpha_p = std::min(1.0, tau * step_length(X_, dX));
    const double alpha_d = std::min(1.0, tau * step_length(Z_, dZ));
    if (settings_.verbose) {
      std::cerr << "    step ap=" << alpha_p << " ad=" << alpha_d << " sigma=" << sigma
                << (use_ldlt_ ? " ldlt" : " llt") << '\n';
    }
    if (!(alpha_p > 0.0) || !(alpha_d > 0.0)) return false;
    for (int k = 0; k < nblocks_; ++k) {
      X_[k] += alpha_p * dX[k];
      Z_[k] += alpha_d * dZ[k];
      X_[k] = 0.5 * (X_[k] + X_[k].transpose());
      Z_[k] = 0.5 * (Z_[k] + Z_[k].transpose());
    }
    y_ += alpha_d * dy;
    return true;
  }

  std::vector<int> sizes_;
  std::vector<MatrixXd> C_;
  std::vector<Row> rows_;
  SolverSettings settings_;
  int nblocks_ = 0;
  int m_ = 0;
  double total_dim_ = 0;
  VectorXd b_;
  std::vector<std::vector<BlockEntry>> by_block_;

  std::vector<MatrixXd> X_, Z_, Zinv_;
  VectorXd y_;
  MatrixXd schur_;
  Eigen::LLT<MatrixXd> gram_;
  Eigen::LLT<MatrixXd> llt_;
  Eigen::LDLT<MatrixXd> ldlt_;
  bool use_ldlt_ = false;
};

// svec coordinates of a row over the concatenated blocks.
VectorXd row_vector(const Row& r, const std::vector<int>& offsets, int total) {
  VectorXd v = VectorXd::Zero(total);
  for (const auto& t : r.terms) {
    const VectorXd s = svec(t.coeff);
    v.segment(offsets[t.block], s.size()) += s;
  }
  return v;
}

struct Presolved {
  std::vector<int> kept;  // indices into rows
  bool inconsistent = false;
};

Presolved remove_dependent_rows(const std::vector<Row>& rows,
                                const std::vector<int>& sizes) {
  Presolved out;
  const int m = static_cast<int>(rows.size());
  std::vector<int> offsets(sizes.size());
  int total = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    offsets[k] = total;
    total += sizes[k] * (sizes[k] + 1) / 2;
  }
  if (m == 0) return out;
  MatrixXd At(total, m);
  VectorXd b(m);
  for (int j = 0; j < m; ++j) {
    At.col(j) = row_vector(rows[j], offsets, total);
    b(j) = rows[j].rhs;
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(At);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  const auto& perm = qr.colsPermutation().indices();
  std::vector<int> kept;
  std::vector<int> dropped;
  for (int i = 0; i < m; ++i) {
    (i < rank ? kept : dropped).push_back(perm(i));
  }
  std::sort(kept.begin(), kept.end());
  if (!dropped.empty()) {
    MatrixXd Ak(total, kept.size());
    VectorXd bk(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      Ak.col(i) = At.col(kept[i]);
      bk(i) = b(kept[i]);
    }
    Eigen::ColPivHouseholderQR<MatrixXd> qk(Ak);
    for (int j : dropped) {
      const VectorXd c = qk.solve(At.col(j));
      const double expected = kept.empty() ? 0.0 : c.dot(bk);
      if (std::abs(expected - b(j)) > 1e-8 * (1.0 + std::abs(b(j)))) {
        out.inconsistent = true;
      }
    }
  }
  out.kept = std::move(kept);
  return out;
}

}  // namespace

SdpSolution solve(const SdpProblem& problem, const SolverSettings& settings) {
  problem.validate();
  Standardized s = standardize(problem);
  const int m = static_cast<int>(s.rows.size());

  // Row normalization.
  std::vector<double> row_scale(m, 1.0);
  for (int j = 0; j < m; ++j) {
    double nrm2 = 0.0;
    for (const auto& t : s.rows[j].terms) nrm2 += t.coeff.squaredNorm();
    const double nrm = std::sqrt(nrm2);
    if (nrm > 0.0) {
      row_scale[j] = nrm;
      for (auto& t : s.rows[j].terms) t.coeff /= nrm;
      s.rows[j].rhs /= nrm;
    }
  }

  SdpSolution sol;
  const int num_orig = s.num_original_blocks;
  const auto finish_infeasible = [&](SolverStatus status) {
    sol.status = status;
    for (int k = 0; k < num_orig; ++k) {
      const int d = problem.blocks()[k].size;
      sol.X.push_back(MatrixXd::Zero(d, d));
    }
    sol.y_eq = VectorXd::Zero(s.num_eq);
    sol.y_ineq = VectorXd::Zero(m - s.num_eq);
    const Residuals r = evaluate_residuals(problem, sol.X);
    sol.max_eq_residual = r.max_eq_residual;
    sol.max_ineq_violation = r.max_ineq_violation;
    sol.min_block_eigenvalue = r.min_block_eigenvalue;
    return sol;
  };

  const Presolved pre = remove_dependent_rows(s.rows, s.sizes);
  if (pre.inconsistent) return finish_infeasible(SolverStatus::infeasible);

  std::vector<Row> rows;
  rows.reserve(pre.kept.size());
  for (int j : pre.kept) rows.push_back(s.rows[j]);

  // Global scaling of b and C.
  double bmax = 0.0;
  for (const auto& r : rows) bmax = std::max(bmax, std::abs(r.rhs));
  double cmax = 0.0;
  for (const auto& C : s.C) cmax = std::max(cmax, C.norm());
  const double bscale = std::max(1.0, bmax);
  const double cscale = std::max(1.0, cmax);
  for (auto& r : rows) r.rhs /= bscale;
  std::vector<MatrixXd> C = s.C;
  for (auto& Ck : C) Ck /= cscale;

  SolverSettings inner = settings;
  Ipm ipm(s.sizes, C, rows, inner);
  Ipm::Result res = ipm.run();
  if (res.status != SolverStatus::infeasible && res.status != SolverStatus::unbounded) {
    ipm.polish(res.X, 0.1 * settings.feas_tol / bscale);
  }

  sol.iterations = res.iterations;
  if (res.status == SolverStatus::infeasible ||
      res.status == SolverStatus::unbounded) {
    SdpSolution out = finish_infeasible(res.status);
    out.iterations = res.iterations;
    return out;
  }

  for (int k = 0; k < num_orig; ++k) {
    const MatrixXd& T = problem.blocks()[k].face;
    if (T.size() == 0) {
      sol.X.push_back(bscale * res.X[k]);
    } else {
      sol.X.push_back(bscale * (T * res.X[k] * T.transpose()));
    }
  }
  VectorXd y_full = VectorXd::Zero(m);
  for (std::size_t i = 0; i < pre.kept.size(); ++i) {
    const int j = pre.kept[i];
    y_full(j) = res.y(static_cast<Eigen::Index>(i)) * cscale / row_scale[j];
  }
  sol.y_eq = y_full.head(s.num_eq);
  sol.y_ineq = y_full.tail(m - s.num_eq);

  sol.objective = problem.objective_value(sol.X);
  double dual = 0.0;
  for (int j = 0; j < s.num_eq; ++j) dual += y_full(j) * problem.equalities()[j].rhs;
  for (int j = s.num_eq; j < m; ++j) {
    dual += y_full(j) * problem.inequalities()[j - s.num_eq].rhs;
  }
  sol.dual_objective = dual;

  const Residuals r = evaluate_residuals(problem, sol.X);
  sol.max_eq_residual = r.max_eq_residual;
  sol.max_ineq_violation = r.max_ineq_violation;
  sol.min_block_eigenvalue = r.min_block_eigenvalue;

  const bool feasible = r.max_eq_residual <= settings.feas_tol &&
                        r.max_ineq_violation <= settings.feas_tol &&
                        r.min_block_eigenvalue >= -settings.feas_tol;
  sol.status = (res.status == SolverStatus::optimal && feasible)
                   ? SolverStatus::optimal
                   : SolverStatus::numerical_trouble;
  return sol;
}

}  // namespace momsyn::sdp
