#include "momsyn/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace momsyn::duality {

namespace {

constexpr double kThreshold = 1e-9;

double threshold_for(const MatrixXd& M) {
  return kThreshold * std::max(1.0, M.norm());
}

double max_eigenvalue(const MatrixXd& S) {
  if (S.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

double min_eig_or_inf(const MatrixXd& S) {
  if (S.size() == 0) return std::numeric_limits<double>::infinity();
  return min_eigenvalue(S);
}

MatrixXd inverse_pd(const MatrixXd& S, const char* what) {
  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() != Eigen::Success || min_eigenvalue(S) <= 0.0) {
    throw DefinitenessError(std::string(what) + " is not positive definite");
  }
  MatrixXd inv = llt.solve(MatrixXd::Identity(S.rows(), S.cols()));
  return 0.5 * (inv + inv.transpose());
}

// Orthonormal basis of the complement of unit vector q.
MatrixXd complement_basis(const VectorXd& q) {
  Eigen::HouseholderQR<MatrixXd> qr(q);
  const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(q.size(), q.size());
  return Q.rightCols(q.size() - 1);
}

void check_cert_dims(const MatrixXd& Pm, const MatrixXd& K, const SystemStage& stage,
                     const char* what) {
  const int n = stage.n();
  require_shape(Pm, 1 + n, 1 + n, std::string(what) + ": P");
  require_shape(K, stage.m(), 1 + n, std::string(what) + ": K");
}

}  // namespace

StabilityCertificate StabilityCertificate::from_primal(const MatrixXd& P,
                                                       const MatrixXd& K) {
  StabilityCertificate c;
  c.P = symmetrized(P, "P");
  c.K = K;
  c.P_tilde = inverse_pd(c.P, "P");
  c.K_tilde = K * c.P_tilde;
  return c;
}

StabilityCertificate StabilityCertificate::from_dual(const MatrixXd& P_tilde,
                                                     const MatrixXd& K_tilde) {
  StabilityCertificate c;
  c.P_tilde = symmetrized(P_tilde, "P_tilde");
  c.K_tilde = K_tilde;
  c.P = inverse_pd(c.P_tilde, "P_tilde");
  c.K = K_tilde * c.P;
  return c;
}

MatrixXd closed_loop_transition(const SystemStage& stage, const MatrixXd& K) {
  const int n = stage.n();
  require_shape(K, stage.m(), 1 + n, "closed_loop_transition: K");
  MatrixXd G = MatrixXd::Zero(1 + n, 1 + n);
  G(0, 0) = 1.0;
  G.block(1, 0, n, 1) = stage.f + stage.B * K.col(0);
  G.block(1, 1, n, n) = stage.A + stage.B * K.rightCols(n);
  return G;
}

LmiCheck check_primal_lmi(const StabilityCertificate& cert, const SystemStage& stage) {
  check_cert_dims(cert.P, cert.K, stage, "check_primal_lmi");
  const int n = stage.n();
  const MatrixXd G = closed_loop_transition(stage, cert.K);
  MatrixXd L = G.transpose() * cert.P * G - cert.P;
  L = 0.5 * (L + L.transpose());

  LmiCheck out;
  const double thr = threshold_for(cert.P);
  const double p_min = min_eigenvalue(cert.P);

  // Equilibrium direction (1, x*), x* = (I - A_K)^-1 f_K.
  const MatrixXd IminusA = MatrixXd::Identity(n, n) - G.block(1, 1, n, n);
  Eigen::FullPivLU<MatrixXd> lu(IminusA);
  if (!lu.isInvertible()) {
    out.feasible = false;
    out.margin = -std::numeric_limits<double>::infinity();
    out.kernel_residual = std::numeric_limits<double>::infinity();
    return out;
  }
  VectorXd q(1 + n);
  q << 1.0, lu.solve(VectorXd(G.block(1, 0, n, 1)));
  q.normalize();
  out.kernel_residual = (L * q).norm();
  const MatrixXd Qc = complement_basis(q);
  const double strict = -max_eigenvalue(Qc.transpose() * L * Qc);
  out.margin = std::min(strict, p_min);
  out.feasible = out.kernel_residual <= thr && strict >= -thr && p_min > thr;
  return out;
}

LmiCheck check_dual_lmi(const StabilityCertificate& cert, const SystemStage& stage) {
  check_cert_dims(cert.P_tilde, cert.K, stage, "check_dual_lmi");
  const int n = stage.n();
  const MatrixXd G = closed_loop_transition(stage, cert.K);
  MatrixXd L = cert.P_tilde - G * cert.P_tilde * G.transpose();
  L = 0.5 * (L + L.transpose());

  LmiCheck out;
  const double thr = threshold_for(cert.P_tilde);
  const double p_min = min_eigenvalue(cert.P_tilde);
  // The constant coordinate e0 is always a null direction of the form.
  out.kernel_residual = L.col(0).norm();
  const double strict = min_eig_or_inf(L.bottomRightCorner(n, n));
  out.margin = std::min(strict, p_min);
  out.feasible = out.kernel_residual <= thr && strict >= -thr && p_min > thr;
  return out;
}

DualizationResult dualization_check(const MatrixXd& M, const MatrixXd& W) {
  const Eigen::Index p = W.cols();
  const Eigen::Index q = W.rows();
  require_shape(M, p + q, p + q, "dualization_check: M (W is " +
                                     std::to_string(q) + "x" + std::to_string(p) + ")");
  const MatrixXd Ms = symmetrized(M, "M");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Ms);
  const VectorXd absev = es.eigenvalues().cwiseAbs();
  if (absev.minCoeff() == 0.0 || absev.maxCoeff() / absev.minCoeff() > 1e12) {
    throw SingularMatrixError("dualization_check: M is singular");
  }
  MatrixXd Minv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                  es.eigenvectors().transpose();
  Minv = 0.5 * (Minv + Minv.transpose());

  MatrixXd IW(p + q, p);
  IW << MatrixXd::Identity(p, p), W;
  MatrixXd WtI(p + q, q);
  WtI << W.transpose(), -MatrixXd::Identity(q, q);

  const double thr_p = threshold_for(Ms);
  const double thr_d = threshold_for(Minv);
  const double primal_lmi = max_eigenvalue(IW.transpose() * Ms * IW);
  const double primal_strict = min_eig_or_inf(Ms.bottomRightCorner(q, q));
  const double dual_lmi = min_eig_or_inf(WtI.transpose() * Minv * WtI);
  const double dual_strict = max_eigenvalue(Minv.topLeftCorner(p, p));

  DualizationResult r;
  r.primal_holds = primal_lmi <= thr_p && primal_strict > thr_p;
  r.dual_holds = dual_lmi >= -thr_d && dual_strict < -thr_d;
  r.primal_margin = std::min(-primal_lmi, primal_strict);
  r.dual_margin = std::min(dual_lmi, -dual_strict);
  return r;
}

MomentMatrix transform_to_moments(const StabilityCertificate& cert) {
  const MatrixXd& Pt = cert.P_tilde;
  const MatrixXd& Kt = cert.K_tilde;
  if (Pt.rows() != Pt.cols() || Kt.cols() != Pt.rows()) {
    throw DimensionError("transform_to_moments: P_tilde / K_tilde shapes disagree");
  }
  const MatrixXd Pinv = inverse_pd(Pt, "P_tilde");
  const int n = static_cast<int>(Pt.rows()) - 1;
  const int m = static_cast<int>(Kt.rows());
  MatrixXd S(1 + n + m, 1 + n + m);
  S.topLeftCorner(1 + n, 1 + n) = Pt;
  S.bottomLeftCorner(m, 1 + n) = Kt;
  S.topRightCorner(1 + n, m) = Kt.transpose();
  S.bottomRightCorner(m, m) = Kt * Pinv * Kt.transpose();
  return MomentMatrix(S, n, m);
}

MomentMatrix project_to_transform_image(const MomentMatrix& sigma, double rel_tol) {
  const int n = sigma.n();
  const MatrixXd S = sigma.data().topLeftCorner(1 + n, 1 + n);
  const MatrixXd U = sigma.input_state_block();
  MatrixXd out = sigma.data();
  out.bottomRightCorner(sigma.m(), sigma.m()) = U * symmetric_pinv(S, rel_tol) * U.transpose();
  return MomentMatrix(out, n, sigma.m());
}

StabilityCertificate certificate_from_moments(const MomentMatrix& sigma) {
  const int n = sigma.n();
  return StabilityCertificate::from_dual(sigma.data().topLeftCorner(1 + n, 1 + n),
                                         sigma.input_state_block());
}

RiccatiResult riccati_lqr(const std::vector<SystemStage>& stages,
                          const std::vector<MatrixXd>& costs) {
  const std::size_t N = stages.size();
  if (costs.size() != N + 1) {
    throw DimensionError("riccati_lqr: need N+1 = " + std::to_string(N + 1) +
                         " costs, got " + std::to_string(costs.size()));
  }
  const auto& last = costs.back();
  const int d = static_cast<int>(last.rows());
  int n = 0, m = 0;
  if (N > 0) {
    n = stages.front().n();
    m = stages.front().m();
  } else {
    // Infer from the cost only when there are no stages; assume m = d - 1 - n
    // is not recoverable, so treat the whole tail after (1, x) as input-free.
    n = d - 1;
    m = 0;
  }
  if (N > 0 && d != 1 + n + m) {
    throw DimensionError("riccati_lqr: cost size does not match stage dims");
  }
  for (const auto& c : costs) require_shape(c, d, d, "riccati_lqr: cost");

  const int k = 1 + n;
  RiccatiResult res;
  res.values.resize(N + 1);

  // Terminal stage: minimize over u_N when it carries a definite cost.
  MatrixXd V = last.topLeftCorner(k, k);
  if (m > 0) {
    const MatrixXd Ruu = last.bottomRightCorner(m, m);
    const MatrixXd Ruz = last.bottomLeftCorner(m, k);
    if (Ruu.norm() > 0.0) {
      Eigen::LLT<MatrixXd> llt(Ruu);
      if (llt.info() != Eigen::Success) {
        throw DefinitenessError("riccati_lqr: singular terminal input cost");
      }
      const MatrixXd Kt = -llt.solve(Ruz);
      res.terminal_gain = Kt;
      V += Ruz.transpose() * Kt;
    } else if (Ruz.norm() > 0.0) {
      throw DefinitenessError("riccati_lqr: terminal cost linear in u");
    }
  }
  res.values[N] = 0.5 * (V + V.transpose());

  res.gains.resize(N);
  for (std::size_t tt = N; tt-- > 0;) {
    const SystemStage& st = stages[tt];
    const MatrixXd& R = costs[tt];
    MatrixXd Az = MatrixXd::Zero(k, k);
    Az(0, 0) = 1.0;
    Az.block(1, 0, n, 1) = st.f;
    Az.block(1, 1, n, n) = st.A;
    MatrixXd Bz = MatrixXd::Zero(k, m);
    Bz.bottomRows(n) = st.B;

    const MatrixXd Qzz = R.topLeftCorner(k, k) + Az.transpose() * V * Az;
    const MatrixXd Quz = R.bottomLeftCorner(m, k) + Bz.transpose() * V * Az;
    const MatrixXd Quu = R.bottomRightCorner(m, m) + Bz.transpose() * V * Bz;
    Eigen::LLT<MatrixXd> llt(0.5 * (Quu + Quu.transpose()));
    if (llt.info() != Eigen::Success || min_eigenvalue(Quu) <= 0.0) {
      throw DefinitenessError("riccati_lqr: singular input cost at stage " +
                              std::to_string(tt));
    }
    const MatrixXd K = -llt.solve(Quz);
    res.gains[tt] = K;
    const double noise = (V.bottomRightCorner(n, n) * st.sigma_w).trace();
    V = Qzz + Quz.transpose() * K;
    V = 0.5 * (V + V.transpose());
    V(0, 0) += noise;
    res.values[tt] = V;
  }
  return res;
}

MatrixXd dare_gain(const MatrixXd& A, const MatrixXd& B, const MatrixXd& R,
                   const MatrixXd& P) {
  const MatrixXd S = R + B.transpose() * P * B;
  return -S.llt().solve(B.transpose() * P * A);
}

MatrixXd solve_dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                    const MatrixXd& R, double tol, int max_iters) {
  MatrixXd P = Q;
  for (int it = 0; it < max_iters; ++it) {
    const MatrixXd K = dare_gain(A, B, R, P);
    MatrixXd next = Q + A.transpose() * P * (A + B * K);
    next = 0.5 * (next + next.transpose());
    const double change = (next - P).norm();
    P = next;
    if (change <= tol * std::max(1.0, P.norm())) return P;
  }
  throw std::runtime_error("solve_dare: no convergence");
}

double spectral_radius(const MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  return A.eigenvalues().cwiseAbs().maxCoeff();
}

MatrixXd discrete_lyapunov(const MatrixXd& A, const MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  require_shape(A, n, n, "discrete_lyapunov: A");
  require_shape(Q, n, n, "discrete_lyapunov: Q");
  // vec(A X A^T) = (A kron A) vec(X)
  MatrixXd K(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K.block(i * n, j * n, n, n) = A(i, j) * A;
  const MatrixXd lhs = MatrixXd::Identity(n * n, n * n) - K;
  const VectorXd vq = Eigen::Map<const VectorXd>(Q.data(), n * n);
  const VectorXd vx = lhs.partialPivLu().solve(vq);
  MatrixXd X = Eigen::Map<const MatrixXd>(vx.data(), n, n);
  return 0.5 * (X + X.transpose());
}

double h2_norm_squared(const SystemStage& stage, const MatrixXd& C,
                       const MatrixXd& B2, const MatrixXd& K2) {
  const int n = stage.n();
  require_shape(K2, stage.m(), n, "h2_norm_squared: K2");
  if (B2.rows() != n) throw DimensionError("h2_norm_squared: B2 rows != n");
  if (C.cols() != n) throw DimensionError("h2_norm_squared: C cols != n");
  const MatrixXd Acl = stage.A + stage.B * K2;
  if (spectral_radius(Acl) >= 1.0) {
    throw UnstableError("h2_norm_squared: closed loop is not stable");
  }
  const MatrixXd X = discrete_lyapunov(Acl, B2 * B2.transpose());
  return (C * X * C.transpose()).trace();
}

}  // namespace momsyn::duality
