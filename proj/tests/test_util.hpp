#pragma once

// Random instance generators shared by the test binaries.

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "momsyn/core.hpp"
#include "momsyn/duality.hpp"

namespace momsyn::testing_util {

inline MatrixXd random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> g;
  MatrixXd M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = g(rng);
  return M;
}

inline MatrixXd random_symmetric(std::mt19937_64& rng, int d) {
  const MatrixXd M = random_matrix(rng, d, d);
  return 0.5 * (M + M.transpose());
}

inline MatrixXd random_pd(std::mt19937_64& rng, int d, double floor = 0.1) {
  const MatrixXd M = random_matrix(rng, d, d);
  return M * M.transpose() / d + floor * MatrixXd::Identity(d, d);
}

// Full-rank realized moment matrix with sigma11 = 1.
inline MomentMatrix random_moment(std::mt19937_64& rng, int n, int m) {
  const int d = 1 + n + m;
  const VectorXd mean = random_matrix(rng, n + m, 1);
  const MatrixXd cov = random_pd(rng, n + m);
  MatrixXd S(d, d);
  S(0, 0) = 1.0;
  S.block(0, 1, 1, n + m) = mean.transpose();
  S.block(1, 0, n + m, 1) = mean;
  S.block(1, 1, n + m, n + m) = cov + mean * mean.transpose();
  return MomentMatrix(S, n, m);
}

// A with spectral radius rescaled to Uniform(0.3, 0.95).
inline MatrixXd random_stable(std::mt19937_64& rng, int n) {
  MatrixXd A = random_matrix(rng, n, n);
  const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
  std::uniform_real_distribution<double> u(0.3, 0.95);
  if (rho > 0) A *= u(rng) / rho;
  return A;
}

inline SystemStage random_stage(std::mt19937_64& rng, int n, int m,
                                bool noise = true) {
  return SystemStage(random_matrix(rng, n, 1), random_matrix(rng, n, n),
                     random_matrix(rng, n, m),
                     noise ? MatrixXd(random_pd(rng, n, 0.05))
                           : MatrixXd(MatrixXd::Zero(n, n)));
}

struct LoopInstance {
  SystemStage stage;
  MatrixXd K;  // [k1 K2]
  MatrixXd P;
};

// Stable closed loop with a Lyapunov certificate centred on its equilibrium:
// P = c e0 e0^T + [-x*^T; I] P22 [-x* I] with A_K^T P22 A_K - P22 = -Q.
inline LoopInstance random_certified_loop(std::mt19937_64& rng, int n, int m) {
  const MatrixXd Acl = random_stable(rng, n);
  const MatrixXd B = random_matrix(rng, n, m);
  const MatrixXd K2 = random_matrix(rng, m, n);
  const VectorXd f = random_matrix(rng, n, 1);
  const VectorXd k1 = random_matrix(rng, m, 1);
  LoopInstance inst{SystemStage(f, Acl - B * K2, B, MatrixXd::Zero(n, n)),
                    MatrixXd(m, 1 + n), MatrixXd()};
  inst.K << k1, K2;
  const VectorXd fk = f + B * k1;
  const VectorXd xs = (MatrixXd::Identity(n, n) - Acl).lu().solve(fk);
  const MatrixXd P22 = duality::discrete_lyapunov(Acl.transpose(), random_pd(rng, n, 0.5));
  MatrixXd T(n, 1 + n);
  T << -xs, MatrixXd::Identity(n, n);
  inst.P = T.transpose() * P22 * T;
  std::uniform_real_distribution<double> u(0.5, 2.0);
  inst.P(0, 0) += u(rng);
  return inst;
}

}  // namespace momsyn::testing_util
