#pragma once

// Lyapunov-certificate view of the moment program and classical reference
// computations (Riccati recursion, discrete Lyapunov equation, H2 norm).
//
// Affine closed loops act on the augmented state (1, x):
//   G_K = [1 0; f + B k1, A + B K2].
// G_K always has eigenvalue 1 along the constant coordinate, so the primal
// and dual inequalities are only semidefinite along one structural
// direction; margins are reported on the complement of that direction.

#include <optional>
#include <stdexcept>
#include <vector>

#include "momsyn/core.hpp"

namespace momsyn::duality {

class UnstableError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SingularMatrixError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct StabilityCertificate {
  MatrixXd P;        // (1+n) x (1+n), may be empty
  MatrixXd P_tilde;  // (1+n) x (1+n), may be empty
  MatrixXd K;        // [k1 K2], m x (1+n)
  MatrixXd K_tilde;  // K * P_tilde, m x (1+n)

  // Fills P_tilde = P^-1 and K_tilde = K P_tilde.
  static StabilityCertificate from_primal(const MatrixXd& P, const MatrixXd& K);
  // Fills P = P_tilde^-1 and K = K_tilde P_tilde^-1.
  static StabilityCertificate from_dual(const MatrixXd& P_tilde,
                                        const MatrixXd& K_tilde);
};

struct LmiCheck {
  bool feasible = false;
  // min(strict part of the inequality, extreme eigenvalue of P or P_tilde);
  // positive when the certificate holds with room to spare.
  double margin = 0.0;
  // Norm of the inequality matrix applied to its structural kernel
  // direction; must vanish for the inequality to hold.
  double kernel_residual = 0.0;
};

// Closed-loop augmented transition G_K.
MatrixXd closed_loop_transition(const SystemStage& stage, const MatrixXd& K);

// G_K^T P G_K - P <= 0 and P > 0.
LmiCheck check_primal_lmi(const StabilityCertificate& cert, const SystemStage& stage);
// P_tilde - G_K P_tilde G_K^T >= 0 and P_tilde > 0.
LmiCheck check_dual_lmi(const StabilityCertificate& cert, const SystemStage& stage);

struct DualizationResult {
  bool primal_holds = false;
  bool dual_holds = false;
  double primal_margin = 0.0;
  double dual_margin = 0.0;
};

// M is (p+q) x (p+q), W is q x p.
//   primal: [I;W]^T M [I;W] <= 0,  [0;I]^T M [0;I] > 0
//   dual:   [W^T;-I]^T M^-1 [W^T;-I] >= 0,  [I;0]^T M^-1 [I;0] < 0
DualizationResult dualization_check(const MatrixXd& M, const MatrixXd& W);

// Sigma = [P_tilde, K_tilde^T; K_tilde, K_tilde P_tilde^-1 K_tilde^T].
MomentMatrix transform_to_moments(const StabilityCertificate& cert);

// Replaces Sigma_33 by U pinv(S) U^T (U = [s31 S32], S the (1,x) block),
// the closest point on the image of transform_to_moments along Sigma_33.
MomentMatrix project_to_transform_image(const MomentMatrix& sigma,
                                        double rel_tol = 1e-12);

// Certificate read off a moment matrix: P_tilde = S, K_tilde = U.
StabilityCertificate certificate_from_moments(const MomentMatrix& sigma);

struct RiccatiResult {
  // u_t = k1_t + K2_t x_t, stored as [k1 K2] for t = 0..N-1.
  std::vector<MatrixXd> gains;
  // Optimal input at the final stage when its input cost is positive definite.
  std::optional<MatrixXd> terminal_gain;
  // Cost-to-go z^T V_t z on z = (1, x), t = 0..N; noise enters V_t(0,0).
  std::vector<MatrixXd> values;
};

// Backward recursion on the (1+n)-augmented system. costs holds N+1 forms.
RiccatiResult riccati_lqr(const std::vector<SystemStage>& stages,
                          const std::vector<MatrixXd>& costs);

// Stabilizing solution of P = Q + A^T P A - A^T P B (R + B^T P B)^-1 B^T P A.
// Returns P; the gain is K = -(R + B^T P B)^-1 B^T P A (u = K x).
MatrixXd solve_dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                    const MatrixXd& R, double tol = 1e-12, int max_iters = 100000);
MatrixXd dare_gain(const MatrixXd& A, const MatrixXd& B, const MatrixXd& R,
                   const MatrixXd& P);

double spectral_radius(const MatrixXd& A);

// X = A X A^T + Q via the Kronecker-vectorized linear system.
MatrixXd discrete_lyapunov(const MatrixXd& A, const MatrixXd& Q);

// trace(C X C^T), X = (A + B K2) X (A + B K2)^T + B2 B2^T.
double h2_norm_squared(const SystemStage& stage, const MatrixXd& C,
                       const MatrixXd& B2, const MatrixXd& K2);

}  // namespace momsyn::duality
