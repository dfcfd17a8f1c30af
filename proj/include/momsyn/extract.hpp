#pragma once

// Recovery of the affine stochastic policy u = k1 + K2 x + v that realizes a
// given sequence of moment matrices, and the exact forward moment recursion
// of such a policy.

#include <stdexcept>
#include <string>
#include <vector>

#include "momsyn/core.hpp"

namespace momsyn::extract {

// The input is not a valid moment matrix: the u-blocks cannot be explained
// by an affine policy plus independent excitation.
class ConsistencyError : public std::runtime_error {
 public:
  ConsistencyError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// [k1 K2] is the minimum-norm solution of [s31 S32] = K [s11 s12; s21 S22]
// (eigendecomposition pseudoinverse, relative cutoff tol) and
// sigma_v = S33 - K [s31 S32]^T, clipped to the PSD cone.
AffinePolicy extract_policy(const MomentMatrix& sigma, double tol = 1e-9);

enum class PolicyKind { deterministic, stochastic };

const char* to_string(PolicyKind k);

// Deterministic iff max_t trace(sigma_v_t) <= det_tol.
PolicyKind classify(const std::vector<AffinePolicy>& policies,
                    double det_tol = 1e-4);

double max_excitation_trace(const std::vector<AffinePolicy>& policies);

// Joint moment of (1, x, u) when x has state moment `state` and u follows
// the policy.
MomentMatrix close_loop(const StateMoment& state, const AffinePolicy& policy);

// Exact closed-loop moments Sigma_0..Sigma_{P-1} for P policies. `stages`
// holds P-1 entries, or a single stage shared by every transition.
std::vector<MomentMatrix> reconstruct_moments(
    const StateMoment& initial, const std::vector<AffinePolicy>& policies,
    const std::vector<SystemStage>& stages);

}  // namespace momsyn::extract
