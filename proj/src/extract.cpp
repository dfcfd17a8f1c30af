#include "momsyn/extract.hpp"

#include <algorithm>

namespace momsyn::extract {

namespace {
constexpr double kClipFloor = 1e-9;
}  // namespace

AffinePolicy extract_policy(const MomentMatrix& sigma, double tol) {
  const int n = sigma.n();
  const MatrixXd S = sigma.data().topLeftCorner(1 + n, 1 + n);
  const MatrixXd U = sigma.input_state_block();
  const MatrixXd K = U * symmetric_pinv(S, tol);

  MatrixXd V = sigma.Sigma33() - K * U.transpose();
  V = 0.5 * (V + V.transpose());
  const double scale = std::max(1.0, sigma.data().norm());
  const double lmin = min_eigenvalue(V);
  if (lmin < -kClipFloor * scale) {
    throw ConsistencyError("extract_policy: excitation covariance indefinite", -lmin);
  }

  AffinePolicy policy;
  policy.k1 = K.col(0);
  policy.K2 = K.rightCols(n);
  policy.sigma_v = psd_clip(V);

  // u-blocks rebuilt from the policy must match the input.
  const MatrixXd U_rebuilt = K * S;
  const MatrixXd S33_rebuilt = K * S * K.transpose() + policy.sigma_v;
  const double residual = std::max((U_rebuilt - U).norm(),
                                   (S33_rebuilt - sigma.Sigma33()).norm());
  if (residual > 10.0 * tol * scale) {
    throw ConsistencyError("extract_policy: u-blocks not realizable", residual);
  }
  return policy;
}

const char* to_string(PolicyKind k) {
  return k == PolicyKind::deterministic ? "deterministic" : "stochastic";
}

double max_excitation_trace(const std::vector<AffinePolicy>& policies) {
  double worst = 0.0;
  for (const auto& p : policies) worst = std::max(worst, p.sigma_v.trace());
  return worst;
}

PolicyKind classify(const std::vector<AffinePolicy>& policies, double det_tol) {
  return max_excitation_trace(policies) <= det_tol ? PolicyKind::deterministic
                                                   : PolicyKind::stochastic;
}

MomentMatrix close_loop(const StateMoment& state, const AffinePolicy& policy) {
  const int n = state.n();
  const int m = policy.m();
  if (policy.n() != n || policy.k1.size() != m) {
    throw DimensionError("close_loop: policy is for n=" + std::to_string(policy.n()) +
                         " but state moment has n=" + std::to_string(n));
  }
  require_shape(policy.sigma_v, m, m, "close_loop: sigma_v");
  const MatrixXd K = policy.gain();
  const MatrixXd& S = state.data();
  MatrixXd out(1 + n + m, 1 + n + m);
  out.topLeftCorner(1 + n, 1 + n) = S;
  out.bottomLeftCorner(m, 1 + n) = K * S;
  out.topRightCorner(1 + n, m) = S * K.transpose();
  out.bottomRightCorner(m, m) = K * S * K.transpose() + policy.sigma_v;
  return MomentMatrix(out, n, m);
}

std::vector<MomentMatrix> reconstruct_moments(
    const StateMoment& initial, const std::vector<AffinePolicy>& policies,
    const std::vector<SystemStage>& stages) {
  if (policies.empty()) return {};
  const std::size_t transitions = policies.size() - 1;
  if (stages.size() != transitions && !(stages.size() == 1)) {
    if (!(transitions == 0 && stages.empty())) {
      throw DimensionError("reconstruct_moments: " + std::to_string(policies.size()) +
                           " policies need " + std::to_string(transitions) +
                           " stages, got " + std::to_string(stages.size()));
    }
  }
  std::vector<MomentMatrix> out;
  out.reserve(policies.size());
  StateMoment state = initial;
  for (std::size_t t = 0; t < policies.size(); ++t) {
    out.push_back(close_loop(state, policies[t]));
    if (t < transitions) {
      const SystemStage& st = stages.size() == 1 ? stages.front() : stages[t];
      state = propagate_moment(out.back(), st);
    }
  }
  return out;
}

}  // namespace momsyn::extract
