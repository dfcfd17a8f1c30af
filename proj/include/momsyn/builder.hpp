#pragma once

// Lowering of synthesis problems to standard-form SDPs over moment matrices.

#include <optional>
#include <utility>
#include <vector>

#include "momsyn/core.hpp"
#include "momsyn/sdp.hpp"

namespace momsyn::builder {

// Where each moment matrix lives in the lowered program. Block t holds
// Sigma_t entry-for-entry (identity index map), so the map is just the
// per-stage block index plus the dimensions.
struct LoweringMap {
  Mode mode = Mode::finite;
  int n = 0;
  int m = 0;
  std::vector<int> moment_blocks;  // one per Sigma_t
  std::vector<int> excitation_blocks;
  // Objective weight applied to cost(t) for each block.
  std::vector<double> cost_weights;

  int moment_size() const { return 1 + n + m; }
  std::vector<MomentMatrix> extract(const std::vector<MatrixXd>& X) const;
};

using Lowered = std::pair<sdp::SdpProblem, LoweringMap>;

Lowered build_finite(const SynthesisProblem& problem);
Lowered build_stationary(const SynthesisProblem& problem);
Lowered build_stationary_tail(const SynthesisProblem& problem);

// Dispatches on problem.mode and applies problem.excitation.
Lowered build(const SynthesisProblem& problem);

// Adds an auxiliary PSD block Y tied entry-wise to Sigma_t with
// Y_33 = Sigma_33 - level * I, which forces Sigma^v >= level * I.
// stage == nullopt applies it to every moment block.
void add_schur_excitation(sdp::SdpProblem& sdp, LoweringMap& map,
                          std::optional<int> stage, double level);

// Objective weights for the discounted stationary tail: gamma^t for t < N
// and gamma^N / (1 - gamma) at N.
std::vector<double> discount_weights(int N, double gamma);

// Symmetric E with trace(E X) = X(i, j).
MatrixXd entry_selector(int d, int i, int j);

}  // namespace momsyn::builder
