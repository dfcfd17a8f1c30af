#pragma once

// End-to-end synthesis: lower, solve, extract moments and policies.

#include "momsyn/builder.hpp"
#include "momsyn/core.hpp"
#include "momsyn/sdp.hpp"

namespace momsyn {

struct SynthesisSettings {
  sdp::SolverSettings solver;
  double extract_tol = 1e-9;
};

SynthesisSolution synthesize(const SynthesisProblem& problem,
                             const SynthesisSettings& settings = {});

// Frobenius norms of the propagation residual for each transition of the
// problem (N entries for finite, N+1 for stationary_tail, 1 for stationary).
std::vector<double> propagation_residuals(const SynthesisProblem& problem,
                                          const std::vector<MomentMatrix>& moments);

}  // namespace momsyn
