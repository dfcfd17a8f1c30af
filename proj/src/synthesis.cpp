#include "momsyn/synthesis.hpp"

#include "momsyn/extract.hpp"

namespace momsyn {

std::vector<double> propagation_residuals(const SynthesisProblem& problem,
                                          const std::vector<MomentMatrix>& moments) {
  std::vector<double> out;
  const int count = static_cast<int>(moments.size());
  for (int t = 0; t + 1 < count; ++t) {
    out.push_back(ftilde_residual(moments[t], moments[t + 1].state_moment(),
                                  problem.stage(t))
                      .norm());
  }
  if (problem.mode != Mode::finite && count > 0) {
    const int last = count - 1;
    out.push_back(ftilde_residual(moments[last], moments[last].state_moment(),
                                  problem.stage(last))
                      .norm());
  }
  return out;
}

SynthesisSolution synthesize(const SynthesisProblem& problem,
                             const SynthesisSettings& settings) {
  const auto [program, map] = builder::build(problem);
  const sdp::SdpSolution sol = sdp::solve(program, settings.solver);

  SynthesisSolution out;
  out.mode = problem.mode;
  out.solver_status = sol.status;
  out.iterations = sol.iterations;
  out.max_eq_residual = sol.max_eq_residual;
  out.min_block_eigenvalue = sol.min_block_eigenvalue;
  if (sol.status != SolverStatus::optimal) return out;

  out.objective = sol.objective;
  out.moments = map.extract(sol.X);
  out.residuals = propagation_residuals(problem, out.moments);
  for (const auto& S : out.moments) {
    out.policies.push_back(extract::extract_policy(S, settings.extract_tol));
  }
  return out;
}

}  // namespace momsyn
