#include "momsyn/builder.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <string>

namespace momsyn::builder {

using sdp::BlockTerm;
using sdp::LinearConstraint;
using sdp::SdpProblem;

MatrixXd entry_selector(int d, int i, int j) {
  MatrixXd E = MatrixXd::Zero(d, d);
  E(i, j) += 0.5;
  E(j, i) += 0.5;
  return E;
}

std::vector<MomentMatrix> LoweringMap::extract(const std::vector<MatrixXd>& X) const {
  std::vector<MomentMatrix> out;
  out.reserve(moment_blocks.size());
  for (int b : moment_blocks) out.emplace_back(X.at(b), n, m);
  return out;
}

std::vector<double> discount_weights(int N, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must lie in [0, 1)");
  }
  std::vector<double> w(static_cast<std::size_t>(N) + 1);
  for (int t = 0; t < N; ++t) w[t] = std::pow(gamma, t);
  w[N] = std::pow(gamma, N) / (1.0 - gamma);
  return w;
}

namespace {

std::string stage_label(const char* what, int t, int i, int j) {
  return std::string(what) + "[" + std::to_string(t) + "](" + std::to_string(i) +
         "," + std::to_string(j) + ")";
}

// Sigma_0's (1, x) block equals the given state moment.
void pin_initial(SdpProblem& p, int block, const Dimensions& dims,
                 const StateMoment& initial) {
  const int d = dims.moment_size();
  const int k = dims.state_moment_size();
  for (int j = 0; j < k; ++j) {
    for (int i = j; i < k; ++i) {
      LinearConstraint c;
      c.terms.push_back({block, entry_selector(d, i, j)});
      c.rhs = initial.data()(i, j);
      c.label = stage_label("initial", 0, i, j);
      p.add_equality(std::move(c));
    }
  }
  // A singular pinned block (e.g. a Dirac initial state) leaves Sigma_0 with
  // no interior; hand the solver the face it must lie on instead.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(initial.data());
  const double cut = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  const int rank = static_cast<int>((es.eigenvalues().array() > cut).count());
  if (rank < k) {
    const int m = dims.m;
    MatrixXd T = MatrixXd::Zero(d, rank + m);
    T.topLeftCorner(k, rank) = es.eigenvectors().rightCols(rank);
    T.bottomRightCorner(m, m).setIdentity();
    p.restrict_to_face(block, T);
  }
}

// Lower-triangle entries of marginal(Sigma_next) - G Sigma_t G^T = W.
// When next == current the two coefficients are merged on one block.
void add_propagation(SdpProblem& p, int current, int next, int t,
                     const Dimensions& dims, const SystemStage& stage) {
  const int d = dims.moment_size();
  const int k = dims.state_moment_size();
  const MatrixXd G = stage.transition();
  for (int j = 0; j < k; ++j) {
    for (int i = j; i < k; ++i) {
      const VectorXd gi = G.row(i).transpose();
      const VectorXd gj = G.row(j).transpose();
      const MatrixXd outer = 0.5 * (gi * gj.transpose() + gj * gi.transpose());
      LinearConstraint c;
      if (current == next) {
        c.terms.push_back({current, MatrixXd(entry_selector(d, i, j) - outer)});
      } else {
        c.terms.push_back({next, entry_selector(d, i, j)});
        c.terms.push_back({current, MatrixXd(-outer)});
      }
      c.rhs = (i >= 1 && j >= 1) ? stage.sigma_w(i - 1, j - 1) : 0.0;
      c.label = stage_label("propagate", t, i, j);
      p.add_equality(std::move(c));
    }
  }
}

void add_quadratic_constraints(SdpProblem& p, const SynthesisProblem& problem,
                               const std::vector<int>& blocks) {
  for (std::size_t ci = 0; ci < problem.constraints.size(); ++ci) {
    const auto& sc = problem.constraints[ci];
    for (std::size_t t = 0; t < blocks.size(); ++t) {
      if (sc.stage && *sc.stage != static_cast<int>(t)) continue;
      LinearConstraint c;
      c.terms.push_back({blocks[t], sc.form.M});
      c.rhs = 0.0;
      c.label = "H" + std::to_string(ci) + "[" + std::to_string(t) + "]";
      p.add_inequality(std::move(c));
    }
  }
}

LoweringMap make_map(const SynthesisProblem& problem) {
  LoweringMap map;
  map.mode = problem.mode;
  map.n = problem.dims.n;
  map.m = problem.dims.m;
  return map;
}

std::vector<int> add_moment_blocks(SdpProblem& p, int count, int d) {
  std::vector<int> blocks;
  for (int t = 0; t < count; ++t) {
    blocks.push_back(p.add_block("sigma_" + std::to_string(t), d));
  }
  return blocks;
}

void add_costs(SdpProblem& p, const SynthesisProblem& problem, LoweringMap& map) {
  for (std::size_t t = 0; t < map.moment_blocks.size(); ++t) {
    const double w = map.cost_weights[t];
    if (w != 0.0) {
      p.add_objective(map.moment_blocks[t], w * problem.cost(static_cast<int>(t)).M);
    }
  }
}

void pin_sigma11(SdpProblem& p, int block, int d) {
  LinearConstraint c;
  c.terms.push_back({block, entry_selector(d, 0, 0)});
  c.rhs = 1.0;
  c.label = "sigma11";
  p.add_equality(std::move(c));
}

}  // namespace

Lowered build_finite(const SynthesisProblem& problem) {
  if (problem.mode != Mode::finite) {
    throw std::invalid_argument("build_finite: problem mode is not finite");
  }
  problem.validate();
  const Dimensions& dims = problem.dims;
  const int d = dims.moment_size();
  SdpProblem p;
  LoweringMap map = make_map(problem);
  map.moment_blocks = add_moment_blocks(p, dims.N + 1, d);
  map.cost_weights.assign(map.moment_blocks.size(), 1.0);

  pin_initial(p, map.moment_blocks[0], dims, problem.initial);
  for (int t = 0; t < dims.N; ++t) {
    add_propagation(p, map.moment_blocks[t], map.moment_blocks[t + 1], t, dims,
                    problem.stage(t));
  }
  add_quadratic_constraints(p, problem, map.moment_blocks);
  add_costs(p, problem, map);
  return {std::move(p), std::move(map)};
}

Lowered build_stationary(const SynthesisProblem& problem) {
  if (problem.mode != Mode::stationary) {
    throw std::invalid_argument("build_stationary: problem mode is not stationary");
  }
  problem.validate();
  const Dimensions& dims = problem.dims;
  const int d = dims.moment_size();
  SdpProblem p;
  LoweringMap map = make_map(problem);
  map.moment_blocks = add_moment_blocks(p, 1, d);
  map.cost_weights = {1.0};

  pin_sigma11(p, map.moment_blocks[0], d);
  add_propagation(p, map.moment_blocks[0], map.moment_blocks[0], 0, dims,
                  problem.stage(0));
  add_quadratic_constraints(p, problem, map.moment_blocks);
  add_costs(p, problem, map);
  return {std::move(p), std::move(map)};
}

Lowered build_stationary_tail(const SynthesisProblem& problem) {
  if (problem.mode != Mode::stationary_tail) {
    throw std::invalid_argument(
        "build_stationary_tail: problem mode is not stationary_tail");
  }
  problem.validate();
  const Dimensions& dims = problem.dims;
  const int d = dims.moment_size();
  const int N = dims.N;
  SdpProblem p;
  LoweringMap map = make_map(problem);
  map.moment_blocks = add_moment_blocks(p, N + 1, d);
  map.cost_weights = discount_weights(N, *problem.gamma);

  // With N = 0 the whole sequence is stationary, so only sigma11 is pinned.
  if (N == 0) {
    pin_sigma11(p, map.moment_blocks[0], d);
  } else {
    pin_initial(p, map.moment_blocks[0], dims, problem.initial);
  }
  for (int t = 0; t < N; ++t) {
    add_propagation(p, map.moment_blocks[t], map.moment_blocks[t + 1], t, dims,
                    problem.stage(t));
  }
  add_propagation(p, map.moment_blocks[N], map.moment_blocks[N], N, dims,
                  problem.stage(N));
  add_quadratic_constraints(p, problem, map.moment_blocks);
  add_costs(p, problem, map);
  return {std::move(p), std::move(map)};
}

void add_schur_excitation(SdpProblem& sdp, LoweringMap& map,
                          std::optional<int> stage, double level) {
  if (!(level >= 0.0)) {
    throw std::invalid_argument("add_schur_excitation: level must be >= 0");
  }
  const int d = map.moment_size();
  const int first_input = 1 + map.n;
  std::vector<std::size_t> targets;
  if (stage) {
    if (*stage < 0 || *stage >= static_cast<int>(map.moment_blocks.size())) {
      throw DimensionError("add_schur_excitation: stage " +
                           std::to_string(*stage) + " out of range");
    }
    targets.push_back(static_cast<std::size_t>(*stage));
  } else {
    for (std::size_t t = 0; t < map.moment_blocks.size(); ++t) targets.push_back(t);
  }
  for (std::size_t t : targets) {
    const int sigma_block = map.moment_blocks[t];
    if (sdp.blocks().at(sigma_block).size != d) {
      throw DimensionError("add_schur_excitation: block size mismatch");
    }
    const std::string name = "excite_" + std::to_string(t) + "_" +
                             std::to_string(map.excitation_blocks.size());
    const int aux = sdp.add_block(name, d);
    map.excitation_blocks.push_back(aux);
    for (int j = 0; j < d; ++j) {
      for (int i = j; i < d; ++i) {
        const MatrixXd E = entry_selector(d, i, j);
        LinearConstraint c;
        c.terms.push_back({aux, E});
        c.terms.push_back({sigma_block, MatrixXd(-E)});
        c.rhs = (i == j && i >= first_input) ? -level : 0.0;
        c.label = stage_label("excite", static_cast<int>(t), i, j);
        sdp.add_equality(std::move(c));
      }
    }
  }
}

Lowered build(const SynthesisProblem& problem) {
  Lowered out;
  switch (problem.mode) {
    case Mode::finite: out = build_finite(problem); break;
    case Mode::stationary: out = build_stationary(problem); break;
    case Mode::stationary_tail: out = build_stationary_tail(problem); break;
  }
  for (const auto& e : problem.excitation) {
    add_schur_excitation(out.first, out.second, e.stage, e.level);
  }
  return out;
}

}  // namespace momsyn::builder
