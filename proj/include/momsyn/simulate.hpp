#pragma once

// Monte Carlo rollouts of extracted affine policies, sample moments, and
// trajectory export (CSV, SVG).

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "momsyn/core.hpp"

namespace momsyn::simulate {

struct SimConfig {
  int trajectories = 1;
  std::uint64_t seed = 0;
  int horizon = 0;          // number of steps
  bool record_inputs = true;
  int threads = 0;          // 0: hardware concurrency
  void validate() const;
};

// One row per time step. states[i] is (horizon+1) x n, inputs[i] is
// horizon x m (empty when inputs are not recorded).
struct TrajectoryBatch {
  int n = 0;
  int m = 0;
  int horizon = 0;
  double dt = 0.0;  // > 0: rows are sampled every dt seconds
  std::vector<MatrixXd> states;
  std::vector<MatrixXd> inputs;
  std::vector<std::uint64_t> seeds;  // per-trajectory stream seeds
  int size() const { return static_cast<int>(states.size()); }
};

// Seed of trajectory `index` under master seed `seed` (splitmix64 of both).
std::uint64_t trajectory_seed(std::uint64_t seed, std::uint64_t index);

using InitialSampler = std::function<VectorXd(std::mt19937_64&)>;

// x0 = mean + L g with L L^T = covariance (clipped) and g standard normal.
// A Dirac moment gives a constant sampler.
InitialSampler gaussian_sampler(const StateMoment& initial);

// x_{t+1} = f + A x + B u + w,  u = k1 + K2 x + v,  v ~ N(0, Sv), w ~ N(0, Sw).
// `stages` and `policies` hold config.horizon entries or a single entry
// shared by every step. Throws DefinitenessError if Sv or Sw is not PSD.
TrajectoryBatch simulate_linear(const std::vector<SystemStage>& stages,
                                const std::vector<AffinePolicy>& policies,
                                const InitialSampler& sampler, const SimConfig& config);

struct EmpiricalMoment {
  MomentMatrix mean;
  MatrixXd standard_error;  // entrywise, sample std / sqrt(count)
};

// Sample mean of (1, x_t, u_t)(1, x_t, u_t)^T. Throws std::out_of_range
// unless 0 <= t < horizon and inputs were recorded.
MomentMatrix empirical_moments(const TrajectoryBatch& batch, int t);
EmpiricalMoment empirical_moments_with_error(const TrajectoryBatch& batch, int t);

// trajectory_id,t,x1..xn,u1..um; the last state row has empty input cells.
// Throws std::runtime_error if the file cannot be written.
void export_csv(const TrajectoryBatch& batch, const std::string& path);

struct Disk {
  VectorXd center;
  double radius = 1.0;
  double margin = 0.0;
};

struct Scene {
  enum class Kind { plane, time_series };
  Kind kind = Kind::plane;
  std::vector<Disk> disks;  // plane only
  std::string title;
  // time_series: which state components to plot (all when empty).
  std::vector<int> components;
};

// plane: x1 against x2 with obstacle disks (filled) and margin circles
// (dashed). time_series: selected state components over time.
void render_svg(const TrajectoryBatch& batch, const Scene& scene, const std::string& path);
std::string svg_string(const TrajectoryBatch& batch, const Scene& scene);

}  // namespace momsyn::simulate
