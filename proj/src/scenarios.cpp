#include "momsyn/scenarios.hpp"

#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace momsyn::scenarios {

namespace {

MatrixXd gaussian(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> g;
  MatrixXd M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = g(rng);
  return M;
}

MatrixXd pd(std::mt19937_64& rng, int d, double floor) {
  const MatrixXd M = gaussian(rng, d, d);
  return M * M.transpose() / d + floor * MatrixXd::Identity(d, d);
}

MatrixXd stable(std::mt19937_64& rng, int n) {
  MatrixXd A = gaussian(rng, n, n);
  const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
  std::uniform_real_distribution<double> u(0.3, 0.95);
  if (rho > 0.0) A *= u(rng) / rho;
  return A;
}

}  // namespace

ObstacleScenario ObstacleScenario::test1() {
  ObstacleScenario s;
  s.obstacles = {{Eigen::Vector2d(-7.5, 0.5), 1.0}, {Eigen::Vector2d(-2.5, -0.5), 1.0}};
  return s;
}

ObstacleScenario ObstacleScenario::test2(double perturb) {
  ObstacleScenario s;
  s.obstacles = {{Eigen::Vector2d(-5.0, perturb), 1.0}};
  return s;
}

MatrixXd keep_out_form(const VectorXd& center, double rho, int m) {
  const int n = static_cast<int>(center.size());
  MatrixXd H = MatrixXd::Zero(1 + n + m, 1 + n + m);
  H(0, 0) = rho * rho - center.squaredNorm();
  H.block(0, 1, 1, n) = center.transpose();
  H.block(1, 0, n, 1) = center;
  H.block(1, 1, n, n) = -MatrixXd::Identity(n, n);
  return H;
}

MatrixXd input_power_form(int n, int m, double bound) {
  MatrixXd H = MatrixXd::Zero(1 + n + m, 1 + n + m);
  H(0, 0) = -bound;
  H.bottomRightCorner(m, m) = MatrixXd::Identity(m, m);
  return H;
}

SynthesisProblem make_obstacle_problem(const ObstacleScenario& s) {
  const int n = static_cast<int>(s.start.size());
  const int m = n;
  if (s.horizon < 0) throw std::invalid_argument("obstacle scenario: horizon < 0");
  if (s.margin < 0.0) throw std::invalid_argument("obstacle scenario: margin < 0");
  for (const auto& o : s.obstacles) {
    if (!(o.radius > 0.0)) throw std::invalid_argument("obstacle scenario: radius <= 0");
    if (o.center.size() != n) throw DimensionError("obstacle centre dimension");
  }

  SynthesisProblem p;
  p.dims = {n, m, s.horizon, static_cast<int>(1 + s.obstacles.size())};
  p.mode = Mode::finite;
  if (s.horizon > 0) {
    p.stages = {SystemStage(VectorXd::Zero(n), MatrixXd::Identity(n, n),
                            MatrixXd::Identity(n, m), MatrixXd::Zero(n, n))};
  }
  MatrixXd R = MatrixXd::Zero(1 + n + m, 1 + n + m);
  R.bottomRightCorner(n + m, n + m).setIdentity();
  MatrixXd RN = R;
  RN.block(1, 1, n, n) *= s.terminal_weight;
  p.costs.assign(static_cast<std::size_t>(s.horizon), QuadraticForm(R, FormSense::cost));
  p.costs.emplace_back(RN, FormSense::cost);

  p.constraints.push_back(
      {std::nullopt, QuadraticForm(input_power_form(n, m, s.speed_bound), FormSense::leq_zero)});
  for (const auto& o : s.obstacles) {
    p.constraints.push_back({std::nullopt, QuadraticForm(keep_out_form(o.center,
                                                                       o.radius + s.margin, m),
                                                         FormSense::leq_zero)});
  }
  p.initial = StateMoment::dirac(s.start);
  return p;
}

SynthesisProblem random_lqr_problem(std::uint64_t seed, int n, int m, int N) {
  std::mt19937_64 rng(seed);
  SynthesisProblem p;
  p.dims = {n, m, N, 0};
  p.mode = Mode::finite;
  for (int t = 0; t < N; ++t) {
    p.stages.emplace_back(gaussian(rng, n, 1), stable(rng, n), gaussian(rng, n, m),
                          pd(rng, n, 0.05));
  }
  for (int t = 0; t <= N; ++t) {
    MatrixXd R = MatrixXd::Zero(1 + n + m, 1 + n + m);
    R.bottomRightCorner(n + m, n + m) = pd(rng, n + m, 0.2);
    p.costs.emplace_back(R, FormSense::cost);
  }
  p.initial = StateMoment::from_mean_covariance(gaussian(rng, n, 1), pd(rng, n, 0.2));
  return p;
}

H2Instance random_h2_problem(std::uint64_t seed, int n, int m) {
  std::mt19937_64 rng(seed);
  H2Instance h;
  const MatrixXd A = stable(rng, n);
  const MatrixXd B = gaussian(rng, n, m);
  h.B2 = gaussian(rng, n, n);
  h.C = MatrixXd::Zero(n + m, n + m);
  h.C.topLeftCorner(n, n) = gaussian(rng, n, n) + MatrixXd::Identity(n, n);
  h.C.bottomRightCorner(m, m).setIdentity();
  MatrixXd R = MatrixXd::Zero(1 + n + m, 1 + n + m);
  R.bottomRightCorner(n + m, n + m) = h.C.transpose() * h.C;

  h.problem.dims = {n, m, 0, 0};
  h.problem.mode = Mode::stationary;
  h.problem.stages = {SystemStage(VectorXd::Zero(n), A, B, h.B2 * h.B2.transpose())};
  h.problem.costs = {QuadraticForm(R, FormSense::cost)};
  h.problem.initial = StateMoment::dirac(VectorXd::Zero(n));
  return h;
}

}  // namespace momsyn::scenarios
