#include "momsyn/pendulum.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <tuple>

#include <unsupported/Eigen/MatrixFunctions>

#include "momsyn/duality.hpp"

namespace momsyn::pendulum {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kSubsteps = 10;
constexpr double kBlowUp = 1e6;

double wrap(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a;
}

// [Ad Bd] of x' = A x + B u under zero-order hold.
std::pair<MatrixXd, MatrixXd> zoh(const Linearization& L, double h) {
  MatrixXd M = MatrixXd::Zero(5, 5);
  M.topLeftCorner(4, 4) = L.A;
  M.topRightCorner(4, 1) = L.B;
  const MatrixXd E = (h * M).exp();  // [Ad Bd; 0 1]
  return {E.topLeftCorner(4, 4), E.topRightCorner(4, 1)};
}

Eigen::Vector4d rk4_hold(const PendulumParams& p, Eigen::Vector4d x, double u) {
  const double dt = p.h / kSubsteps;
  for (int i = 0; i < kSubsteps; ++i) {
    const Eigen::Vector4d k1 = dynamics(p, x, u);
    const Eigen::Vector4d k2 = dynamics(p, x + 0.5 * dt * k1, u);
    const Eigen::Vector4d k3 = dynamics(p, x + 0.5 * dt * k2, u);
    const Eigen::Vector4d k4 = dynamics(p, x + dt * k3, u);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

double stabilizer_input(const AffinePolicy& s, const Eigen::Vector4d& x, double cart_ref) {
  Eigen::Vector4d z = upright_deviation(x);
  z(0) = x(0) - cart_ref;
  return (s.k1 + s.K2 * z)(0);
}

// True if the stabilized loop started at deviation z settles within t_end
// without leaving the sublevel set {V <= V(z)} it started in.
bool settles(const PendulumParams& p, const AffinePolicy& s, const MatrixXd& P,
             const Eigen::Vector4d& z, double t_end) {
  Eigen::Vector4d x(z(0), kPi + z(1), z(2), z(3));
  const double level = z.dot(P * z) * (1.0 + 1e-9);
  const int steps = static_cast<int>(std::ceil(t_end / p.h));
  for (int k = 0; k < steps; ++k) {
    x = rk4_hold(p, x, stabilizer_input(s, x, 0.0));
    if (!x.allFinite() || x.norm() > kBlowUp) return false;
    Eigen::Vector4d e = upright_deviation(x);
    e(0) = x(0);
    if (e.dot(P * e) > level) return false;
  }
  Eigen::Vector4d e = upright_deviation(x);
  e(0) = x(0);
  return e.norm() < 1e-2;
}

}  // namespace

void PendulumParams::validate() const {
  if (!(g > 0 && m1 > 0 && m2 > 0 && l > 0 && h > 0))
    throw std::invalid_argument("PendulumParams: all parameters must be positive");
}

Eigen::Vector4d dynamics(const PendulumParams& p, const Eigen::Vector4d& x, double u) {
  const double s = std::sin(x(1)), c = std::cos(x(1));
  const double den = p.m1 + s * s * p.m2;
  Eigen::Vector4d dx;
  dx(0) = x(2);
  dx(1) = x(3);
  dx(2) = (p.m2 * p.l * x(3) * x(3) * s - p.m2 * p.g * s * c + u) / den;
  dx(3) = ((p.m2 * p.l * x(3) * x(3) * c - (p.m1 + p.m2) * p.g) * s - p.l * c * u) / (p.l * den);
  return dx;
}

Linearization linearize_hanging(const PendulumParams& p) {
  Linearization L;
  L.A.setZero();
  L.A(0, 2) = 1.0;
  L.A(1, 3) = 1.0;
  L.A(2, 1) = -p.m2 * p.g / p.m1;
  L.A(3, 1) = -(p.m1 + p.m2) * p.g / (p.l * p.m1);
  L.B << 0.0, 0.0, 1.0 / p.m1, -1.0 / p.m1;
  return L;
}

Linearization linearize_upright(const PendulumParams& p) {
  Linearization L;
  L.A.setZero();
  L.A(0, 2) = 1.0;
  L.A(1, 3) = 1.0;
  L.A(2, 1) = -p.m2 * p.g / p.m1;
  L.A(3, 1) = (p.m1 + p.m2) * p.g / (p.l * p.m1);
  L.B << 0.0, 0.0, 1.0 / p.m1, 1.0 / p.m1;
  return L;
}

const char* to_string(ModelVariant v) {
  return v == ModelVariant::consistent ? "consistent" : "verbatim";
}

SystemStage escape_stage(const PendulumParams& p, ModelVariant v, Discretization disc) {
  p.validate();
  MatrixXd A = MatrixXd::Identity(4, 4);
  VectorXd B = VectorXd::Zero(4);
  if (v == ModelVariant::consistent) {
    const Linearization L = linearize_hanging(p);
    if (disc == Discretization::euler) {
      A += p.h * L.A;
      B = p.h * L.B;
    } else {
      std::tie(A, B) = zoh(L, p.h);
    }
  } else {
    A(0, 2) = p.h;
    A(1, 3) = p.h;
    A(2, 1) = -p.h * p.m2 * p.g / p.m1;
    A(3, 1) = -p.h * (p.m1 + p.m2) * p.g / (p.l * p.m2);
    B(2) = p.h / p.m2;
    B(3) = p.h * p.l / p.m1;
  }
  return SystemStage(VectorXd::Zero(4), A, B, MatrixXd::Zero(4, 4));
}

namespace {

Eigen::Vector2d energy_weights(const PendulumParams& p, ModelVariant v) {
  const double kin = v == ModelVariant::consistent ? p.m2 * p.l * p.l : p.g * p.l * p.l;
  return {0.5 * p.m2 * p.g * p.l, 0.5 * kin};
}

}  // namespace

double energy(const PendulumParams& p, ModelVariant v, double x2, double x4) {
  const Eigen::Vector2d w = energy_weights(p, v);
  return w(0) * x2 * x2 + w(1) * x4 * x4;
}

MatrixXd energy_form(const PendulumParams& p, ModelVariant v, double angle) {
  const Eigen::Vector2d w = energy_weights(p, v);
  MatrixXd H = MatrixXd::Zero(6, 6);
  H(0, 0) = -energy(p, v, angle, 0.0);
  H(2, 2) = w(0);
  H(4, 4) = w(1);
  return H;
}

SynthesisProblem escape_problem(const PendulumParams& p, const EscapeDesign& d) {
  p.validate();
  const Eigen::Vector2d w = energy_weights(p, d.variant);
  MatrixXd R = MatrixXd::Zero(6, 6);
  R(1, 1) = 1.0;
  R(2, 2) = -d.energy_weight * w(0);
  R(3, 3) = 1.0;
  R(4, 4) = -d.energy_weight * w(1);
  R(5, 5) = 1.0;

  SynthesisProblem prob;
  prob.dims = {4, 1, 0, 1};
  prob.mode = Mode::stationary;
  prob.stages = {escape_stage(p, d.variant, d.discretization)};
  prob.costs = {QuadraticForm(R, FormSense::cost)};
  prob.constraints = {{std::nullopt,
                       QuadraticForm(energy_form(p, d.variant, d.energy_angle), FormSense::leq_zero)}};
  prob.excitation = {{std::nullopt, d.excitation_scale * p.h}};
  prob.initial = StateMoment::dirac(VectorXd::Zero(4));
  return prob;
}

Eigen::Vector4d upright_deviation(const Eigen::Vector4d& x) {
  return {0.0, wrap(x(1) - kPi), x(2), x(3)};
}

Stabilizer design_stabilizer(const PendulumParams& p, const MatrixXd& Q, double R) {
  p.validate();
  const auto [A, B] = zoh(linearize_upright(p), p.h);
  const MatrixXd Rm = MatrixXd::Constant(1, 1, R);
  Stabilizer s;
  s.P = duality::solve_dare(A, B, Q, Rm);
  s.policy = AffinePolicy::zero(4, 1);
  s.policy.K2 = duality::dare_gain(A, B, Rm, s.P);
  return s;
}

double attraction_level(const PendulumParams& p, const Stabilizer& s, std::uint64_t seed,
                        double settle_time) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Eigen::Vector4d> dirs(32);
  for (auto& d : dirs) {
    d << 0.0, g(rng), g(rng), g(rng);
    d /= std::sqrt(d.dot(s.P * d));  // unit level
  }
  auto ok = [&](double c) {
    for (const auto& d : dirs)
      if (!settles(p, s.policy, s.P, std::sqrt(c) * d, settle_time)) return false;
    return true;
  };

  double lo = 0.0, hi = 1.0;
  while (ok(hi) && hi < 1e8) {
    lo = hi;
    hi *= 4.0;
  }
  if (lo == 0.0) lo = hi * 1e-6;
  for (int it = 0; it < 24 && hi / lo > 1.0 + 1e-3; ++it) {
    const double mid = std::sqrt(lo * hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

PendulumRun simulate_pendulum(const PendulumParams& p, const AffinePolicy& escape,
                              const AffinePolicy& stabilizer, const SwitchRule& rule,
                              const simulate::SimConfig& config, const Eigen::Vector4d& x0) {
  p.validate();
  config.validate();
  if (escape.n() != 4 || escape.m() != 1 || stabilizer.n() != 4 || stabilizer.m() != 1)
    throw DimensionError("simulate_pendulum: policies must be 4-state, 1-input");
  require_shape(rule.P, 4, 4, "switch rule P");
  if (!is_psd(escape.sigma_v)) throw DefinitenessError("escape sigma_v is not PSD");
  const double sd_escape = std::sqrt(std::max(0.0, escape.sigma_v(0, 0)));
  const double sd_stab = std::sqrt(std::max(0.0, stabilizer.sigma_v(0, 0)));

  const int H = config.horizon;
  PendulumRun run;
  run.batch.n = 4;
  run.batch.m = 1;
  run.batch.horizon = H;
  run.batch.dt = p.h;
  run.batch.states.resize(config.trajectories);
  if (config.record_inputs) run.batch.inputs.resize(config.trajectories);
  run.batch.seeds.resize(config.trajectories);
  run.switch_time.assign(config.trajectories, -1.0);

  for (int i = 0; i < config.trajectories; ++i) {
    const std::uint64_t seed = simulate::trajectory_seed(config.seed, static_cast<std::uint64_t>(i));
    run.batch.seeds[i] = seed;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    MatrixXd X(H + 1, 4), U(config.record_inputs ? H : 0, 1);
    Eigen::Vector4d x = x0;
    X.row(0) = x.transpose();
    bool switched = false;
    double cart_ref = 0.0;
    for (int k = 0; k < H; ++k) {
      if (!switched) {
        const Eigen::Vector4d z = upright_deviation(x);
        if (z.dot(rule.P * z) <= rule.level) {
          switched = true;
          cart_ref = x(0);
          run.switch_time[i] = k * p.h;
        }
      }
      const double noise = g(rng);
      double u;
      if (switched) {
        u = stabilizer_input(stabilizer, x, cart_ref) + sd_stab * noise;
      } else {
        Eigen::Vector4d xe = x;
        xe(1) = wrap(x(1));
        u = (escape.k1 + escape.K2 * xe)(0) + sd_escape * noise;
      }
      x = rk4_hold(p, x, u);
      if (!x.allFinite() || x.norm() > kBlowUp) {
        throw DivergenceError("pendulum state diverged at t = " + std::to_string((k + 1) * p.h) +
                                  " s",
                              (k + 1) * p.h);
      }
      X.row(k + 1) = x.transpose();
      if (config.record_inputs) U(k, 0) = u;
    }
    run.batch.states[i] = std::move(X);
    if (config.record_inputs) run.batch.inputs[i] = std::move(U);
  }
  return run;
}

}  // namespace momsyn::pendulum
