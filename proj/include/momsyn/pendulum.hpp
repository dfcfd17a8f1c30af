#pragma once

// Cart-pole swing-up: nonlinear model, the linear escape design around the
// hanging position, an LQR stabilizer for the upright position and the
// switched closed-loop simulation.
//
// State x = (cart position, angle, cart velocity, angular velocity). The
// angle is 0 when hanging and pi when upright.

#include <cstdint>
#include <stdexcept>

#include "momsyn/core.hpp"
#include "momsyn/simulate.hpp"

namespace momsyn::pendulum {

struct PendulumParams {
  double g = 9.81;
  double m1 = 1.0;   // cart
  double m2 = 1e-3;  // pendulum
  double l = 1.0;
  double h = 0.01;   // control / discretization step
  void validate() const;
};

// Right-hand side of the nonlinear ODE.
Eigen::Vector4d dynamics(const PendulumParams& p, const Eigen::Vector4d& x, double u);

struct Linearization {
  Eigen::Matrix4d A;
  Eigen::Vector4d B;
};
Linearization linearize_hanging(const PendulumParams& p);
// In the deviation delta = x2 - pi.
Linearization linearize_upright(const PendulumParams& p);

// consistent: linearize_hanging discretized at h, energy
//   e = m2 g l x2^2 / 2 + m2 l^2 x4^2 / 2.
// verbatim: the discretized gains h/m2, h l/m1 and e = m2 g l x2^2 / 2 +
//   g l^2 x4^2 / 2 exactly as printed.
enum class ModelVariant { consistent, verbatim };
const char* to_string(ModelVariant v);

// How the consistent variant is discretized. Euler at h adds about
// (omega h)^2 energy per step to the oscillation, which a design can lean
// on and the real plant does not provide; zoh is exact for the linear model
// under zero-order hold. The verbatim variant is always Euler.
enum class Discretization { euler, zoh };

SystemStage escape_stage(const PendulumParams& p, ModelVariant v,
                         Discretization disc = Discretization::zoh);
double energy(const PendulumParams& p, ModelVariant v, double x2, double x4);
// E e(x2, x4) <= e(angle, 0) as a <= 0 form on (1, x, u).
MatrixXd energy_form(const PendulumParams& p, ModelVariant v, double angle);

struct EscapeDesign {
  ModelVariant variant = ModelVariant::consistent;
  Discretization discretization = Discretization::zoh;
  double energy_weight = 1e4;    // weight of -e in the stage cost
  double energy_angle = 2.0;     // cap E e <= e(energy_angle, 0)
  double excitation_scale = 1e4; // Sigma^v >= excitation_scale * h
};

// Stationary problem: cost x1^2 + x3^2 - w e + u^2, energy cap and the
// excitation lower bound.
SynthesisProblem escape_problem(const PendulumParams& p, const EscapeDesign& d = {});

struct SwitchRule {
  MatrixXd P;         // Lyapunov matrix of the stabilizer
  double level = 0.0; // switch when z' P z <= level
};

// z = (0, wrap(x2 - pi), x3, x4): deviation from upright, measured relative
// to the current cart position.
Eigen::Vector4d upright_deviation(const Eigen::Vector4d& x);

struct Stabilizer {
  AffinePolicy policy;  // u = K z on the deviation
  MatrixXd P;           // DARE solution
};
// Discrete LQR on the upright linearization (zero-order hold at h).
Stabilizer design_stabilizer(const PendulumParams& p, const MatrixXd& Q = MatrixXd::Identity(4, 4),
                             double R = 1.0);

// Largest level c (by bisection) such that the nonlinear loop under the
// stabilizer settles from 32 fixed-seed points on {z' P z = c, z1 = 0}
// without leaving that sublevel set.
double attraction_level(const PendulumParams& p, const Stabilizer& s, std::uint64_t seed = 7,
                        double settle_time = 10.0);

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

struct PendulumRun {
  simulate::TrajectoryBatch batch;  // rows every h seconds
  std::vector<double> switch_time;  // < 0 if the rule never fired
};

// RK4 at h/10 under zero-order hold. Each trajectory starts at `x0`, uses
// the escape policy with excitation sampled every h, and switches for good
// to the stabilizer the first time the rule holds. After the switch the
// stabilizer acts on upright_deviation, so the cart is held where it was at
// the switching instant. Throws DivergenceError if |x| > 1e6.
PendulumRun simulate_pendulum(const PendulumParams& p, const AffinePolicy& escape,
                              const AffinePolicy& stabilizer, const SwitchRule& rule,
                              const simulate::SimConfig& config,
                              const Eigen::Vector4d& x0 = Eigen::Vector4d::Zero());

}  // namespace momsyn::pendulum
