#pragma once

// Built-in problem instances: the planar obstacle examples and the random
// oracle instances used by `momsyn example`.

#include <cstdint>
#include <vector>

#include "momsyn/core.hpp"

namespace momsyn::scenarios {

struct Obstacle {
  VectorXd center;
  double radius = 1.0;
};

// Planar point mass x+ = x + u started at a known position, steered to the
// origin while keeping E||x - c||^2 >= (r + margin)^2 for every obstacle.
struct ObstacleScenario {
  std::vector<Obstacle> obstacles;
  double margin = 0.1;
  double speed_bound = 0.1;  // E||u||^2 <= speed_bound
  int horizon = 60;
  double terminal_weight = 100.0;
  VectorXd start = Eigen::Vector2d(-10.0, 0.0);

  // Two disks on either side of the straight path.
  static ObstacleScenario test1();
  // One disk centred on the straight path; `perturb` shifts its centre
  // vertically, which breaks the symmetry of the optimal moments.
  static ObstacleScenario test2(double perturb = 0.0);
};

// E||x - c||^2 >= rho^2 as a <= 0 form on (1, x, u).
MatrixXd keep_out_form(const VectorXd& center, double rho, int m);
// E||u||^2 <= bound as a <= 0 form on (1, x, u).
MatrixXd input_power_form(int n, int m, double bound);

SynthesisProblem make_obstacle_problem(const ObstacleScenario& s);

// Random stable instances with fixed seeds; costs are PSD with a definite
// input block so a Riccati oracle exists.
SynthesisProblem random_lqr_problem(std::uint64_t seed, int n, int m, int N);

struct H2Instance {
  SynthesisProblem problem;  // stationary
  MatrixXd C;                // output map on (x, u)
  MatrixXd B2;               // noise input
};
H2Instance random_h2_problem(std::uint64_t seed, int n, int m);

}  // namespace momsyn::scenarios
