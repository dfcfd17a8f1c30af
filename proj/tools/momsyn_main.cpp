#include <iostream>

#include <CLI11.hpp>

#include "momsyn/cli.hpp"

using namespace momsyn;

int main(int argc, char** argv) {
  CLI::App app{"Moment-based stochastic controller synthesis"};
  app.require_subcommand(1);

  SynthesisSettings settings;
  try {
    settings = cli::settings_from_env();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kFailure;
  }
  auto solver_flags = [&](CLI::App* cmd) {
    cmd->add_option("--feas-tol", settings.solver.feas_tol, "Solver feasibility tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--gap-tol", settings.solver.gap_tol, "Solver relative gap tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-iters", settings.solver.max_iters, "Interior point iteration limit")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--verbose", settings.solver.verbose, "Print solver iterations");
  };

  std::string problem, solution, out;
  auto* syn = app.add_subcommand("synthesize", "Solve a problem file");
  syn->add_option("problem", problem, "Problem JSON")->required()->check(CLI::ExistingFile);
  syn->add_option("-o,--out", out, "Solution JSON")->required();
  solver_flags(syn);

  cli::SimulateOptions sim;
  auto* simc = app.add_subcommand("simulate", "Sample trajectories of a solved policy");
  simc->add_option("solution", solution, "Solution JSON")->required()->check(CLI::ExistingFile);
  simc->add_option("problem", problem, "Problem JSON")->required()->check(CLI::ExistingFile);
  simc->add_option("-n,--trajectories", sim.trajectories, "Number of trajectories")
      ->check(CLI::NonNegativeNumber);
  simc->add_option("--seed", sim.seed, "Master seed");
  simc->add_option("--horizon", sim.horizon, "Steps for stationary problems")
      ->check(CLI::NonNegativeNumber);
  simc->add_option("--csv", sim.csv, "CSV output path");
  simc->add_option("--svg", sim.svg, "SVG output path");

  double tol = 1e-6;
  auto* ver = app.add_subcommand("verify", "Check a solution against its problem");
  ver->add_option("solution", solution, "Solution JSON")->required()->check(CLI::ExistingFile);
  ver->add_option("problem", problem, "Problem JSON")->required()->check(CLI::ExistingFile);
  ver->add_option("--tol", tol, "Relative tolerance")->check(CLI::PositiveNumber);

  std::string name, dir;
  cli::ExampleOptions ex;
  ex.trajectories = 0;
  auto* exc = app.add_subcommand("example", "Build, solve, simulate and verify a built-in scenario");
  exc->add_option("name", name, "Scenario")->required()->check(CLI::IsMember(cli::example_names()));
  exc->add_option("-o,--out-dir", dir, "Output directory")->required();
  exc->add_option("--perturb", ex.perturb, "obstacle2: vertical shift of the obstacle centre");
  exc->add_option("--horizon", ex.horizon, "Obstacle scenarios: final stage index")
      ->check(CLI::PositiveNumber);
  exc->add_option("-n,--trajectories", ex.trajectories,
                  "Sampled trajectories (default 10, pendulum 2)")
      ->check(CLI::NonNegativeNumber);
  exc->add_option("--seed", ex.seed, "Master seed");
  exc->add_option("--variant", ex.variant, "Pendulum model")
      ->check(CLI::IsMember({"consistent", "verbatim"}));
  solver_flags(exc);

  CLI11_PARSE(app, argc, argv);

  if (syn->parsed()) return cli::cmd_synthesize(problem, out, settings, std::cout);
  if (simc->parsed()) return cli::cmd_simulate(solution, problem, sim, std::cout);
  if (ver->parsed()) return cli::cmd_verify(solution, problem, tol, std::cout);
  return cli::cmd_example(name, dir, ex, settings, std::cout);
}
