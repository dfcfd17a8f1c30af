#pragma once

// Problem and solution files, verification reports and the commands behind
// the `momsyn` executable.
//
// Problem file (JSON, matrices as row-major nested arrays):
//   {
//     "dims": {"n": 2, "m": 2, "N": 60, "s": 3},
//     "mode": "finite" | "stationary" | "stationary_tail",
//     "gamma": 0.9,                               (stationary_tail only)
//     "stages": [{"f": [..], "A": [[..]], "B": [[..]], "sigma_w": [[..]]}],
//     "costs": [R, ...],
//     "constraints": [{"stage": 3 | "all", "H": [[..]]}],
//     "excitation": [{"stage": 0 | "all", "level": 100.0}],   (optional)
//     "initial": {"sigma11": 1, "sigma12": [..], "Sigma22": [[..]]},
//     "scene": {"disks": [{"center": [..], "radius": 1, "margin": 0.1}]}
//   }
// "scene" only affects figures.

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "momsyn/core.hpp"
#include "momsyn/simulate.hpp"
#include "momsyn/synthesis.hpp"

namespace momsyn::cli {

using json = nlohmann::json;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInfeasible = 2,
  kUnbounded = 3,
  kNumerical = 4,
  kSchema = 5,
};

int exit_code(SolverStatus s);

// Malformed or inconsistent input file. `where` is "file:line:col" for
// syntax errors or "file:/json/pointer" for field errors.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& where, const std::string& message)
      : std::runtime_error(where + ": " + message), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct ProblemFile {
  SynthesisProblem problem;
  std::vector<simulate::Disk> disks;
};

json problem_to_json(const ProblemFile& file);
// `source` names the document in error messages.
ProblemFile problem_from_json(const json& j, const std::string& source = "problem");

json solution_to_json(const SynthesisSolution& sol);
SynthesisSolution solution_from_json(const json& j, const std::string& source = "solution");

// Sorted keys, two-space indent, shortest round-trip numbers, trailing LF.
std::string canonical_dump(const json& j);
void write_json(const json& j, const std::string& path);
// Throws SchemaError with line and column on syntax errors and
// std::runtime_error if the file cannot be read.
json read_json(const std::string& path);

ProblemFile read_problem(const std::string& path);
SynthesisSolution read_solution(const std::string& path);

// Defaults, then MOMSYN_SOLVER_TOL (feasibility tolerance), then flags.
SynthesisSettings settings_from_env();

struct Check {
  std::string name;
  int stage = -1;  // -1: global
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<Check> checks;
  bool pass() const;
  // First failing check, if any.
  const Check* first_failure() const;
  void print(std::ostream& os) const;
};

// PSD margins, propagation residuals, constraint and excitation slacks,
// the initial block, and the round trip moments -> policies -> moments.
// Every quantity is measured relative to max(1, ||Sigma_t||_F).
VerifyReport verify(const SynthesisProblem& problem, const SynthesisSolution& sol,
                    double tol = 1e-6);

// Commands. Each returns the process exit code and prints a short summary
// to `out`.
struct SimulateOptions {
  int trajectories = 10;
  std::uint64_t seed = 1;
  int horizon = 100;  // steps for stationary problems
  std::string csv;
  std::string svg;
};

struct ExampleOptions {
  double perturb = 0.0;     // obstacle2: vertical shift of the centre
  int horizon = 60;         // obstacle scenarios
  int trajectories = 10;    // obstacle scenarios; pendulum uses 2
  std::uint64_t seed = 1;
  std::string variant = "consistent";  // pendulum model
};

int cmd_synthesize(const std::string& problem_path, const std::string& out_path,
                   const SynthesisSettings& settings, std::ostream& out);
int cmd_simulate(const std::string& solution_path, const std::string& problem_path,
                 const SimulateOptions& opt, std::ostream& out);
int cmd_verify(const std::string& solution_path, const std::string& problem_path, double tol,
               std::ostream& out);
int cmd_example(const std::string& name, const std::string& out_dir, const ExampleOptions& opt,
                const SynthesisSettings& settings, std::ostream& out);

const std::vector<std::string>& example_names();

// Rollouts of the solution's policies on the problem's dynamics.
simulate::TrajectoryBatch simulate_solution(const SynthesisProblem& problem,
                                            const SynthesisSolution& sol,
                                            const SimulateOptions& opt);

}  // namespace momsyn::cli
