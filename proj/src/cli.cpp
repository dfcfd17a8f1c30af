#include "momsyn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "momsyn/builder.hpp"
#include "momsyn/duality.hpp"
#include "momsyn/extract.hpp"
#include "momsyn/pendulum.hpp"
#include "momsyn/scenarios.hpp"

namespace momsyn::cli {

int exit_code(SolverStatus s) {
  switch (s) {
    case SolverStatus::optimal: return kOk;
    case SolverStatus::infeasible: return kInfeasible;
    case SolverStatus::unbounded: return kUnbounded;
    case SolverStatus::numerical_trouble: return kNumerical;
  }
  return kFailure;
}

namespace {

// ---- JSON reading with pointer-qualified errors ---------------------------

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
    throw SchemaError(source_ + ":" + (ptr.empty() ? "/" : ptr), msg);
  }

  void object(const json& j, const std::string& ptr, std::initializer_list<const char*> required,
              std::initializer_list<const char*> optional = {}) const {
    if (!j.is_object()) fail(ptr, "expected an object");
    std::set<std::string> known;
    for (const char* k : required) {
      known.insert(k);
      if (!j.contains(k)) fail(ptr + "/" + k, "missing required field");
    }
    for (const char* k : optional) known.insert(k);
    for (const auto& [k, v] : j.items()) {
      if (!known.count(k)) fail(ptr + "/" + k, "unknown field");
    }
  }

  const json& array(const json& j, const std::string& ptr) const {
    if (!j.is_array()) fail(ptr, "expected an array");
    return j;
  }

  double number(const json& j, const std::string& ptr) const {
    if (!j.is_number()) fail(ptr, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(ptr, "expected a finite number");
    return v;
  }

  int integer(const json& j, const std::string& ptr) const {
    if (!j.is_number_integer()) fail(ptr, "expected an integer");
    const auto v = j.get<long long>();
    if (v < 0 || v > 1000000) fail(ptr, "integer out of range");
    return static_cast<int>(v);
  }

  std::string string(const json& j, const std::string& ptr) const {
    if (!j.is_string()) fail(ptr, "expected a string");
    return j.get<std::string>();
  }

  VectorXd vector(const json& j, const std::string& ptr, int size) const {
    array(j, ptr);
    if (size >= 0 && static_cast<int>(j.size()) != size) {
      fail(ptr, "expected " + std::to_string(size) + " entries, got " + std::to_string(j.size()));
    }
    VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = number(j[i], ptr + "/" + std::to_string(i));
    return v;
  }

  MatrixXd matrix(const json& j, const std::string& ptr, int rows, int cols) const {
    array(j, ptr);
    if (static_cast<int>(j.size()) != rows) {
      fail(ptr, "expected " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix, got " +
                    std::to_string(j.size()) + " rows");
    }
    MatrixXd M(rows, cols);
    for (int i = 0; i < rows; ++i) {
      M.row(i) = vector(j[i], ptr + "/" + std::to_string(i), cols).transpose();
    }
    return M;
  }

  std::optional<int> stage_index(const json& j, const std::string& ptr) const {
    if (j.is_string()) {
      if (j.get<std::string>() != "all") fail(ptr, "expected an index or \"all\"");
      return std::nullopt;
    }
    return integer(j, ptr);
  }

 private:
  std::string source_;
};

json matrix_json(const MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < M.cols(); ++k) r.push_back(M(i, k));
    rows.push_back(std::move(r));
  }
  return rows;
}

json vector_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json stage_json(const std::optional<int>& stage) {
  return stage ? json(*stage) : json("all");
}

Mode parse_mode(const Reader& r, const json& j, const std::string& ptr) {
  const std::string s = r.string(j, ptr);
  for (Mode m : {Mode::finite, Mode::stationary, Mode::stationary_tail}) {
    if (s == to_string(m)) return m;
  }
  r.fail(ptr, "unknown mode '" + s + "'");
}

SolverStatus parse_status(const Reader& r, const json& j, const std::string& ptr) {
  const std::string s = r.string(j, ptr);
  for (SolverStatus st : {SolverStatus::optimal, SolverStatus::infeasible, SolverStatus::unbounded,
                          SolverStatus::numerical_trouble}) {
    if (s == to_string(st)) return st;
  }
  r.fail(ptr, "unknown status '" + s + "'");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

// ---- problem files ---------------------------------------------------------

json problem_to_json(const ProblemFile& file) {
  const SynthesisProblem& p = file.problem;
  json j;
  j["dims"] = {{"n", p.dims.n}, {"m", p.dims.m}, {"N", p.dims.N}, {"s", p.dims.s}};
  j["mode"] = to_string(p.mode);
  if (p.gamma) j["gamma"] = *p.gamma;
  j["stages"] = json::array();
  for (const auto& st : p.stages) {
    j["stages"].push_back({{"f", vector_json(st.f)},
                           {"A", matrix_json(st.A)},
                           {"B", matrix_json(st.B)},
                           {"sigma_w", matrix_json(st.sigma_w)}});
  }
  j["costs"] = json::array();
  for (const auto& c : p.costs) j["costs"].push_back(matrix_json(c.M));
  j["constraints"] = json::array();
  for (const auto& c : p.constraints) {
    j["constraints"].push_back({{"stage", stage_json(c.stage)}, {"H", matrix_json(c.form.M)}});
  }
  if (!p.excitation.empty()) {
    j["excitation"] = json::array();
    for (const auto& e : p.excitation) {
      j["excitation"].push_back({{"stage", stage_json(e.stage)}, {"level", e.level}});
    }
  }
  j["initial"] = {{"sigma11", p.initial.sigma11()},
                  {"sigma12", vector_json(p.initial.sigma12().transpose())},
                  {"Sigma22", matrix_json(p.initial.Sigma22())}};
  if (!file.disks.empty()) {
    json disks = json::array();
    for (const auto& d : file.disks) {
      disks.push_back({{"center", vector_json(d.center)}, {"radius", d.radius}, {"margin", d.margin}});
    }
    j["scene"] = {{"disks", disks}};
  }
  return j;
}

ProblemFile problem_from_json(const json& j, const std::string& source) {
  const Reader r(source);
  r.object(j, "", {"dims", "mode", "stages", "costs", "initial"},
           {"gamma", "constraints", "excitation", "scene"});
  ProblemFile file;
  SynthesisProblem& p = file.problem;

  r.object(j["dims"], "/dims", {"n", "m", "N"}, {"s"});
  p.dims.n = r.integer(j["dims"]["n"], "/dims/n");
  p.dims.m = r.integer(j["dims"]["m"], "/dims/m");
  p.dims.N = r.integer(j["dims"]["N"], "/dims/N");
  if (j["dims"].contains("s")) p.dims.s = r.integer(j["dims"]["s"], "/dims/s");
  try {
    p.dims.validate();
  } catch (const std::exception& e) {
    r.fail("/dims", e.what());
  }
  const int n = p.dims.n, m = p.dims.m, d = p.dims.moment_size();

  p.mode = parse_mode(r, j["mode"], "/mode");
  if (j.contains("gamma")) p.gamma = r.number(j["gamma"], "/gamma");

  r.array(j["stages"], "/stages");
  for (std::size_t i = 0; i < j["stages"].size(); ++i) {
    const std::string ptr = "/stages/" + std::to_string(i);
    const json& s = j["stages"][i];
    r.object(s, ptr, {"f", "A", "B", "sigma_w"});
    p.stages.emplace_back(r.vector(s["f"], ptr + "/f", n), r.matrix(s["A"], ptr + "/A", n, n),
                          r.matrix(s["B"], ptr + "/B", n, m),
                          r.matrix(s["sigma_w"], ptr + "/sigma_w", n, n));
  }
  r.array(j["costs"], "/costs");
  for (std::size_t i = 0; i < j["costs"].size(); ++i) {
    const std::string ptr = "/costs/" + std::to_string(i);
    p.costs.emplace_back(r.matrix(j["costs"][i], ptr, d, d), FormSense::cost);
  }
  if (j.contains("constraints")) {
    r.array(j["constraints"], "/constraints");
    for (std::size_t i = 0; i < j["constraints"].size(); ++i) {
      const std::string ptr = "/constraints/" + std::to_string(i);
      const json& c = j["constraints"][i];
      r.object(c, ptr, {"stage", "H"});
      p.constraints.push_back({r.stage_index(c["stage"], ptr + "/stage"),
                               QuadraticForm(r.matrix(c["H"], ptr + "/H", d, d),
                                             FormSense::leq_zero)});
    }
  }
  if (j.contains("excitation")) {
    r.array(j["excitation"], "/excitation");
    for (std::size_t i = 0; i < j["excitation"].size(); ++i) {
      const std::string ptr = "/excitation/" + std::to_string(i);
      const json& e = j["excitation"][i];
      r.object(e, ptr, {"stage", "level"});
      p.excitation.push_back(
          {r.stage_index(e["stage"], ptr + "/stage"), r.number(e["level"], ptr + "/level")});
    }
  }

  const json& init = j["initial"];
  r.object(init, "/initial", {"sigma11", "sigma12", "Sigma22"});
  MatrixXd S0(1 + n, 1 + n);
  S0(0, 0) = r.number(init["sigma11"], "/initial/sigma11");
  const VectorXd s12 = r.vector(init["sigma12"], "/initial/sigma12", n);
  S0.block(0, 1, 1, n) = s12.transpose();
  S0.block(1, 0, n, 1) = s12;
  S0.bottomRightCorner(n, n) = r.matrix(init["Sigma22"], "/initial/Sigma22", n, n);
  if (!is_psd(S0)) r.fail("/initial", "state moment is not positive semidefinite");
  try {
    p.initial = StateMoment(S0);
  } catch (const std::exception& e) {
    r.fail("/initial", e.what());
  }

  if (j.contains("scene")) {
    r.object(j["scene"], "/scene", {}, {"disks"});
    if (j["scene"].contains("disks")) {
      const json& disks = r.array(j["scene"]["disks"], "/scene/disks");
      for (std::size_t i = 0; i < disks.size(); ++i) {
        const std::string ptr = "/scene/disks/" + std::to_string(i);
        r.object(disks[i], ptr, {"center", "radius"}, {"margin"});
        simulate::Disk disk;
        disk.center = r.vector(disks[i]["center"], ptr + "/center", -1);
        disk.radius = r.number(disks[i]["radius"], ptr + "/radius");
        if (disks[i].contains("margin")) disk.margin = r.number(disks[i]["margin"], ptr + "/margin");
        file.disks.push_back(std::move(disk));
      }
    }
  }

  try {
    p.validate();
  } catch (const std::exception& e) {
    r.fail("", e.what());
  }
  return file;
}

// ---- solution files --------------------------------------------------------

json solution_to_json(const SynthesisSolution& sol) {
  json j;
  j["status"] = to_string(sol.solver_status);
  j["mode"] = to_string(sol.mode);
  j["objective"] = sol.objective;
  j["iterations"] = sol.iterations;
  j["residuals"] = {{"propagation", sol.residuals},
                    {"max_equality", sol.max_eq_residual},
                    {"min_block_eigenvalue", sol.min_block_eigenvalue}};
  j["stages"] = json::array();
  if (!sol.moments.empty()) {
    j["dims"] = {{"n", sol.moments[0].n()}, {"m", sol.moments[0].m()}};
    j["classification"] = extract::to_string(extract::classify(sol.policies));
    j["max_excitation_trace"] = extract::max_excitation_trace(sol.policies);
  }
  for (std::size_t t = 0; t < sol.moments.size(); ++t) {
    const AffinePolicy& k = sol.policies[t];
    j["stages"].push_back({{"t", t},
                           {"sigma", matrix_json(sol.moments[t].data())},
                           {"k1", vector_json(k.k1)},
                           {"K2", matrix_json(k.K2)},
                           {"sigma_v", matrix_json(k.sigma_v)}});
  }
  return j;
}

SynthesisSolution solution_from_json(const json& j, const std::string& source) {
  const Reader r(source);
  r.object(j, "", {"status", "mode", "objective", "stages"},
           {"iterations", "residuals", "dims", "classification", "max_excitation_trace"});
  SynthesisSolution sol;
  sol.solver_status = parse_status(r, j["status"], "/status");
  sol.mode = parse_mode(r, j["mode"], "/mode");
  if (!j["objective"].is_null()) sol.objective = r.number(j["objective"], "/objective");
  if (j.contains("iterations")) sol.iterations = r.integer(j["iterations"], "/iterations");
  if (j.contains("residuals")) {
    const json& res = j["residuals"];
    r.object(res, "/residuals", {}, {"propagation", "max_equality", "min_block_eigenvalue"});
    if (res.contains("propagation")) {
      const VectorXd v = r.vector(res["propagation"], "/residuals/propagation", -1);
      sol.residuals.assign(v.data(), v.data() + v.size());
    }
    if (res.contains("max_equality")) {
      sol.max_eq_residual = r.number(res["max_equality"], "/residuals/max_equality");
    }
    if (res.contains("min_block_eigenvalue")) {
      sol.min_block_eigenvalue =
          r.number(res["min_block_eigenvalue"], "/residuals/min_block_eigenvalue");
    }
  }
  const json& stages = r.array(j["stages"], "/stages");
  if (stages.empty()) return sol;
  if (!j.contains("dims")) r.fail("/dims", "missing required field");
  r.object(j["dims"], "/dims", {"n", "m"});
  const int n = r.integer(j["dims"]["n"], "/dims/n");
  const int m = r.integer(j["dims"]["m"], "/dims/m");
  if (n < 1 || m < 1) r.fail("/dims", "n and m must be positive");
  const int d = 1 + n + m;
  for (std::size_t t = 0; t < stages.size(); ++t) {
    const std::string ptr = "/stages/" + std::to_string(t);
    const json& s = stages[t];
    r.object(s, ptr, {"sigma", "k1", "K2", "sigma_v"}, {"t"});
    if (s.contains("t") && r.integer(s["t"], ptr + "/t") != static_cast<int>(t)) {
      r.fail(ptr + "/t", "stages must be listed in order");
    }
    sol.moments.emplace_back(r.matrix(s["sigma"], ptr + "/sigma", d, d), n, m);
    AffinePolicy k;
    k.k1 = r.vector(s["k1"], ptr + "/k1", m);
    k.K2 = r.matrix(s["K2"], ptr + "/K2", m, n);
    k.sigma_v = r.matrix(s["sigma_v"], ptr + "/sigma_v", m, m);
    sol.policies.push_back(std::move(k));
  }
  return sol;
}

// ---- file helpers ----------------------------------------------------------

std::string canonical_dump(const json& j) {
  // nlohmann::json keeps object keys in a std::map, so keys come out sorted.
  return j.dump(2) + "\n";
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << canonical_dump(j);
  if (!out) throw std::runtime_error("error writing " + path);
}

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    int line = 1, col = 1;
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SchemaError(path + ":" + std::to_string(line) + ":" + std::to_string(col),
                      "JSON syntax error");
  }
}

ProblemFile read_problem(const std::string& path) {
  return problem_from_json(read_json(path), path);
}

SynthesisSolution read_solution(const std::string& path) {
  return solution_from_json(read_json(path), path);
}

SynthesisSettings settings_from_env() {
  SynthesisSettings s;
  if (const char* v = std::getenv("MOMSYN_SOLVER_TOL")) {
    char* end = nullptr;
    const double tol = std::strtod(v, &end);
    if (end == v || *end != '\0' || !(tol > 0.0) || !std::isfinite(tol)) {
      throw std::invalid_argument(std::string("MOMSYN_SOLVER_TOL: not a positive number: ") + v);
    }
    s.solver.feas_tol = tol;
  }
  return s;
}

// ---- verification ----------------------------------------------------------

bool VerifyReport::pass() const { return first_failure() == nullptr; }

const Check* VerifyReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.pass) return &c;
  }
  return nullptr;
}

void VerifyReport::print(std::ostream& os) const {
  os << std::left << std::setw(22) << "check" << std::setw(7) << "stage" << std::setw(12)
     << "value" << std::setw(12) << "limit"
     << "result\n";
  for (const auto& c : checks) {
    os << std::setw(22) << c.name << std::setw(7) << (c.stage < 0 ? "-" : std::to_string(c.stage))
       << std::setw(12) << fmt(c.value) << std::setw(12) << fmt(c.limit)
       << (c.pass ? "ok" : "FAIL") << "\n";
  }
  if (const Check* f = first_failure()) {
    os << "verify: FAIL (" << f->name;
    if (f->stage >= 0) os << " at stage " << f->stage;
    os << ")\n";
  } else {
    os << "verify: PASS (" << checks.size() << " checks)\n";
  }
}

VerifyReport verify(const SynthesisProblem& problem, const SynthesisSolution& sol, double tol) {
  VerifyReport rep;
  auto add = [&](const std::string& name, int stage, double value, double limit) {
    const bool ok = std::isfinite(value) && value <= limit;
    rep.checks.push_back({name, stage, value, limit, ok});
  };
  add("status_optimal", -1, sol.solver_status == SolverStatus::optimal ? 0.0 : 1.0, 0.0);

  const int T = problem.moment_count();
  const auto& S = sol.moments;
  const int n = problem.dims.n, m = problem.dims.m;
  bool shapes = static_cast<int>(S.size()) == T && sol.policies.size() == S.size();
  for (std::size_t t = 0; shapes && t < S.size(); ++t) {
    shapes = S[t].n() == n && S[t].m() == m && sol.policies[t].n() == n &&
             sol.policies[t].m() == m;
  }
  add("stage_count", -1, shapes ? 0.0 : 1.0, 0.0);
  if (!shapes) return rep;

  std::vector<double> scale(T);
  for (int t = 0; t < T; ++t) scale[t] = std::max(1.0, S[t].data().norm());

  for (int t = 0; t < T; ++t) {
    add("psd_violation", t, std::max(0.0, -min_eigenvalue(S[t].data())) / scale[t], tol);
  }
  for (int t = 0; t < T; ++t) {
    add("normalization", t, std::abs(S[t].sigma11() - 1.0), tol);
  }
  const bool pinned = problem.mode == Mode::finite ||
                      (problem.mode == Mode::stationary_tail && problem.dims.N > 0);
  if (pinned) {
    const MatrixXd diff = S[0].state_moment().data() - problem.initial.data();
    add("initial_block", 0, diff.norm() / scale[0], tol);
  }

  const std::vector<double> res = propagation_residuals(problem, S);
  for (std::size_t i = 0; i < res.size(); ++i) {
    const int from = std::min(static_cast<int>(i), T - 1);
    const int to = std::min(static_cast<int>(i) + 1, T - 1);
    add("propagation", static_cast<int>(i), res[i] / std::max(scale[from], scale[to]), tol);
  }

  for (const auto& c : problem.constraints) {
    const double hn = std::max(1.0, c.form.M.norm());
    for (int t = 0; t < T; ++t) {
      if (c.stage && *c.stage != t) continue;
      add("constraint_slack", t, quad_expectation(S[t], c.form) / (scale[t] * hn), tol);
    }
  }
  for (const auto& e : problem.excitation) {
    for (int t = 0; t < T; ++t) {
      if (e.stage && *e.stage != t) continue;
      const double lo = min_eigenvalue(sol.policies[t].sigma_v);
      add("excitation_slack", t, (e.level - lo) / scale[t], tol);
    }
  }

  // The stored policy must realize each stored moment from its state block.
  for (int t = 0; t < T; ++t) {
    const AffinePolicy& k = sol.policies[t];
    double err = 0.0;
    try {
      if (min_eigenvalue(k.sigma_v) < -tol * std::max(1.0, k.sigma_v.norm())) {
        throw DefinitenessError("sigma_v");
      }
      err = (extract::close_loop(S[t].state_moment(), k).data() - S[t].data()).norm() / scale[t];
    } catch (const std::exception&) {
      err = std::numeric_limits<double>::infinity();
    }
    add("policy_roundtrip", t, err, tol);
  }

  std::vector<double> w(T, 1.0);
  if (problem.mode == Mode::stationary_tail) w = builder::discount_weights(problem.dims.N, *problem.gamma);
  double obj = 0.0;
  for (int t = 0; t < T; ++t) obj += w[t] * quad_expectation(S[t], problem.cost(t));
  add("objective", -1, std::abs(obj - sol.objective) / std::max(1.0, std::abs(obj)), tol);
  return rep;
}

// ---- simulation ------------------------------------------------------------

simulate::TrajectoryBatch simulate_solution(const SynthesisProblem& problem,
                                            const SynthesisSolution& sol,
                                            const SimulateOptions& opt) {
  if (sol.moments.empty()) throw std::invalid_argument("solution has no stages");
  if (static_cast<int>(sol.policies.size()) != problem.moment_count()) {
    throw DimensionError("solution has " + std::to_string(sol.policies.size()) +
                         " stages, problem needs " + std::to_string(problem.moment_count()));
  }
  const int n = problem.dims.n, m = problem.dims.m;
  if (sol.policies[0].n() != n || sol.policies[0].m() != m) {
    throw DimensionError("solution and problem dimensions differ");
  }
  int H = problem.dims.N;
  std::vector<SystemStage> stages = problem.stages;
  std::vector<AffinePolicy> policies = sol.policies;
  if (problem.mode == Mode::stationary) {
    H = opt.horizon;
  } else {
    policies.resize(H);
    if (stages.size() > 1) stages.resize(H);
  }
  if (H == 0 || opt.trajectories == 0) {
    simulate::TrajectoryBatch empty;
    empty.n = n;
    empty.m = m;
    return empty;
  }
  simulate::SimConfig cfg;
  cfg.trajectories = opt.trajectories;
  cfg.seed = opt.seed;
  cfg.horizon = H;
  return simulate::simulate_linear(stages, policies, simulate::gaussian_sampler(problem.initial),
                                   cfg);
}

namespace {

simulate::Scene default_scene(const ProblemFile& file, const std::string& title) {
  simulate::Scene scene;
  scene.title = title;
  scene.disks = file.disks;
  scene.kind = file.problem.dims.n >= 2 && !file.disks.empty() ? simulate::Scene::Kind::plane
                                                               : simulate::Scene::Kind::time_series;
  return scene;
}

void report_status(const SynthesisSolution& sol, std::ostream& out) {
  out << "status: " << to_string(sol.solver_status) << "\n";
  if (sol.solver_status != SolverStatus::optimal) return;
  out << "objective: " << std::setprecision(10) << sol.objective << "\n"
      << "iterations: " << sol.iterations << "\n"
      << "policy: " << extract::to_string(extract::classify(sol.policies))
      << " (max trace Sigma_v = " << fmt(extract::max_excitation_trace(sol.policies)) << ")\n";
}

// Shared tail of every example: solution, simulation files and report.
bool finish_example(const std::string& dir, const ProblemFile& file, const SynthesisSolution& sol,
                    const simulate::TrajectoryBatch& batch, const simulate::Scene& scene,
                    std::ostream& out) {
  write_json(solution_to_json(sol), join(dir, "solution.json"));
  simulate::export_csv(batch, join(dir, "trajectories.csv"));
  simulate::render_svg(batch, scene, join(dir, "trajectories.svg"));
  const VerifyReport rep = verify(file.problem, sol);
  std::ofstream txt(join(dir, "verify.txt"));
  rep.print(txt);
  out << (rep.pass() ? "verify: PASS" : "verify: FAIL") << "\n";
  return rep.pass();
}

int example_obstacle(bool second, const std::string& dir, const ExampleOptions& opt,
                     const SynthesisSettings& settings, std::ostream& out) {
  scenarios::ObstacleScenario s = second ? scenarios::ObstacleScenario::test2(opt.perturb)
                                         : scenarios::ObstacleScenario::test1();
  s.horizon = opt.horizon;
  ProblemFile file;
  file.problem = scenarios::make_obstacle_problem(s);
  for (const auto& o : s.obstacles) file.disks.push_back({o.center, o.radius, s.margin});
  write_json(problem_to_json(file), join(dir, "problem.json"));

  const SynthesisSolution sol = synthesize(file.problem, settings);
  report_status(sol, out);
  if (sol.solver_status != SolverStatus::optimal) {
    write_json(solution_to_json(sol), join(dir, "solution.json"));
    return exit_code(sol.solver_status);
  }
  SimulateOptions so;
  so.trajectories = opt.trajectories > 0 ? opt.trajectories : 10;
  so.seed = opt.seed;
  const auto batch = simulate_solution(file.problem, sol, so);

  json summary;
  summary["scenario"] = second ? "obstacle2" : "obstacle1";
  summary["objective"] = sol.objective;
  summary["classification"] = extract::to_string(extract::classify(sol.policies));
  summary["max_excitation_trace"] = extract::max_excitation_trace(sol.policies);
  summary["trajectories"] = batch.size();
  summary["obstacles"] = json::array();
  for (const auto& o : s.obstacles) {
    double mean_clearance = std::numeric_limits<double>::infinity();
    for (const auto& S : sol.moments) {
      mean_clearance = std::min(mean_clearance, (S.state_moment().mean() - o.center).norm());
    }
    int entered = 0;
    for (const auto& X : batch.states) {
      bool in = false;
      for (int k = 0; k < X.rows(); ++k) in |= (X.row(k).transpose() - o.center).norm() < o.radius;
      entered += in;
    }
    summary["obstacles"].push_back({{"center", vector_json(o.center)},
                                    {"radius", o.radius},
                                    {"mean_path_distance", mean_clearance},
                                    {"trajectories_entering", entered}});
    out << "obstacle (" << o.center(0) << ", " << o.center(1) << "): mean path distance "
        << std::setprecision(4) << mean_clearance << ", " << entered << "/" << batch.size()
        << " sampled paths enter radius " << o.radius << "\n";
  }
  summary["terminal_mean_norm"] = sol.moments.back().state_moment().mean().norm();
  const bool ok = finish_example(dir, file, sol, batch,
                                 default_scene(file, second ? "obstacle2" : "obstacle1"), out);
  summary["verify"] = ok;
  write_json(summary, join(dir, "summary.json"));
  return ok ? kOk : kFailure;
}

int example_pendulum(const std::string& dir, const ExampleOptions& opt,
                     const SynthesisSettings& settings, std::ostream& out) {
  using namespace pendulum;
  const PendulumParams p;
  EscapeDesign design;
  if (opt.variant == "verbatim") {
    design.variant = ModelVariant::verbatim;
  } else if (opt.variant != "consistent") {
    throw std::invalid_argument("unknown pendulum variant '" + opt.variant + "'");
  }
  ProblemFile file;
  file.problem = escape_problem(p, design);
  write_json(problem_to_json(file), join(dir, "problem.json"));
  const SynthesisSolution sol = synthesize(file.problem, settings);
  report_status(sol, out);
  if (sol.solver_status != SolverStatus::optimal) {
    write_json(solution_to_json(sol), join(dir, "solution.json"));
    return exit_code(sol.solver_status);
  }

  const double level = design.excitation_scale * p.h;
  const double excitation = sol.policies[0].sigma_v.trace();
  const double cap = energy(p, design.variant, design.energy_angle, 0.0);
  const double mean_energy = quad_expectation(
      sol.moments[0], QuadraticForm(energy_form(p, design.variant, 0.0), FormSense::cost));
  out << "excitation: trace Sigma_v = " << std::setprecision(8) << excitation << " (bound "
      << level << ")\n"
      << "energy: E e = " << mean_energy << " (cap " << cap << ")\n";

  const Stabilizer stab = design_stabilizer(p);
  const double c = attraction_level(p, stab);
  out << "switch level: " << c << "\n";

  const int runs = opt.trajectories > 0 ? opt.trajectories : 2;
  const double sim_time = 80.0, settle = 10.0, angle_tol = 0.05, deadline = 60.0;
  simulate::TrajectoryBatch all;
  all.n = 4;
  all.m = 1;
  all.dt = p.h;
  json summary;
  summary["excitation_trace"] = excitation;
  summary["excitation_bound"] = level;
  summary["mean_energy"] = mean_energy;
  summary["energy_cap"] = cap;
  summary["switch_level"] = c;
  summary["runs"] = json::array();
  int successes = 0;
  for (int i = 0; i < runs; ++i) {
    simulate::SimConfig cfg;
    cfg.seed = opt.seed + static_cast<std::uint64_t>(i);
    cfg.horizon = static_cast<int>(std::lround(sim_time / p.h));
    json run = {{"seed", cfg.seed}};
    try {
      const PendulumRun r = simulate_pendulum(p, sol.policies[0], stab.policy, {stab.P, c}, cfg);
      const double ts = r.switch_time[0];
      const MatrixXd& X = r.batch.states[0];
      double worst = std::numeric_limits<double>::infinity();
      if (ts >= 0.0 && ts + settle <= sim_time) {
        worst = 0.0;
        for (int k = static_cast<int>(std::lround((ts + settle) / p.h)); k < X.rows(); ++k) {
          worst = std::max(worst, std::abs(upright_deviation(X.row(k).transpose())(1)));
        }
      }
      const bool ok = ts >= 0.0 && ts <= deadline && worst <= angle_tol;
      successes += ok;
      run["switch_time"] = ts;
      run["max_angle_error_after_settling"] = std::isfinite(worst) ? json(worst) : json(nullptr);
      run["swing_up"] = ok;
      all.horizon = r.batch.horizon;
      all.states.push_back(X);
      all.inputs.push_back(r.batch.inputs[0]);
      all.seeds.push_back(r.batch.seeds[0]);
      out << "seed " << cfg.seed << ": "
          << (ts >= 0.0 ? "switched at " + std::to_string(ts) + " s" : std::string("no switch"))
          << (ok ? ", upright" : "") << "\n";
    } catch (const DivergenceError& e) {
      run["diverged_at"] = e.time();
      run["swing_up"] = false;
      out << "seed " << cfg.seed << ": diverged at " << e.time() << " s\n";
    }
    summary["runs"].push_back(run);
  }
  summary["swing_up_count"] = successes;
  simulate::Scene scene;
  scene.kind = simulate::Scene::Kind::time_series;
  scene.title = "pendulum angle";
  scene.components = {1};
  const bool ok = finish_example(dir, file, sol, all, scene, out);
  summary["verify"] = ok;
  write_json(summary, join(dir, "summary.json"));
  return ok ? kOk : kFailure;
}

int example_h2(const std::string& dir, const ExampleOptions& opt,
               const SynthesisSettings& settings, std::ostream& out) {
  const scenarios::H2Instance inst = scenarios::random_h2_problem(opt.seed, 2, 1);
  ProblemFile file;
  file.problem = inst.problem;
  write_json(problem_to_json(file), join(dir, "problem.json"));
  const SynthesisSolution sol = synthesize(file.problem, settings);
  report_status(sol, out);
  if (sol.solver_status != SolverStatus::optimal) {
    write_json(solution_to_json(sol), join(dir, "solution.json"));
    return exit_code(sol.solver_status);
  }
  const MatrixXd& K2 = sol.policies[0].K2;
  const int n = file.problem.dims.n;
  MatrixXd Cx(K2.rows() + n, n);
  Cx << MatrixXd::Identity(n, n), K2;
  const double h2 = duality::h2_norm_squared(file.problem.stages[0], inst.C * Cx, inst.B2, K2);
  const double rel = std::abs(sol.objective - h2) / std::max(1e-300, std::abs(h2));
  out << "H2 norm squared at extracted gain: " << std::setprecision(10) << h2
      << ", relative difference " << fmt(rel) << "\n";

  SimulateOptions so;
  so.seed = opt.seed;
  const auto batch = simulate_solution(file.problem, sol, so);
  const bool ok = finish_example(dir, file, sol, batch, default_scene(file, "h2check"), out);
  json summary = {{"objective", sol.objective}, {"h2_norm_squared", h2},
                  {"relative_difference", rel}, {"verify", ok}};
  write_json(summary, join(dir, "summary.json"));
  return ok && rel <= 1e-5 ? kOk : kFailure;
}

int example_lqr(const std::string& dir, const ExampleOptions& opt,
                const SynthesisSettings& settings, std::ostream& out) {
  ProblemFile file;
  file.problem = scenarios::random_lqr_problem(opt.seed, 3, 2, 10);
  write_json(problem_to_json(file), join(dir, "problem.json"));
  const SynthesisSolution sol = synthesize(file.problem, settings);
  report_status(sol, out);
  if (sol.solver_status != SolverStatus::optimal) {
    write_json(solution_to_json(sol), join(dir, "solution.json"));
    return exit_code(sol.solver_status);
  }
  std::vector<MatrixXd> costs;
  for (const auto& c : file.problem.costs) costs.push_back(c.M);
  const auto ric = duality::riccati_lqr(file.problem.stages, costs);
  const int N = file.problem.dims.N;
  double gain_err = 0.0;
  for (int t = 0; t < N; ++t) {
    gain_err = std::max(gain_err, (sol.policies[t].gain() - ric.gains[t]).cwiseAbs().maxCoeff());
  }
  if (ric.terminal_gain) {
    gain_err =
        std::max(gain_err, (sol.policies[N].gain() - *ric.terminal_gain).cwiseAbs().maxCoeff());
  }
  const double excitation = extract::max_excitation_trace(sol.policies);
  out << "max gain difference to Riccati: " << fmt(gain_err) << "\n";

  SimulateOptions so;
  so.seed = opt.seed;
  const auto batch = simulate_solution(file.problem, sol, so);
  const bool ok = finish_example(dir, file, sol, batch, default_scene(file, "lqrcheck"), out);
  json summary = {{"objective", sol.objective}, {"max_gain_difference", gain_err},
                  {"max_excitation_trace", excitation}, {"verify", ok}};
  write_json(summary, join(dir, "summary.json"));
  return ok && gain_err <= 1e-4 && excitation <= 1e-6 ? kOk : kFailure;
}

template <class F>
int guarded(std::ostream& out, F&& body) {
  try {
    return body();
  } catch (const SchemaError& e) {
    out << "schema error: " << e.what() << "\n";
    return kSchema;
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace

// ---- commands --------------------------------------------------------------

int cmd_synthesize(const std::string& problem_path, const std::string& out_path,
                   const SynthesisSettings& settings, std::ostream& out) {
  return guarded(out, [&] {
    const ProblemFile file = read_problem(problem_path);
    const SynthesisSolution sol = synthesize(file.problem, settings);
    write_json(solution_to_json(sol), out_path);
    report_status(sol, out);
    return exit_code(sol.solver_status);
  });
}

int cmd_simulate(const std::string& solution_path, const std::string& problem_path,
                 const SimulateOptions& opt, std::ostream& out) {
  return guarded(out, [&] {
    const ProblemFile file = read_problem(problem_path);
    const SynthesisSolution sol = read_solution(solution_path);
    if (sol.solver_status != SolverStatus::optimal) {
      out << "error: solution status is " << to_string(sol.solver_status) << "\n";
      return exit_code(sol.solver_status);
    }
    const auto batch = simulate_solution(file.problem, sol, opt);
    if (!opt.csv.empty()) simulate::export_csv(batch, opt.csv);
    if (!opt.svg.empty()) simulate::render_svg(batch, default_scene(file, problem_path), opt.svg);
    out << "simulated " << batch.size() << " trajectories of " << batch.horizon << " steps\n";
    return static_cast<int>(kOk);
  });
}

int cmd_verify(const std::string& solution_path, const std::string& problem_path, double tol,
               std::ostream& out) {
  return guarded(out, [&] {
    const ProblemFile file = read_problem(problem_path);
    const SynthesisSolution sol = read_solution(solution_path);
    const VerifyReport rep = verify(file.problem, sol, tol);
    rep.print(out);
    return rep.pass() ? kOk : kFailure;
  });
}

const std::vector<std::string>& example_names() {
  static const std::vector<std::string> names = {"obstacle1", "obstacle2", "pendulum", "h2check",
                                                 "lqrcheck"};
  return names;
}

int cmd_example(const std::string& name, const std::string& out_dir, const ExampleOptions& opt,
                const SynthesisSettings& settings, std::ostream& out) {
  return guarded(out, [&] {
    const auto& names = example_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw std::invalid_argument("unknown example '" + name + "'");
    }
    ensure_dir(out_dir);
    if (name == "obstacle1") return example_obstacle(false, out_dir, opt, settings, out);
    if (name == "obstacle2") return example_obstacle(true, out_dir, opt, settings, out);
    if (name == "pendulum") return example_pendulum(out_dir, opt, settings, out);
    if (name == "h2check") return example_h2(out_dir, opt, settings, out);
    return example_lqr(out_dir, opt, settings, out);
  });
}

}  // namespace momsyn::cli
