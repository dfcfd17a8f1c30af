#include "momsyn/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace momsyn::simulate {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

VectorXd standard_normal(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g;
  VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = g(rng);
  return v;
}

template <class T>
const T& pick(const std::vector<T>& v, int t) {
  return v.size() == 1 ? v.front() : v[static_cast<std::size_t>(t)];
}

MatrixXd checked_sqrt(const MatrixXd& S, const char* what) {
  if (!is_psd(S)) throw DefinitenessError(std::string(what) + " is not PSD");
  return psd_sqrt(S);
}

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// handled by exactly one worker, so results do not depend on scheduling.
template <class F>
void parallel_for(int count, int threads, F body) {
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(1, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void SimConfig::validate() const {
  if (trajectories < 1) throw std::invalid_argument("SimConfig: trajectories < 1");
  if (horizon < 0) throw std::invalid_argument("SimConfig: horizon < 0");
}

std::uint64_t trajectory_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ index);
}

InitialSampler gaussian_sampler(const StateMoment& initial) {
  const VectorXd mean = initial.mean();
  const MatrixXd L = psd_sqrt(initial.covariance());
  const bool dirac = L.norm() == 0.0;
  return [mean, L, dirac](std::mt19937_64& rng) -> VectorXd {
    if (dirac) return mean;
    return mean + L * standard_normal(rng, static_cast<int>(mean.size()));
  };
}

TrajectoryBatch simulate_linear(const std::vector<SystemStage>& stages,
                                const std::vector<AffinePolicy>& policies,
                                const InitialSampler& sampler, const SimConfig& config) {
  config.validate();
  const int H = config.horizon;
  auto count_ok = [H](std::size_t k) { return k == 1 || static_cast<int>(k) == H; };
  if (H > 0 && (stages.empty() || policies.empty()))
    throw DimensionError("simulate_linear: missing stages or policies");
  if (H > 0 && (!count_ok(stages.size()) || !count_ok(policies.size())))
    throw DimensionError("simulate_linear: need horizon or one stage/policy entry");

  int n = 0, m = 0;
  if (!stages.empty()) {
    n = stages.front().n();
    m = stages.front().m();
  } else if (!policies.empty()) {
    n = policies.front().n();
    m = policies.front().m();
  }
  if (stages.empty() && policies.empty()) {
    std::mt19937_64 probe(0);
    n = static_cast<int>(sampler(probe).size());
  }
  std::vector<MatrixXd> Lw, Lv;
  for (const auto& st : stages) {
    st.validate(n, m);
    Lw.push_back(checked_sqrt(st.sigma_w, "sigma_w"));
  }
  for (const auto& p : policies) {
    if (p.n() != n || p.m() != m || p.k1.size() != m)
      throw DimensionError("simulate_linear: policy dimensions");
    Lv.push_back(checked_sqrt(p.sigma_v, "sigma_v"));
  }

  TrajectoryBatch batch;
  batch.n = n;
  batch.m = m;
  batch.horizon = H;
  batch.states.assign(config.trajectories, MatrixXd());
  if (config.record_inputs) batch.inputs.assign(config.trajectories, MatrixXd());
  batch.seeds.resize(config.trajectories);

  parallel_for(config.trajectories, config.threads, [&](int i) {
    const std::uint64_t s = trajectory_seed(config.seed, static_cast<std::uint64_t>(i));
    batch.seeds[i] = s;
    std::mt19937_64 rng(s);
    VectorXd x = sampler(rng);
    if (x.size() != n) throw DimensionError("simulate_linear: sampler dimension");
    MatrixXd X(H + 1, n);
    MatrixXd U(config.record_inputs ? H : 0, m);
    X.row(0) = x.transpose();
    for (int t = 0; t < H; ++t) {
      const AffinePolicy& p = pick(policies, t);
      const SystemStage& st = pick(stages, t);
      const VectorXd u = p.k1 + p.K2 * x + pick(Lv, t) * standard_normal(rng, m);
      x = st.f + st.A * x + st.B * u + pick(Lw, t) * standard_normal(rng, n);
      X.row(t + 1) = x.transpose();
      if (config.record_inputs) U.row(t) = u.transpose();
    }
    batch.states[i] = std::move(X);
    if (config.record_inputs) batch.inputs[i] = std::move(U);
  });
  return batch;
}

EmpiricalMoment empirical_moments_with_error(const TrajectoryBatch& batch, int t) {
  if (t < 0 || t >= batch.horizon) throw std::out_of_range("empirical_moments: stage out of range");
  if (batch.inputs.size() != batch.states.size() || batch.states.empty())
    throw std::out_of_range("empirical_moments: inputs not recorded");
  const int d = 1 + batch.n + batch.m;
  const double count = batch.size();
  MatrixXd sum = MatrixXd::Zero(d, d), sq = MatrixXd::Zero(d, d);
  VectorXd z(d);
  for (int i = 0; i < batch.size(); ++i) {
    z << 1.0, batch.states[i].row(t).transpose(), batch.inputs[i].row(t).transpose();
    const MatrixXd zz = z * z.transpose();
    sum += zz;
    sq += zz.cwiseProduct(zz);
  }
  const MatrixXd mean = sum / count;
  MatrixXd se = MatrixXd::Zero(d, d);
  if (count > 1) {
    const MatrixXd var = ((sq / count) - mean.cwiseProduct(mean)).cwiseMax(0.0) * (count / (count - 1));
    se = (var / count).cwiseSqrt();
  }
  return {MomentMatrix(mean, batch.n, batch.m), se};
}

MomentMatrix empirical_moments(const TrajectoryBatch& batch, int t) {
  return empirical_moments_with_error(batch, t).mean;
}

void export_csv(const TrajectoryBatch& batch, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "trajectory_id,t";
  for (int j = 1; j <= batch.n; ++j) out << ",x" << j;
  for (int j = 1; j <= batch.m; ++j) out << ",u" << j;
  out << '\n';
  const bool have_u = batch.inputs.size() == batch.states.size();
  for (int i = 0; i < batch.size(); ++i) {
    const MatrixXd& X = batch.states[i];
    for (int t = 0; t < X.rows(); ++t) {
      out << i << ',' << (batch.dt > 0.0 ? fmt(t * batch.dt) : std::to_string(t));
      for (int j = 0; j < X.cols(); ++j) out << ',' << fmt(X(t, j));
      for (int j = 0; j < batch.m; ++j) {
        out << ',';
        if (have_u && t < batch.inputs[i].rows()) out << fmt(batch.inputs[i](t, j));
      }
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string svg_string(const TrajectoryBatch& batch, const Scene& scene) {
  const double W = 640, Hpx = 480, pad = 40;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W
     << "\" height=\"" << Hpx << "\" viewBox=\"0 0 " << W << ' ' << Hpx << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!scene.title.empty()) {
    os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"14\">"
       << scene.title << "</text>\n";
  }

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto grow = [&](double x, double y) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  };

  std::vector<int> comps = scene.components;
  if (scene.kind == Scene::Kind::time_series && comps.empty())
    for (int j = 0; j < batch.n; ++j) comps.push_back(j);
  const double step = batch.dt > 0.0 ? batch.dt : 1.0;

  if (scene.kind == Scene::Kind::plane) {
    if (batch.n < 2 && batch.size() > 0) throw DimensionError("render_svg: plane view needs n >= 2");
    for (const auto& X : batch.states)
      for (int t = 0; t < X.rows(); ++t) grow(X(t, 0), X(t, 1));
    for (const auto& d : scene.disks) {
      const double r = d.radius + d.margin;
      grow(d.center(0) - r, d.center(1) - r);
      grow(d.center(0) + r, d.center(1) + r);
    }
  } else {
    for (const auto& X : batch.states)
      for (int t = 0; t < X.rows(); ++t)
        for (int c : comps) grow(t * step, X(t, c));
  }
  if (!std::isfinite(xmin)) {
    xmin = ymin = -1.0;
    xmax = ymax = 1.0;
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;

  double sx = (W - 2 * pad) / (xmax - xmin), sy = (Hpx - 2 * pad) / (ymax - ymin);
  if (scene.kind == Scene::Kind::plane) sx = sy = std::min(sx, sy);  // equal aspect
  auto px = [&](double x) { return pad + (x - xmin) * sx; };
  auto py = [&](double y) { return Hpx - pad - (y - ymin) * sy; };

  for (const auto& d : scene.disks) {
    if (scene.kind != Scene::Kind::plane) break;
    os << "<circle cx=\"" << px(d.center(0)) << "\" cy=\"" << py(d.center(1)) << "\" r=\""
       << d.radius * sx << "\" fill=\"black\"/>\n";
    if (d.margin > 0.0) {
      os << "<circle cx=\"" << px(d.center(0)) << "\" cy=\"" << py(d.center(1)) << "\" r=\""
         << (d.radius + d.margin) * sx
         << "\" fill=\"none\" stroke=\"gray\" stroke-dasharray=\"4,3\"/>\n";
    }
  }

  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  int colour = 0;
  for (const auto& X : batch.states) {
    const std::vector<int> lines =
        scene.kind == Scene::Kind::plane ? std::vector<int>{0} : comps;
    for (int c : lines) {
      os << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << palette[colour++ % 10]
         << "\" points=\"";
      for (int t = 0; t < X.rows(); ++t) {
        const double a = scene.kind == Scene::Kind::plane ? X(t, 0) : t * step;
        const double b = scene.kind == Scene::Kind::plane ? X(t, 1) : X(t, c);
        os << (t ? " " : "") << px(a) << ',' << py(b);
      }
      os << "\"/>\n";
    }
  }
  os << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << W - 2 * pad << "\" height=\""
     << Hpx - 2 * pad << "\" fill=\"none\" stroke=\"black\" stroke-width=\"0.5\"/>\n"
     << "</svg>\n";
  return os.str();
}

void render_svg(const TrajectoryBatch& batch, const Scene& scene, const std::string& path) {
  const std::string s = svg_string(batch, scene);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << s;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace momsyn::simulate
