#include "clbf/run_config.hpp"

#include <cmath>
#include <functional>

#include "clbf/benchmarks.hpp"
#include "clbf/errors.hpp"
#include "clbf/keyvalue.hpp"

namespace clbf {

ZubovProblem RunConfig::problem() const {
  return {model->system, model->safe, RunningCost(theta, Q, R, k, barrier_on), ZubovTransform(alpha),
          ControlSet(u_max, samples_per_axis)};
}

std::shared_ptr<const Grid> RunConfig::grid() const {
  return std::make_shared<const Grid>(Grid::build(lower, upper, counts, constrained ? &model->safe : nullptr));
}

namespace {

[[noreturn]] void bad(const std::string& key, int line, const std::string& why) {
  throw ConfigError(ConfigErrorKind::kBadValue, line, "'" + key + "': " + why);
}

double real(const std::string& key, const std::string& v, int line) {
  const auto d = parse_double(trim(v));
  if (!d || !std::isfinite(*d)) bad(key, line, "expected a real, got '" + v + "'");
  return *d;
}

double positive(const std::string& key, const std::string& v, int line) {
  const double d = real(key, v, line);
  if (!(d > 0.0)) bad(key, line, "must be positive");
  return d;
}

long long integer(const std::string& key, const std::string& v, int line) {
  const auto i = parse_integer(trim(v));
  if (!i) bad(key, line, "expected an integer, got '" + v + "'");
  return *i;
}

bool boolean(const std::string& key, const std::string& v, int line) {
  const auto b = parse_bool(trim(v));
  if (!b) bad(key, line, "expected a boolean, got '" + v + "'");
  return *b;
}

Eigen::VectorXd reals(const std::string& key, const std::string& v, int line) {
  const auto parts = split(v, ',');
  Eigen::VectorXd out(static_cast<Eigen::Index>(parts.size()));
  for (size_t i = 0; i < parts.size(); ++i) out[static_cast<Eigen::Index>(i)] = real(key, std::string(parts[i]), line);
  return out;
}

std::vector<int> integers(const std::string& key, const std::string& v, int line) {
  std::vector<int> out;
  for (std::string_view p : split(v, ',')) {
    const long long i = integer(key, std::string(p), line);
    if (i < 0 || i > 1'000'000'000) bad(key, line, "integer out of range");
    out.push_back(static_cast<int>(i));
  }
  return out;
}

bool is_system_key(const std::string& key) {
  return key == "state_dim" || key == "input_dim" || key == "h" || key == "name" || key == "safe.description" ||
         key.rfind("f.", 0) == 0 || key.rfind("g.", 0) == 0;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value, int line)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"grid.lower", [](RunConfig& c, auto& k, auto& v, int l) { c.lower = reals(k, v, l); }},
      {"grid.upper", [](RunConfig& c, auto& k, auto& v, int l) { c.upper = reals(k, v, l); }},
      {"grid.counts", [](RunConfig& c, auto& k, auto& v, int l) { c.counts = integers(k, v, l); }},
      {"grid.constrained", [](RunConfig& c, auto& k, auto& v, int l) { c.constrained = boolean(k, v, l); }},
      {"controls.u_max", [](RunConfig& c, auto& k, auto& v, int l) { c.u_max = reals(k, v, l); }},
      {"controls.samples", [](RunConfig& c, auto& k, auto& v, int l) { c.samples_per_axis = static_cast<int>(integer(k, v, l)); }},
      {"solver.dt", [](RunConfig& c, auto& k, auto& v, int l) { c.solver.dt = positive(k, v, l); }},
      {"solver.tol", [](RunConfig& c, auto& k, auto& v, int l) { c.solver.tol = positive(k, v, l); }},
      {"solver.max_sweeps",
       [](RunConfig& c, auto& k, auto& v, int l) {
         const long long s = integer(k, v, l);
         if (s < 1 || s > 100'000'000) bad(k, l, "must be in 1..100000000");
         c.solver.max_sweeps = static_cast<int>(s);
       }},
      {"solver.integrator",
       [](RunConfig& c, auto& k, auto& v, int l) {
         const auto i = parse_integrator(trim(v));
         if (!i) bad(k, l, "expected 'euler' or 'rk4'");
         c.solver.integrator = *i;
       }},
      {"solver.workers",
       [](RunConfig& c, auto& k, auto& v, int l) {
         const long long w = integer(k, v, l);
         if (w < 0 || w > 4096) bad(k, l, "must be in 0..4096");
         c.solver.workers = static_cast<int>(w);
       }},
      {"cost.theta", [](RunConfig& c, auto& k, auto& v, int l) { c.theta = positive(k, v, l); }},
      {"cost.k", [](RunConfig& c, auto& k, auto& v, int l) { c.k = real(k, v, l); }},
      {"cost.barrier_on", [](RunConfig& c, auto& k, auto& v, int l) { c.barrier_on = boolean(k, v, l); }},
      {"cost.Q",
       [](RunConfig& c, auto& k, auto& v, int l) {
         const Eigen::VectorXd e = reals(k, v, l);
         const Eigen::Index n = c.Q.rows();
         if (e.size() != n * n) bad(k, l, "expected " + std::to_string(n * n) + " row-major entries");
         c.Q = e.reshaped<Eigen::RowMajor>(n, n);
       }},
      {"cost.R",
       [](RunConfig& c, auto& k, auto& v, int l) {
         const Eigen::VectorXd e = reals(k, v, l);
         const Eigen::Index m = c.R.rows();
         if (e.size() != m * m) bad(k, l, "expected " + std::to_string(m * m) + " row-major entries");
         c.R = e.reshaped<Eigen::RowMajor>(m, m);
       }},
      {"transform.alpha", [](RunConfig& c, auto& k, auto& v, int l) { c.alpha = positive(k, v, l); }},
      {"certify.eps_lvl", [](RunConfig& c, auto& k, auto& v, int l) { c.eps_lvl = c.compat.eps_lvl = real(k, v, l); }},
      {"certify.margin", [](RunConfig& c, auto& k, auto& v, int l) { c.margin = real(k, v, l); }},
      {"certify.eps_layer", [](RunConfig& c, auto& k, auto& v, int l) { c.compat.eps_layer = positive(k, v, l); }},
      {"certify.alpha0", [](RunConfig& c, auto& k, auto& v, int l) { c.compat.alpha0 = positive(k, v, l); }},
      {"certify.margin_c", [](RunConfig& c, auto& k, auto& v, int l) { c.compat.margin_c = positive(k, v, l); }},
      {"certify.jitter",
       [](RunConfig& c, auto& k, auto& v, int l) {
         const long long j = integer(k, v, l);
         if (j < 0 || j > 1000) bad(k, l, "must be in 0..1000");
         c.compat.jitter = static_cast<int>(j);
       }},
      {"certify.threshold.clbf_decrease", [](RunConfig& c, auto& k, auto& v, int l) { c.thresholds.clbf_decrease = real(k, v, l); }},
      {"certify.threshold.clbf_level", [](RunConfig& c, auto& k, auto& v, int l) { c.thresholds.clbf_level = real(k, v, l); }},
      {"certify.threshold.positive_definite",
       [](RunConfig& c, auto& k, auto& v, int l) { c.thresholds.positive_definite = real(k, v, l); }},
      {"certify.threshold.compatibility", [](RunConfig& c, auto& k, auto& v, int l) { c.thresholds.compatibility = real(k, v, l); }},
      {"certify.threshold.boundary_resolved",
       [](RunConfig& c, auto& k, auto& v, int l) { c.thresholds.boundary_resolved = real(k, v, l); }},
      {"sim.horizon", [](RunConfig& c, auto& k, auto& v, int l) { c.sim.horizon = positive(k, v, l); }},
      {"sim.dt_sim", [](RunConfig& c, auto& k, auto& v, int l) { c.sim.dt_sim = positive(k, v, l); }},
      {"sim.delta_conv", [](RunConfig& c, auto& k, auto& v, int l) { c.sim.delta_conv = positive(k, v, l); }},
      {"sim.x0", [](RunConfig& c, auto& k, auto& v, int l) { c.x0 = reals(k, v, l); }},
      {"verify.eps_lvl", [](RunConfig& c, auto& k, auto& v, int l) { c.verify_eps_lvl = real(k, v, l); }},
      {"verify.jitter",
       [](RunConfig& c, auto& k, auto& v, int l) {
         const long long j = integer(k, v, l);
         if (j < 0 || j > 1000) bad(k, l, "must be in 0..1000");
         c.verify_jitter = static_cast<int>(j);
       }},
      {"verify.min_safe_fraction", [](RunConfig& c, auto& k, auto& v, int l) { c.verify_min_safe_fraction = real(k, v, l); }},
      {"seed",
       [](RunConfig& c, auto& k, auto& v, int l) {
         const long long s = integer(k, v, l);
         if (s < 0) bad(k, l, "must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
         c.compat.seed = c.seed;
       }},
  };
  return table;
}

void apply(RunConfig& c, const std::string& key, const std::string& value, int line) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError(ConfigErrorKind::kUnknownKey, line, "unknown key '" + key + "'");
  it->second(c, key, value, line);
}

Eigen::VectorXd broadcast(const Eigen::VectorXd& v, int n, const std::string& key) {
  if (v.size() == n) return v;
  if (v.size() == 1) return Eigen::VectorXd::Constant(n, v[0]);
  if (v.size() == 0) throw ConfigError(ConfigErrorKind::kMissingKey, 0, "missing key '" + key + "'");
  throw ConfigError(ConfigErrorKind::kBadValue, 0, "'" + key + "' needs 1 or " + std::to_string(n) + " values");
}

}  // namespace

RunConfig load_run_config(const std::optional<std::string>& benchmark, const std::optional<std::string>& config_text,
                          const Overrides& overrides) {
  const KeyValueFile file = config_text ? KeyValueFile::parse(*config_text) : KeyValueFile();

  std::string bench;
  int bench_line = 0;
  if (benchmark) {
    bench = *benchmark;
  } else if (const auto it = overrides.find("benchmark"); it != overrides.end()) {
    bench = it->second;
  } else if (const auto* e = file.find("benchmark")) {
    bench = e->value;
    bench_line = e->line;
  }
  const bool config_system = file.contains("state_dim");

  RunConfig c;
  if (!bench.empty()) {
    if (config_system) {
      throw ConfigError(ConfigErrorKind::kBadValue, file.require("state_dim").line,
                        "config defines a system but a benchmark was also selected");
    }
    try {
      Benchmark b = load_benchmark(bench);
      c.benchmark = to_string(b.id);
      c.model.emplace(ParsedSystem{b.system, b.safe});
      const RecommendedParams& p = b.params;
      c.lower = p.lower;
      c.upper = p.upper;
      c.counts = p.counts;
      c.u_max = p.u_max;
      c.samples_per_axis = p.samples_per_axis;
      c.theta = p.theta;
      c.Q = p.Q;
      c.R = p.R;
      c.k = p.k;
      c.barrier_on = p.barrier_on;
      c.alpha = p.alpha;
      c.solver = p.solver;
    } catch (const LookupError& e) {
      throw ConfigError(ConfigErrorKind::kBadValue, bench_line, e.what());
    }
  } else if (config_system) {
    c.model.emplace(parse_system_config(file));
    c.Q = Eigen::MatrixXd::Identity(c.model->system.state_dim(), c.model->system.state_dim());
    c.R = Eigen::MatrixXd::Identity(c.model->system.input_dim(), c.model->system.input_dim());
  } else {
    throw ConfigError(ConfigErrorKind::kMissingKey, 0, "no system: select a benchmark or define state_dim, f.<i>, h");
  }

  for (const auto& [key, entry] : file.entries()) {
    if (key == "benchmark") continue;
    if (is_system_key(key)) {
      if (!config_system) throw ConfigError(ConfigErrorKind::kUnknownKey, entry.line, "system key '" + key + "' with a benchmark");
      continue;
    }
    apply(c, key, entry.value, entry.line);
  }
  for (const auto& [key, value] : overrides) {
    if (key == "benchmark") continue;
    apply(c, key, value, 0);
  }

  const int n = c.model->system.state_dim();
  const int m = c.model->system.input_dim();
  c.lower = broadcast(c.lower, n, "grid.lower");
  c.upper = broadcast(c.upper, n, "grid.upper");
  c.u_max = broadcast(c.u_max, m, "controls.u_max");
  if (c.counts.size() == 1) c.counts.assign(n, c.counts.front());
  if (c.counts.empty()) throw ConfigError(ConfigErrorKind::kMissingKey, 0, "missing key 'grid.counts'");
  if (static_cast<int>(c.counts.size()) != n) {
    throw ConfigError(ConfigErrorKind::kBadValue, 0, "'grid.counts' needs 1 or " + std::to_string(n) + " values");
  }
  if (c.x0.size() > 0) c.x0 = broadcast(c.x0, n, "sim.x0");
  try {
    c.solver.validate();
    c.sim.validate();
    const ZubovProblem p = c.problem();
    p.validate();
    c.grid();
  } catch (const InputError& e) {
    throw ConfigError(ConfigErrorKind::kBadValue, 0, e.what());
  }
  if (!(c.eps_lvl >= 0.0 && c.eps_lvl <= 1.0)) throw ConfigError(ConfigErrorKind::kBadValue, 0, "certify.eps_lvl must be in [0, 1]");
  if (!(c.verify_eps_lvl >= 0.0 && c.verify_eps_lvl <= 1.0)) {
    throw ConfigError(ConfigErrorKind::kBadValue, 0, "verify.eps_lvl must be in [0, 1]");
  }
  return c;
}

}  // namespace clbf
