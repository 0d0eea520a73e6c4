#include "clbf/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "clbf/benchmarks.hpp"
#include "clbf/certify.hpp"
#include "clbf/errors.hpp"
#include "clbf/feedback.hpp"
#include "clbf/run_config.hpp"
#include "clbf/zubov_solver.hpp"

namespace clbf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Raised for refusals that map to the config exit code.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

constexpr Flag kOverrideFlags[] = {
    {"--lower", "grid.lower", "grid box lower corner (one value or one per axis)"},
    {"--upper", "grid.upper", "grid box upper corner"},
    {"--counts", "grid.counts", "nodes per axis"},
    {"--constrained", "grid.constrained", "enforce the safe set on the grid (true/false)"},
    {"--u-max", "controls.u_max", "control box half-width"},
    {"--samples", "controls.samples", "control samples per axis (odd)"},
    {"--dt", "solver.dt", "semi-Lagrangian step"},
    {"--tol", "solver.tol", "sup-norm stopping threshold"},
    {"--max-sweeps", "solver.max_sweeps", "sweep limit"},
    {"--integrator", "solver.integrator", "euler or rk4"},
    {"--theta", "cost.theta", "cost scale"},
    {"--k", "cost.k", "barrier exponent"},
    {"--barrier", "cost.barrier_on", "barrier denominator on/off"},
    {"--alpha", "transform.alpha", "Zubov transform rate"},
    {"--eps-lvl", "certify.eps_lvl", "domain level: w < 1 - eps_lvl"},
    {"--x0", "sim.x0", "initial state"},
    {"--horizon", "sim.horizon", "simulation horizon"},
    {"--dt-sim", "sim.dt_sim", "simulation step"},
    {"--delta-conv", "sim.delta_conv", "convergence ball radius"},
    {"--verify-eps-lvl", "verify.eps_lvl", "batch-verify start set: w <= 1 - level"},
};

struct Options {
  std::optional<std::string> benchmark;
  std::optional<std::string> config;
  std::string out = "out";
  std::optional<int> workers;
  std::optional<long long> seed;
  std::vector<std::string> sets;
  std::vector<std::pair<const Flag*, std::string>> values{std::size(kOverrideFlags)};
  CLI::App* active = nullptr;

  std::optional<std::string> field;
  std::optional<double> threshold;
  std::string axis;
  std::vector<int> factors{1, 2, 4};
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--benchmark", o.benchmark, "catalog system: lin1d, integrator2d_disk, pendulum_box");
  sub->add_option("--config", o.config, "key = value configuration file");
  sub->add_option("--out", o.out, "output directory")->capture_default_str();
  sub->add_option("--workers", o.workers, "threads (never changes results)")->check(CLI::Range(0, 4096));
  sub->add_option("--seed", o.seed, "seed for jittered sampling")->check(CLI::NonNegativeNumber);
  sub->add_option("--set", o.sets, "override any config key: --set key=value (repeatable)");
  for (size_t i = 0; i < std::size(kOverrideFlags); ++i) {
    o.values[i].first = &kOverrideFlags[i];
    sub->add_option(kOverrideFlags[i].name, o.values[i].second, kOverrideFlags[i].help);
  }
}

RunConfig load(const Options& o) {
  Overrides ov;
  for (const std::string& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(ConfigErrorKind::kSyntax, 0, "--set expects key=value, got '" + s + "'");
    ov[std::string(trim(std::string_view(s).substr(0, eq)))] = std::string(trim(std::string_view(s).substr(eq + 1)));
  }
  for (size_t i = 0; i < o.values.size(); ++i) {
    if (o.active->get_option(o.values[i].first->name)->count() > 0) ov[o.values[i].first->key] = o.values[i].second;
  }
  if (o.workers) ov["solver.workers"] = std::to_string(*o.workers);
  if (o.seed) ov["seed"] = std::to_string(*o.seed);

  std::optional<std::string> text;
  if (o.config) {
    std::ifstream in(*o.config);
    if (!in) throw ConfigError(ConfigErrorKind::kMissingKey, 0, "cannot read config file '" + *o.config + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  if (!o.benchmark && !text && ov.count("benchmark") == 0) {
    throw ConfigError(ConfigErrorKind::kMissingKey, 0, "give --benchmark or --config");
  }
  return load_run_config(o.benchmark, text, ov);
}

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
  return a;
}

json params_json(const RunConfig& c, const std::string& hash) {
  return {
      {"benchmark", c.benchmark},
      {"system", serialize_system_config(c.model->system, c.model->safe)},
      {"grid", {{"lower", vec(c.lower)}, {"upper", vec(c.upper)}, {"counts", c.counts}, {"constrained", c.constrained}}},
      {"controls", {{"u_max", vec(c.u_max)}, {"samples_per_axis", c.samples_per_axis}}},
      {"cost", {{"theta", c.theta}, {"Q", mat(c.Q)}, {"R", mat(c.R)}, {"k", c.k}, {"barrier_on", c.barrier_on}}},
      {"transform", {{"alpha", c.alpha}}},
      {"solver",
       {{"dt", c.solver.dt},
        {"tol", c.solver.tol},
        {"max_sweeps", c.solver.max_sweeps},
        {"integrator", to_string(c.solver.integrator)}}},
      {"params_hash", hash},
  };
}

json report_json(const CertReport& r) {
  json params = json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  return {{"name", r.name},
          {"pass_fraction", r.pass_fraction},
          {"tested", r.tested},
          {"passed", r.passed},
          {"worst_node", r.worst_node},
          {"worst_value", r.worst_value},
          {"params", params}};
}

void prepare_out(const std::string& out) { fs::create_directories(out); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  os << text;
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct LoadedField {
  ValueField field;
  std::shared_ptr<const Grid> grid;
};

LoadedField load_field(const RunConfig& c, const Options& o) {
  const std::string path = o.field ? *o.field : (fs::path(o.out) / "field.csv").string();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read field file '" + path + "'");
  FieldFile file;
  try {
    file = read_field_csv(in);
  } catch (const InputError& e) {
    throw UsageError("malformed field file '" + path + "': " + e.what());
  }
  const auto grid = c.grid();
  const std::string expected = params_hash(c.problem(), *grid, c.solver);
  if (file.params_hash != expected) {
    throw UsageError("params_hash mismatch: field file has " + file.params_hash + ", configuration gives " + expected);
  }
  try {
    return {bind_field(file, grid), grid};
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
}

int cmd_solve(const Options& o) {
  const RunConfig c = load(o);
  const ZubovProblem problem = c.problem();
  const auto grid = c.grid();
  prepare_out(o.out);
  const SolveResult r = solve(problem, grid, c.solver);
  const fs::path out(o.out);
  std::ostringstream csv;
  write_field_csv(csv, r.field, c.alpha);
  write_text(out / "field.csv", csv.str());
  const ResidualSummary& rs = r.stats.residual_summary;
  const json report = {
      {"status", to_string(r.stats.status)},
      {"sweeps", r.stats.sweeps},
      {"final_change", r.stats.final_change},
      {"wall_time", r.stats.wall_time},
      {"residual_summary",
       {{"count", rs.count}, {"min", rs.min}, {"q25", rs.q25}, {"median", rs.median}, {"q75", rs.q75}, {"max", rs.max}}},
      {"params", params_json(c, r.field.params_hash)},
  };
  write_text(out / "solve.json", dump(report));
  std::cout << to_string(r.stats.status) << " sweeps=" << r.stats.sweeps << " final_change=" << r.stats.final_change
            << " median_residual=" << rs.median << " hash=" << r.field.params_hash << "\n";
  return r.stats.status == SolveStatus::kConverged ? kExitOk : kExitNotConverged;
}

int cmd_certify(const Options& o) {
  RunConfig c = load(o);
  if (o.threshold) {
    c.thresholds = {*o.threshold, *o.threshold, *o.threshold, *o.threshold, *o.threshold};
  }
  const CertThresholds& t = c.thresholds;
  for (double v : {t.clbf_decrease, t.clbf_level, t.positive_definite, t.compatibility, t.boundary_resolved}) {
    if (v > 1.0) {
      std::cerr << "warning: a pass-fraction threshold above 1 can never be met; certification will fail\n";
      break;
    }
  }
  const LoadedField lf = load_field(c, o);
  if (!lf.field.converged) {
    std::cerr << "error: field is NOT_CONVERGED; certification refused\n";
    return kExitNotConverged;
  }
  prepare_out(o.out);
  const ZubovProblem problem = c.problem();

  const ClbfReports clbf = check_clbf_conditions(lf.field, problem, c.eps_lvl, c.margin);
  const CertReport pd = check_positive_definite(lf.field);
  CompatibilityParams cp = c.compat;
  cp.eps_lvl = c.eps_lvl;
  const CertReport compat = check_compatibility_layer(lf.field, problem, cp);

  ZubovProblem free_problem = problem;
  free_problem.cost = RunningCost(c.theta, c.Q, c.R, c.k, false);
  const auto free_grid = std::make_shared<const Grid>(Grid::build(c.lower, c.upper, c.counts, nullptr));
  const SolveResult free = solve(free_problem, free_grid, c.solver);
  const BoundaryClassification bc = classify_boundary(lf.field, free.field, problem.safe, c.eps_lvl);
  CertReport boundary;
  boundary.name = "boundary_resolved";
  boundary.tested = bc.frontier.size();
  boundary.passed = bc.near_s + bc.near_d0;
  boundary.pass_fraction = bc.frontier.empty() ? 1.0 : 1.0 - bc.unresolved_fraction();
  for (const auto& [node, tag] : bc.frontier) {
    if (tag == BoundaryTag::kUnresolved) {
      boundary.worst_node = static_cast<long>(node);
      break;
    }
  }
  boundary.worst_value = bc.unresolved_fraction();
  boundary.params = {{"eps_lvl", c.eps_lvl},
                     {"near_s", double(bc.near_s)},
                     {"near_d0", double(bc.near_d0)},
                     {"unresolved", double(bc.unresolved)},
                     {"unconstrained_converged", free.stats.status == SolveStatus::kConverged ? 1.0 : 0.0}};

  const std::vector<std::pair<const CertReport*, double>> checks = {{&clbf.decrease, t.clbf_decrease},
                                                                    {&clbf.level, t.clbf_level},
                                                                    {&pd, t.positive_definite},
                                                                    {&compat, t.compatibility},
                                                                    {&boundary, t.boundary_resolved}};
  bool pass = true;
  json list = json::array();
  for (const auto& [r, threshold] : checks) {
    json j = report_json(*r);
    j["threshold"] = threshold;
    j["pass"] = r->pass_fraction >= threshold;
    pass = pass && r->pass_fraction >= threshold;
    list.push_back(j);
    std::cout << std::left << std::setw(20) << r->name << " pass_fraction=" << r->pass_fraction << " threshold=" << threshold
              << (r->pass_fraction >= threshold ? "  ok" : "  FAIL") << "\n";
  }

  json divergence;
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(lf.grid->dim());
  dir[0] = 1.0;
  const auto ray = boundary_ray(*lf.grid, problem.safe, dir, 20);
  if (ray.empty()) {
    divergence = {{"skipped", "h stays below 1 along +x1 inside the box"}};
  } else {
    try {
      const DivergenceVerdict dv = divergence_test(lf.field, problem.transform, ray);
      divergence = {{"values", dv.values}, {"increasing", dv.increasing}, {"growth", dv.growth}, {"diverging", dv.diverging}};
    } catch (const InputError& e) {
      divergence = {{"skipped", e.what()}};
    }
  }

  const json doc = {{"pass", pass}, {"checks", list}, {"divergence", divergence}, {"params", params_json(c, lf.field.params_hash)}};
  write_text(fs::path(o.out) / "certify.json", dump(doc));
  std::cout << (pass ? "CERTIFIED" : "NOT CERTIFIED") << "\n";
  return pass ? kExitOk : kExitCertification;
}

int cmd_simulate(const Options& o) {
  const RunConfig c = load(o);
  if (c.x0.size() == 0) throw ConfigError(ConfigErrorKind::kMissingKey, 0, "simulate needs an initial state (--x0 or sim.x0)");
  const LoadedField lf = load_field(c, o);
  if (!lf.grid->contains(c.x0)) throw ConfigError(ConfigErrorKind::kBadValue, 0, "x0 lies outside the grid box");
  if (!lf.field.converged) std::cerr << "warning: simulating with a NOT_CONVERGED field\n";
  prepare_out(o.out);
  const ZubovProblem problem = c.problem();
  const Policy policy{&lf.field, &problem, c.solver};
  const TrajectoryRecord rec = simulate(problem.system, problem.safe, *lf.grid, make_greedy_law(policy), c.x0, c.sim);
  std::ostringstream csv;
  write_trajectory_csv(csv, rec, lf.field);
  write_text(fs::path(o.out) / "trajectory.csv", csv.str());
  const double jump = descent_monitor(lf.field, rec);
  const json doc = {{"verdict", to_string(rec.verdict)},
                    {"exit_time", std::isinf(rec.exit_time) ? json("inf") : json(rec.exit_time)},
                    {"peak_h", rec.peak_h},
                    {"final_time", rec.times.back()},
                    {"final_state", vec(rec.states.back())},
                    {"descent_max_jump", jump},
                    {"x0", vec(c.x0)},
                    {"sim", {{"horizon", c.sim.horizon}, {"dt_sim", c.sim.dt_sim}, {"delta_conv", c.sim.delta_conv}}},
                    {"params", params_json(c, lf.field.params_hash)}};
  write_text(fs::path(o.out) / "simulate.json", dump(doc));
  std::cout << to_string(rec.verdict) << " t_end=" << rec.times.back() << " peak_h=" << rec.peak_h << " max_w_jump=" << jump
            << "\n";
  return kExitOk;
}

int cmd_batch_verify(const Options& o) {
  const RunConfig c = load(o);
  const LoadedField lf = load_field(c, o);
  if (!lf.field.converged) {
    std::cerr << "error: field is NOT_CONVERGED; verification refused\n";
    return kExitNotConverged;
  }
  prepare_out(o.out);
  const ZubovProblem problem = c.problem();
  const Policy policy{&lf.field, &problem, c.solver};
  const SafetyReport r = batch_verify(policy, c.verify_eps_lvl, {c.verify_jitter, c.seed}, c.sim, c.solver.workers);
  json worst = json::array();
  for (const WorstTrajectory& w : r.worst) {
    worst.push_back({{"sample", w.sample}, {"x0", vec(w.x0)}, {"peak_h", w.peak_h}, {"verdict", to_string(w.verdict)}});
  }
  const bool pass = r.empty || (r.unsafe == 0 && r.fraction(Verdict::kSafeConverged) >= c.verify_min_safe_fraction);
  const json doc = {{"samples", r.samples},
                    {"empty", r.empty},
                    {"fractions",
                     {{"SAFE_CONVERGED", r.fraction(Verdict::kSafeConverged)},
                      {"UNSAFE", r.fraction(Verdict::kUnsafe)},
                      {"TIMEOUT", r.fraction(Verdict::kTimeout)},
                      {"LEFT_DOMAIN", r.fraction(Verdict::kLeftDomain)}}},
                    {"counts",
                     {{"SAFE_CONVERGED", r.safe_converged},
                      {"UNSAFE", r.unsafe},
                      {"TIMEOUT", r.timeout},
                      {"LEFT_DOMAIN", r.left_domain}}},
                    {"invariance_violated", r.invariance_violated},
                    {"max_peak_h", r.max_peak_h},
                    {"worst", worst},
                    {"eps_lvl", c.verify_eps_lvl},
                    {"pass", pass},
                    {"params", params_json(c, lf.field.params_hash)}};
  write_text(fs::path(o.out) / "safety.json", dump(doc));
  if (r.empty) {
    std::cout << "EMPTY: no node has w <= " << 1.0 - c.verify_eps_lvl << "\n";
  } else {
    std::cout << "samples=" << r.samples << " SAFE_CONVERGED=" << r.fraction(Verdict::kSafeConverged)
              << " UNSAFE=" << r.fraction(Verdict::kUnsafe) << " TIMEOUT=" << r.fraction(Verdict::kTimeout)
              << " LEFT_DOMAIN=" << r.fraction(Verdict::kLeftDomain) << "\n";
  }
  return pass ? kExitOk : kExitCertification;
}

// Largest dt |(f + g u)_a| / spacing_a over safe nodes and controls.
double cfl_ratio(const ZubovProblem& p, const Grid& grid, double dt) {
  double worst = 0.0;
  Eigen::VectorXd x(grid.dim());
  for (size_t node = 0; node < grid.num_nodes(); ++node) {
    if (grid.node_class(node) == NodeClass::kUnsafe) continue;
    grid.position_into(node, x);
    const Dynamics d = eval_dynamics(p.system, x);
    for (const Eigen::VectorXd& u : p.controls.samples()) {
      const Eigen::VectorXd v = d.f + d.g * u;
      worst = std::max(worst, (dt * v.cwiseAbs().array() / grid.spacing().array()).maxCoeff());
    }
  }
  return worst;
}

int cmd_sweep(const Options& o) {
  const RunConfig base = load(o);
  if (o.factors.empty()) throw ConfigError(ConfigErrorKind::kBadValue, 0, "--factors needs at least one value");
  std::vector<RunConfig> runs;
  for (int f : o.factors) {
    if (f < 1) throw ConfigError(ConfigErrorKind::kBadValue, 0, "sweep factors must be positive integers");
    RunConfig c = base;
    if (o.axis == "grid") {
      for (int& n : c.counts) n = (n - 1) * f + 1;
    } else if (o.axis == "controls") {
      c.samples_per_axis = (c.samples_per_axis - 1) * f + 1;
    } else {
      c.solver.dt = base.solver.dt / f;
    }
    runs.push_back(std::move(c));
  }
  prepare_out(o.out);

  std::ostringstream csv;
  csv << "factor,resolution,dt,sweeps,converged,final_change,median_residual,domain_volume,cfl_ratio,cfl_flag\n";
  bool all_converged = true;
  for (size_t i = 0; i < runs.size(); ++i) {
    const RunConfig& c = runs[i];
    const ZubovProblem problem = c.problem();
    const auto grid = c.grid();
    const SolveResult r = solve(problem, grid, c.solver);
    const DomainEstimate d = estimate_domain(r.field, c.eps_lvl);
    const double cfl = cfl_ratio(problem, *grid, c.solver.dt);
    std::string resolution;
    if (o.axis == "controls") {
      resolution = std::to_string(c.samples_per_axis);
    } else {
      for (size_t a = 0; a < c.counts.size(); ++a) resolution += (a ? "x" : "") + std::to_string(c.counts[a]);
    }
    const bool converged = r.stats.status == SolveStatus::kConverged;
    all_converged = all_converged && converged;
    csv << o.factors[i] << "," << resolution << "," << format_real(c.solver.dt) << "," << r.stats.sweeps << ","
        << (converged ? 1 : 0) << "," << format_real(r.stats.final_change) << ","
        << format_real(r.stats.residual_summary.median) << "," << format_real(d.volume) << "," << format_real(cfl) << ","
        << (cfl > 1.0 ? 1 : 0) << "\n";
  }
  write_text(fs::path(o.out) / "sweep.csv", csv.str());
  std::cout << csv.str();
  return all_converged ? kExitOk : kExitNotConverged;
}

int cmd_bench_list() {
  for (BenchmarkId id : all_benchmarks()) {
    const Benchmark b = load_benchmark(id);
    const RecommendedParams& p = b.params;
    std::cout << std::left << std::setw(18) << to_string(id) << " n=" << b.system.state_dim() << " m=" << b.system.input_dim()
              << "  " << b.description << "\n";
    std::cout << "    safe set: " << b.safe.description() << "\n    grid:";
    for (size_t a = 0; a < p.counts.size(); ++a) {
      std::cout << " [" << format_real(p.lower[a]) << ", " << format_real(p.upper[a]) << "]x" << p.counts[a];
    }
    std::cout << "  controls: " << p.samples_per_axis << "/axis |u| <= " << format_real(p.u_max.maxCoeff())
              << "  dt=" << format_real(p.solver.dt) << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Zubov value-function solver, CLBF certification and safe feedback verification"};
  app.require_subcommand(1);
  Options o;

  CLI::App* solve_cmd = app.add_subcommand("solve", "compute the field by value iteration");
  CLI::App* certify_cmd = app.add_subcommand("certify", "check a solved field against the CLBF conditions");
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "closed-loop greedy trajectory from one state");
  CLI::App* verify_cmd = app.add_subcommand("batch-verify", "closed-loop simulation from every node of a level set");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "convergence study over grid, controls or dt");
  CLI::App* list_cmd = app.add_subcommand("bench-list", "list the benchmark catalog");
  for (CLI::App* sub : {solve_cmd, certify_cmd, simulate_cmd, verify_cmd, sweep_cmd}) add_common(sub, o);
  for (CLI::App* sub : {certify_cmd, simulate_cmd, verify_cmd}) {
    sub->add_option("--field", o.field, "field CSV (default <out>/field.csv)");
  }
  certify_cmd->add_option("--threshold", o.threshold, "pass-fraction threshold applied to every check");
  sweep_cmd->add_option("--axis", o.axis, "grid, controls or dt")->required()->check(CLI::IsMember({"grid", "controls", "dt"}));
  sweep_cmd->add_option("--factors", o.factors, "refinement factors")->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  for (CLI::App* sub : {solve_cmd, certify_cmd, simulate_cmd, verify_cmd, sweep_cmd}) {
    if (sub->parsed()) o.active = sub;
  }
  try {
    if (solve_cmd->parsed()) return cmd_solve(o);
    if (certify_cmd->parsed()) return cmd_certify(o);
    if (simulate_cmd->parsed()) return cmd_simulate(o);
    if (verify_cmd->parsed()) return cmd_batch_verify(o);
    if (sweep_cmd->parsed()) return cmd_sweep(o);
    if (list_cmd->parsed()) return cmd_bench_list();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitConfig;
}

}  // namespace clbf
