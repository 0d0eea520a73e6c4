// Acceptance checks. `acceptance AC<n>` runs one criterion, `acceptance all`
// runs every one; each prints a single PASS/FAIL line and the exit status is
// non-zero if any check failed.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "clbf/benchmarks.hpp"
#include "clbf/certify.hpp"
#include "clbf/feedback.hpp"
#include "clbf/run_config.hpp"
#include "clbf/zubov_solver.hpp"
#include "compat_oracle.hpp"

namespace clbf {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, a);
  return buf;
}

RunConfig Config(const std::string& benchmark, const Overrides& overrides = {}) {
  return load_run_config(benchmark, std::nullopt, overrides);
}

// Largest relative error of V against (sqrt 2 - 1) x^2 over 0.1 <= |x| <= 1.
double RiccatiError(const SolveResult& r, const ZubovTransform& t) {
  const double p = std::sqrt(2.0) - 1.0;
  const std::vector<double> v = recover_V(r.field, t);
  double worst = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    const double x = r.field.grid->position(i)[0];
    if (std::abs(x) < 0.1 - 1e-12 || std::abs(x) > 1.0 + 1e-12) continue;
    const double exact = p * x * x;
    worst = std::max(worst, std::abs(v[i] - exact) / exact);
  }
  return worst;
}

Overrides RiccatiOverrides(int samples) {
  return {{"grid.lower", "-2"},        {"grid.upper", "2"},          {"grid.counts", "1001"},
          {"grid.constrained", "false"}, {"cost.barrier_on", "false"}, {"controls.u_max", "4"},
          {"controls.samples", std::to_string(samples)}, {"solver.dt", "0.01"}, {"transform.alpha", "0.1"},
          {"solver.workers", "1"}};
}

Outcome Ac1() {
  const RunConfig c = Config("lin1d", RiccatiOverrides(41));
  const ZubovProblem problem = c.problem();
  const auto start = std::chrono::steady_clock::now();
  const SolveResult r = solve(problem, c.grid(), c.solver);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double err = RiccatiError(r, problem.transform);
  std::string detail = "max rel err " + Fmt("%.4f", err) + " (limit 0.05), " + Fmt("%.2f", seconds) + " s (limit 60)";
  // Diagnostic only: the error is dominated by the control lattice spacing.
  for (int samples : {161, 401}) {
    const RunConfig fine = Config("lin1d", RiccatiOverrides(samples));
    const SolveResult rf = solve(fine.problem(), fine.grid(), fine.solver);
    detail += "; " + std::to_string(samples) + " controls: " + Fmt("%.4f", RiccatiError(rf, problem.transform));
  }
  return {r.field.converged && err <= 0.05 && seconds <= 60.0, detail};
}

Outcome Ac2() {
  const RunConfig c = Config("lin1d", {{"cost.k", "1"}, {"cost.barrier_on", "true"}});
  const SolveResult r = solve(c.problem(), c.grid(), c.solver);
  const DomainEstimate d = estimate_domain(r.field, 0.01);
  const double cell = r.field.grid->spacing()[0];
  const double lo = d.min_corner[0], hi = d.max_corner[0];
  const bool pass = r.field.converged && std::abs(lo + 1.0) <= cell + 1e-12 && std::abs(hi - 1.0) <= cell + 1e-12;
  return {pass, "domain [" + Fmt("%.4f", lo) + ", " + Fmt("%.4f", hi) + "], cell " + Fmt("%.4f", cell)};
}

Outcome Ac3() {
  const Eigen::VectorXd dir = Eigen::VectorXd::Constant(1, 1.0);
  const RunConfig barrier = Config("lin1d");
  const SolveResult rb = solve(barrier.problem(), barrier.grid(), barrier.solver);
  const std::vector<Eigen::VectorXd> ray = boundary_ray(*rb.field.grid, barrier.problem().safe, dir, 20);
  const DivergenceVerdict with = divergence_test(rb.field, barrier.problem().transform, ray);

  const RunConfig off = Config("lin1d", {{"cost.barrier_on", "false"}});
  const RunConfig off_fine = Config("lin1d", {{"cost.barrier_on", "false"}, {"grid.counts", "601"}});
  const SolveResult ro = solve(off.problem(), off.grid(), off.solver);
  const SolveResult rf = solve(off_fine.problem(), off_fine.grid(), off_fine.solver);
  const DivergenceVerdict coarse = divergence_test(ro.field, off.problem().transform, ray);
  const DivergenceVerdict fine = divergence_test(rf.field, off_fine.problem().transform, ray);
  double refinement = 0.0;
  for (size_t i = 0; i < ray.size(); ++i) {
    refinement = std::max(refinement, std::abs(fine.values[i] - coarse.values[i]) / coarse.values[i]);
  }
  const bool barrier_ok = with.increasing && with.growth >= 2.0;
  const bool ray_ok = coarse.variation <= 0.25;
  const bool refine_ok = refinement <= 0.25;
  return {barrier_ok && ray_ok && refine_ok,
          "barrier growth " + Fmt("%.3f", with.growth) + (with.increasing ? " increasing" : " not increasing") +
              " (limit 2); no barrier: ray variation " + Fmt("%.3f", coarse.variation) + " (limit 0.25), refinement change " +
              Fmt("%.4f", refinement) + " (limit 0.25)"};
}

Outcome Ac4() {
  double worst_rise = -1.0;
  bool in_range = true;
  std::string detail;
  for (BenchmarkId id : all_benchmarks()) {
    const RunConfig c = Config(to_string(id));
    double rise = -1.0;
    const SolveResult r =
        solve(c.problem(), c.grid(), c.solver, [&](int, const std::vector<double>& prev, const std::vector<double>& next) {
          for (size_t i = 0; i < next.size(); ++i) {
            rise = std::max(rise, next[i] - prev[i]);
            in_range = in_range && next[i] >= 0.0 && next[i] <= 1.0;
          }
        });
    worst_rise = std::max(worst_rise, rise);
    detail += std::string(to_string(id)) + " " + std::to_string(r.stats.sweeps) + " sweeps max rise " + Fmt("%.3g", rise) + "; ";
  }
  return {worst_rise <= 1e-12 && in_range, detail + (in_range ? "w in [0,1]" : "w left [0,1]")};
}

Outcome Ac5() {
  bool pass = true;
  std::string detail;
  for (BenchmarkId id : all_benchmarks()) {
    const RunConfig c = Config(to_string(id));
    const ZubovProblem problem = c.problem();
    const SolveResult r = solve(problem, c.grid(), c.solver);
    double worst = 0.0;
    for (size_t i = 0; i < r.field.w.size(); ++i) {
      if (r.field.grid->node_class(i) != NodeClass::kInterior) continue;
      worst = std::max(worst, std::abs(r.field.w[i] - bellman_update(r.field, problem, i, c.solver)));
    }
    pass = pass && r.field.converged && worst <= 1e-6;
    detail += std::string(to_string(id)) + " " + Fmt("%.3g", worst) + "; ";
  }
  return {pass, detail + "limit 1e-6"};
}

Outcome Ac6() {
  const RunConfig coarse = Config("lin1d", {{"grid.counts", "301"}, {"solver.dt", "0.01"}});
  const RunConfig fine = Config("lin1d", {{"grid.counts", "601"}, {"solver.dt", "0.005"}});
  const SolveResult rc = solve(coarse.problem(), coarse.grid(), coarse.solver);
  const SolveResult rf = solve(fine.problem(), fine.grid(), fine.solver);
  const double ratio = rf.stats.residual_summary.median / rc.stats.residual_summary.median;
  return {rc.field.converged && rf.field.converged && ratio <= 0.75,
          "median " + Fmt("%.4g", rc.stats.residual_summary.median) + " -> " + Fmt("%.4g", rf.stats.residual_summary.median) +
              ", ratio " + Fmt("%.3f", ratio) + " (limit 0.75)"};
}

Outcome Ac7() {
  bool pass = true;
  std::string detail;
  for (const char* name : {"lin1d", "integrator2d_disk"}) {
    const RunConfig c = Config(name);
    const ZubovProblem problem = c.problem();
    const SolveResult r = solve(problem, c.grid(), c.solver);
    SimParams sim;
    sim.horizon = 50.0;
    sim.dt_sim = 0.01;
    const SafetyReport s = batch_verify({&r.field, &problem, c.solver}, 0.2, SampleSpec{}, sim, 0);
    const double safe = s.fraction(Verdict::kSafeConverged);
    pass = pass && !s.empty && safe >= 0.99 && s.unsafe == 0;
    detail += std::string(name) + " " + std::to_string(s.samples) + " samples, SAFE_CONVERGED " + Fmt("%.4f", safe) +
              ", UNSAFE " + std::to_string(s.unsafe) + "; ";
  }
  return {pass, detail + "limits 0.99 / 0"};
}

Outcome Ac8() {
  std::mt19937_64 rng(2024);
  int agree = 0, evidence = 0;
  const int total = 1000;
  for (int i = 0; i < total; ++i) {
    const CompatibilityQuery q = testing::RandomIntegerQuery(rng);
    const HalfspacePair p = to_halfspaces(q);
    const CompatibilityVerdict v = check_compatibility(q);
    agree += v.feasible == testing::BruteForceFeasible(p);
    evidence += testing::EvidenceHolds(p, v);
  }
  return {agree == total && evidence == total, "verdict agreement " + std::to_string(agree) + "/1000, evidence valid " +
                                                   std::to_string(evidence) + "/1000"};
}

Outcome Ac9() {
  const ZubovTransform t(0.1);
  bool increasing = true;
  double prev = -1.0;
  for (int i = 0; i < 10000; ++i) {
    const double b = beta(t, 100.0 * i / 9999.0);
    increasing = increasing && b > prev;
    prev = b;
  }
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double w = i / 10000.0;
    worst = std::max(worst, std::abs(beta(t, beta_inv(t, w)) - w));
  }
  const bool zero = beta(t, 0.0) == 0.0;
  return {increasing && worst <= 1e-12 && zero, std::string(increasing ? "strictly increasing" : "NOT increasing") +
                                                    ", max |beta(beta_inv(w)) - w| " + Fmt("%.3g", worst) +
                                                    " (limit 1e-12), beta(0) " + Fmt("%g", beta(t, 0.0))};
}

Outcome Ac10() {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "clbf_acceptance_ac10";
  std::filesystem::remove_all(dir);
  const auto run = [&](int workers) {
    const std::string out = (dir / ("w" + std::to_string(workers))).string();
    const std::string cmd = std::string(CLBF_BINARY) + " solve --benchmark lin1d --workers " + std::to_string(workers) +
                            " --out " + out + " > /dev/null";
    const int status = std::system(cmd.c_str());
    std::ifstream in(out + "/field.csv", std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return std::make_pair(WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str());
  };
  const auto [s1, f1] = run(1);
  const auto [s8, f8] = run(8);
  std::filesystem::remove_all(dir);
  const bool same = !f1.empty() && f1 == f8;
  return {s1 == 0 && s8 == 0 && same, std::string("exit ") + std::to_string(s1) + "/" + std::to_string(s8) + ", " +
                                          std::to_string(f1.size()) + " bytes, " + (same ? "identical" : "DIFFERENT")};
}

}  // namespace
}  // namespace clbf

int main(int argc, char** argv) {
  const std::map<std::string, std::function<clbf::Outcome()>> checks = {
      {"AC1", clbf::Ac1}, {"AC2", clbf::Ac2}, {"AC3", clbf::Ac3}, {"AC4", clbf::Ac4}, {"AC5", clbf::Ac5},
      {"AC6", clbf::Ac6}, {"AC7", clbf::Ac7}, {"AC8", clbf::Ac8}, {"AC9", clbf::Ac9}, {"AC10", clbf::Ac10}};
  const std::string which = argc > 1 ? argv[1] : "all";
  std::vector<std::string> names;
  if (which == "all") {
    for (int i = 1; i <= 10; ++i) names.push_back("AC" + std::to_string(i));
  } else if (checks.count(which)) {
    names.push_back(which);
  } else {
    std::fprintf(stderr, "usage: acceptance [AC1..AC10|all]\n");
    return 2;
  }
  bool all_pass = true;
  for (const std::string& name : names) {
    clbf::Outcome o;
    try {
      o = checks.at(name)();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%-5s %s  %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
