#include "clbf/feedback.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <random>

#include "clbf/errors.hpp"

namespace clbf {

Eigen::VectorXd greedy_control(const Policy& policy, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const BellmanChoice c = bellman_choice(*policy.field, *policy.problem, x, policy.lookahead);
  return policy.problem->controls[c.control];
}

ControlLaw make_greedy_law(const Policy& policy) {
  auto eval = std::make_shared<BellmanEvaluator>(*policy.field, *policy.problem, policy.lookahead);
  const ZubovProblem* problem = policy.problem;
  return [eval, problem](double, const Eigen::VectorXd& x) -> Eigen::VectorXd { return problem->controls[(*eval)(x).control]; };
}

ControlLaw constant_law(Eigen::VectorXd u) {
  return [u = std::move(u)](double, const Eigen::VectorXd&) { return u; };
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kSafeConverged:
      return "SAFE_CONVERGED";
    case Verdict::kUnsafe:
      return "UNSAFE";
    case Verdict::kTimeout:
      return "TIMEOUT";
    case Verdict::kLeftDomain:
      return "LEFT_DOMAIN";
  }
  return "?";
}

void SimParams::validate() const {
  for (double v : {horizon, dt_sim, delta_conv}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("horizon, dt_sim and delta_conv must be positive reals");
  }
}

TrajectoryRecord simulate(const SystemModel& sys, const SafeSet& safe, const Grid& domain, const ControlLaw& law,
                          const Eigen::VectorXd& x0, const SimParams& params) {
  params.validate();
  if (x0.size() != sys.state_dim() || !x0.allFinite()) throw InputError("initial state must be a finite n-vector");
  const long steps = std::lround(params.horizon / params.dt_sim);
  const double dt = params.dt_sim;
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  Eigen::VectorXd f(n), tmp(n), k1(n), k2(n), k3(n), k4(n);
  Eigen::MatrixXd g(n, m);
  const auto rhs = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& out) {
    eval_dynamics_into(sys, x, f, g);
    out.noalias() = f + g * u;
  };

  TrajectoryRecord rec;
  rec.exit_time = std::numeric_limits<double>::infinity();
  rec.peak_h = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd x = x0;
  long entered = -1;
  bool stationary = false;
  for (long i = 0;; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double h = stationary ? rec.h.back() : eval_h(safe, x);
    rec.times.push_back(t);
    rec.states.push_back(x);
    rec.h.push_back(h);
    rec.peak_h = std::max(rec.peak_h, h);
    if (h >= 1.0) {
      rec.exit_time = t;
      rec.verdict = Verdict::kUnsafe;
      break;
    }
    if (!domain.contains(x)) {
      rec.verdict = Verdict::kLeftDomain;
      break;
    }
    if (x.norm() < params.delta_conv) {
      if (entered < 0) entered = i;
    } else {
      entered = -1;
    }
    if (i == steps) {
      rec.verdict = entered >= 0 ? Verdict::kSafeConverged : Verdict::kTimeout;
      break;
    }
    if (stationary) {
      rec.controls.push_back(rec.controls.back());
      continue;
    }
    const Eigen::VectorXd u = law(t, x);
    rec.controls.push_back(u);
    rhs(x, u, k1);
    tmp = x + 0.5 * dt * k1;
    rhs(tmp, u, k2);
    tmp = x + 0.5 * dt * k2;
    rhs(tmp, u, k3);
    tmp = x + dt * k3;
    rhs(tmp, u, k4);
    tmp = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    stationary = params.stationary_shortcut && tmp == x;
    x = tmp;
  }
  rec.controls.push_back(rec.controls.empty() ? Eigen::VectorXd::Zero(m) : rec.controls.back());
  return rec;
}

double SafetyReport::fraction(Verdict v) const {
  if (samples == 0) return 0.0;
  size_t count = 0;
  switch (v) {
    case Verdict::kSafeConverged:
      count = safe_converged;
      break;
    case Verdict::kUnsafe:
      count = unsafe;
      break;
    case Verdict::kTimeout:
      count = timeout;
      break;
    case Verdict::kLeftDomain:
      count = left_domain;
      break;
  }
  return static_cast<double>(count) / static_cast<double>(samples);
}

SafetyReport batch_verify(const Policy& policy, double eps_lvl, const SampleSpec& spec, const SimParams& params, int workers) {
  params.validate();
  if (spec.jitter < 0) throw InputError("jitter count must be non-negative");
  const ValueField& field = *policy.field;
  const Grid& grid = *field.grid;
  const ZubovProblem& problem = *policy.problem;

  std::vector<Eigen::VectorXd> starts;
  Eigen::VectorXd x(grid.dim());
  for (size_t node = 0; node < grid.num_nodes(); ++node) {
    if (!(field.w[node] <= 1.0 - eps_lvl)) continue;
    grid.position_into(node, x);
    if (spec.jitter == 0) {
      starts.push_back(x);
      continue;
    }
    std::mt19937_64 rng(spec.seed ^ (0x9e3779b97f4a7c15ull * (node + 1)));
    std::uniform_real_distribution<double> offset(-0.5, 0.5);
    for (int j = 0; j < spec.jitter; ++j) {
      Eigen::VectorXd y = x;
      for (int a = 0; a < grid.dim(); ++a) y[a] += offset(rng) * grid.spacing()[a];
      if (grid.contains(y)) starts.push_back(std::move(y));
    }
  }

  const long count = static_cast<long>(starts.size());
  std::vector<Verdict> verdicts(starts.size());
  std::vector<double> peaks(starts.size());
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel num_threads(threads)
  {
    const ControlLaw law = make_greedy_law(policy);
#pragma omp for schedule(dynamic, 4)
    for (long i = 0; i < count; ++i) {
      const TrajectoryRecord rec = simulate(problem.system, problem.safe, grid, law, starts[i], params);
      verdicts[i] = rec.verdict;
      peaks[i] = rec.peak_h;
    }
  }

  SafetyReport report;
  report.samples = starts.size();
  report.empty = starts.empty();
  report.max_peak_h = starts.empty() ? 0.0 : *std::max_element(peaks.begin(), peaks.end());
  for (size_t i = 0; i < starts.size(); ++i) {
    switch (verdicts[i]) {
      case Verdict::kSafeConverged:
        ++report.safe_converged;
        break;
      case Verdict::kUnsafe:
        ++report.unsafe;
        break;
      case Verdict::kTimeout:
        ++report.timeout;
        break;
      case Verdict::kLeftDomain:
        ++report.left_domain;
        break;
    }
  }
  report.invariance_violated = report.unsafe > 0;
  std::vector<size_t> order(starts.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return peaks[a] > peaks[b]; });
  for (size_t k = 0; k < std::min<size_t>(5, order.size()); ++k) {
    const size_t i = order[k];
    report.worst.push_back({i, starts[i], peaks[i], verdicts[i]});
  }
  return report;
}

namespace {

double monitored_w(const ValueField& field, const Eigen::VectorXd& x, double h) {
  if (h >= 1.0 || !field.grid->contains(x)) return 1.0;
  return interpolate(field, x);
}

}  // namespace

double descent_monitor(const ValueField& field, const TrajectoryRecord& record) {
  double worst = 0.0;
  for (size_t i = 1; i < record.states.size(); ++i) {
    const double jump =
        monitored_w(field, record.states[i], record.h[i]) - monitored_w(field, record.states[i - 1], record.h[i - 1]);
    worst = std::max(worst, jump);
  }
  return worst;
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record, const ValueField& field) {
  if (record.states.empty()) return;
  const Eigen::Index n = record.states.front().size();
  const Eigen::Index m = record.controls.empty() ? 0 : record.controls.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i + 1;
  for (Eigen::Index j = 0; j < m; ++j) os << ",u" << j + 1;
  os << ",h,w\n";
  for (size_t k = 0; k < record.states.size(); ++k) {
    os << format_real(record.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) os << "," << format_real(record.states[k][i]);
    for (Eigen::Index j = 0; j < m; ++j) os << "," << format_real(record.controls[k][j]);
    os << "," << format_real(record.h[k]) << "," << format_real(monitored_w(field, record.states[k], record.h[k])) << "\n";
  }
}

}  // namespace clbf
