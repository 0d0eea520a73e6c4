#include "clbf/zubov_solver.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "clbf/errors.hpp"

namespace clbf {

const char* to_string(Integrator integrator) { return integrator == Integrator::kRk4 ? "rk4" : "euler"; }

std::optional<Integrator> parse_integrator(std::string_view text) {
  if (text == "euler") return Integrator::kEuler;
  if (text == "rk4") return Integrator::kRk4;
  return std::nullopt;
}

const char* to_string(SolveStatus status) { return status == SolveStatus::kConverged ? "CONVERGED" : "NOT_CONVERGED"; }

void SolverParams::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("dt must be a positive real");
  if (!(tol > 0.0) || !std::isfinite(tol)) throw InputError("tol must be a positive real");
  if (max_sweeps < 1) throw InputError("max_sweeps must be at least 1");
  if (workers < 0) throw InputError("workers must be non-negative");
}

void ZubovProblem::validate() const {
  const int n = system.state_dim();
  const int m = system.input_dim();
  if (safe.state_dim() != n) throw InputError("safe set dimension does not match the system");
  if (cost.Q().rows() != n) throw InputError("Q dimension does not match the system");
  if (cost.R().rows() != m) throw InputError("R dimension does not match the system");
  if (controls.input_dim() != m) throw InputError("control set dimension does not match the system");
}

namespace {

int thread_count(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

void check_grid(const ZubovProblem& problem, const Grid& grid) {
  if (grid.dim() != problem.system.state_dim()) throw InputError("grid dimension does not match the system");
}

inline double candidate_value(double discount, double w_next) { return 1.0 - discount * (1.0 - w_next); }

// One-step flow and discount from a fixed state, shared by every path that
// evaluates the Bellman operator so they agree bit for bit.
class Stepper {
 public:
  Stepper(const ZubovProblem& problem, const Grid& grid, const SolverParams& params)
      : p_(problem),
        grid_(grid),
        dt_(params.dt),
        rk4_(params.integrator == Integrator::kRk4),
        n_(problem.system.state_dim()),
        m_(problem.system.input_dim()),
        x_(n_),
        xp_(n_),
        tmp_(n_),
        f_(n_),
        g_(n_, m_),
        f2_(n_),
        g2_(n_, m_),
        k1_(n_),
        k2_(n_),
        k3_(n_),
        k4_(n_) {
    control_cost_.reserve(p_.controls.size());
    for (const Eigen::VectorXd& u : p_.controls.samples()) control_cost_.push_back(p_.cost.control_part(u));
  }

  void prepare(const Eigen::Ref<const Eigen::VectorXd>& x) {
    x_ = x;
    state_cost_ = p_.cost.state_part(x_);
    denom_ = p_.cost.barrier_on() ? p_.cost.barrier_denominator(eval_h(p_.safe, x_)) : 1.0;
    eval_dynamics_into(p_.system, x_, f_, g_);
  }

  double eta(size_t j) const {
    if (!(denom_ > 0.0)) return std::numeric_limits<double>::infinity();
    const double num = state_cost_ + control_cost_[j];
    return p_.cost.barrier_on() ? num / denom_ : num;
  }

  // False when the step leaves the box or, on a constrained grid, enters h >= 1.
  bool transition(size_t j, double* discount, std::uint32_t* nodes, double* weights) {
    *discount = std::exp(-p_.transform.alpha() * dt_ * eta(j));
    if (*discount == 0.0) return false;
    step(p_.controls[j]);
    if (!grid_.contains(xp_)) return false;
    if (grid_.constrained() && eval_h(p_.safe, xp_) >= 1.0) return false;
    make_stencil(grid_, xp_, nodes, weights);
    return true;
  }

  size_t num_controls() const { return control_cost_.size(); }

 private:
  void step(const Eigen::VectorXd& u) {
    k1_.noalias() = f_ + g_ * u;
    if (!rk4_) {
      xp_ = x_ + dt_ * k1_;
      return;
    }
    tmp_ = x_ + (0.5 * dt_) * k1_;
    eval_dynamics_into(p_.system, tmp_, f2_, g2_);
    k2_.noalias() = f2_ + g2_ * u;
    tmp_ = x_ + (0.5 * dt_) * k2_;
    eval_dynamics_into(p_.system, tmp_, f2_, g2_);
    k3_.noalias() = f2_ + g2_ * u;
    tmp_ = x_ + dt_ * k3_;
    eval_dynamics_into(p_.system, tmp_, f2_, g2_);
    k4_.noalias() = f2_ + g2_ * u;
    xp_ = x_ + (dt_ / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

  const ZubovProblem& p_;
  const Grid& grid_;
  double dt_;
  bool rk4_;
  int n_, m_;
  Eigen::VectorXd x_, xp_, tmp_, f_;
  Eigen::MatrixXd g_;
  Eigen::VectorXd f2_;
  Eigen::MatrixXd g2_;
  Eigen::VectorXd k1_, k2_, k3_, k4_;
  std::vector<double> control_cost_;
  double state_cost_ = 0.0;
  double denom_ = 1.0;
};

std::vector<std::uint32_t> interior_of(const Grid& grid) {
  std::vector<std::uint32_t> out;
  for (size_t node = 0; node < grid.num_nodes(); ++node) {
    if (grid.node_class(node) == NodeClass::kInterior) out.push_back(static_cast<std::uint32_t>(node));
  }
  return out;
}

}  // namespace

struct BellmanEvaluator::Impl {
  Impl(const ValueField& f, const ZubovProblem& p, const SolverParams& params) : field(f), stepper(p, *f.grid, params) {}
  const ValueField& field;
  Stepper stepper;
};

BellmanEvaluator::BellmanEvaluator(const ValueField& field, const ZubovProblem& problem, const SolverParams& params) {
  problem.validate();
  params.validate();
  check_grid(problem, *field.grid);
  if (field.w.size() != field.grid->num_nodes()) throw InputError("field size does not match its grid");
  impl_ = std::make_unique<Impl>(field, problem, params);
}

BellmanEvaluator::~BellmanEvaluator() = default;
BellmanEvaluator::BellmanEvaluator(BellmanEvaluator&&) noexcept = default;
BellmanEvaluator& BellmanEvaluator::operator=(BellmanEvaluator&&) noexcept = default;

BellmanChoice BellmanEvaluator::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Grid& grid = *impl_->field.grid;
  if (x.size() != grid.dim()) throw InputError("state has wrong dimension for grid");
  if (!grid.contains(x)) throw QueryError("state outside the grid box");
  Stepper& stepper = impl_->stepper;
  stepper.prepare(x);
  const int corners = 1 << grid.dim();
  std::uint32_t nodes[kMaxStencilCorners];
  double weights[kMaxStencilCorners];
  BellmanChoice best{std::numeric_limits<double>::infinity(), 0};
  for (size_t j = 0; j < stepper.num_controls(); ++j) {
    double discount = 0.0;
    double c = 1.0;
    if (stepper.transition(j, &discount, nodes, weights)) {
      c = candidate_value(discount, apply_stencil(nodes, weights, corners, impl_->field.w.data()));
    }
    if (c < best.value) best = {c, j};
  }
  best.value = std::clamp(best.value, 0.0, 1.0);
  return best;
}

BellmanChoice bellman_choice(const ValueField& field, const ZubovProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x,
                             const SolverParams& params) {
  return BellmanEvaluator(field, problem, params)(x);
}

double bellman_update(const ValueField& field, const ZubovProblem& problem, size_t node, const SolverParams& params) {
  if (node >= field.grid->num_nodes()) throw InputError("node index out of range");
  return bellman_choice(field, problem, field.grid->position(node), params).value;
}

TransitionTable TransitionTable::build(const ZubovProblem& problem, const Grid& grid, const SolverParams& params) {
  problem.validate();
  params.validate();
  check_grid(problem, grid);
  TransitionTable t;
  t.interior_ = interior_of(grid);
  t.num_controls_ = problem.controls.size();
  t.corners_ = 1 << grid.dim();
  const size_t entries = t.interior_.size() * t.num_controls_;
  t.discount_.assign(entries, -1.0);
  t.nodes_.assign(entries * t.corners_, 0);
  t.weights_.assign(entries * t.corners_, 0.0);

  const long count = static_cast<long>(t.interior_.size());
#pragma omp parallel num_threads(thread_count(params.workers))
  {
    Stepper stepper(problem, grid, params);
    Eigen::VectorXd x(grid.dim());
#pragma omp for schedule(static)
    for (long i = 0; i < count; ++i) {
      grid.position_into(t.interior_[i], x);
      stepper.prepare(x);
      for (size_t j = 0; j < t.num_controls_; ++j) {
        const size_t e = static_cast<size_t>(i) * t.num_controls_ + j;
        double discount = 0.0;
        if (stepper.transition(j, &discount, &t.nodes_[e * t.corners_], &t.weights_[e * t.corners_])) {
          t.discount_[e] = discount;
        }
      }
    }
  }
  return t;
}

double TransitionTable::update(size_t i, const double* w) const {
  double best = std::numeric_limits<double>::infinity();
  const size_t base = i * num_controls_;
  for (size_t j = 0; j < num_controls_; ++j) {
    const size_t e = base + j;
    const double d = discount_[e];
    const double c = d < 0.0 ? 1.0 : candidate_value(d, apply_stencil(&nodes_[e * corners_], &weights_[e * corners_], corners_, w));
    if (c < best) best = c;
  }
  return std::clamp(best, 0.0, 1.0);
}

double sweep(const TransitionTable& table, const std::vector<double>& in, std::vector<double>& out, int workers) {
  out = in;
  const auto& interior = table.interior_nodes();
  const long count = static_cast<long>(interior.size());
  double change = 0.0;
#pragma omp parallel for schedule(static) reduction(max : change) num_threads(thread_count(workers))
  for (long i = 0; i < count; ++i) {
    const std::uint32_t node = interior[i];
    const double v = table.update(static_cast<size_t>(i), in.data());
    out[node] = v;
    change = std::max(change, std::abs(v - in[node]));
  }
  return change;
}

double sweep_reference(const ValueField& in, ValueField& out, const ZubovProblem& problem, const SolverParams& params) {
  out = in;
  const Grid& grid = *in.grid;
  double change = 0.0;
  for (size_t node = 0; node < grid.num_nodes(); ++node) {
    if (grid.node_class(node) != NodeClass::kInterior) continue;
    const double v = bellman_update(in, problem, node, params);
    out.w[node] = v;
    change = std::max(change, std::abs(v - in.w[node]));
  }
  return change;
}

ResidualSummary summarize(std::vector<double> values) {
  ResidualSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  s.min = values.front();
  s.q25 = quantile(0.25);
  s.median = quantile(0.5);
  s.q75 = quantile(0.75);
  s.max = values.back();
  return s;
}

SolveResult solve(const ZubovProblem& problem, std::shared_ptr<const Grid> grid, const SolverParams& params,
                  const SweepObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  const TransitionTable table = TransitionTable::build(problem, *grid, params);

  SolveResult result{ValueField::initial(grid), {}};
  ValueField& field = result.field;
  SolveStats& stats = result.stats;
  std::vector<double> next;
  for (int k = 1; k <= params.max_sweeps; ++k) {
    const double change = sweep(table, field.w, next, params.workers);
    if (observer) observer(k, field.w, next);
    field.w.swap(next);
    stats.sweeps = k;
    stats.final_change = change;
    if (change < params.tol) {
      stats.status = SolveStatus::kConverged;
      break;
    }
  }
  field.iterations = stats.sweeps;
  field.final_change = stats.final_change;
  field.converged = stats.status == SolveStatus::kConverged;
  field.params_hash = params_hash(problem, *grid, params);

  std::vector<double> r = interior_residuals(field, problem, params.workers);
  for (double& v : r) v = std::abs(v);
  stats.residual_summary = summarize(std::move(r));
  stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

double zubov_residual(const ValueField& field, const ZubovProblem& problem, size_t node) {
  const Grid& grid = *field.grid;
  check_grid(problem, grid);
  if (node >= grid.num_nodes()) throw InputError("node index out of range");
  const NodeClass cls = grid.node_class(node);
  if (cls != NodeClass::kInterior && cls != NodeClass::kOrigin) throw QueryError("residual needs an INTERIOR or ORIGIN node");
  for (int a = 0; a < grid.dim(); ++a) {
    const int k = grid.axis_index(node, a);
    if (k == 0 || k == grid.counts()[a] - 1) throw QueryError("residual needs both neighbours on every axis");
  }
  const Eigen::VectorXd grad = gradient(field, node);
  const Eigen::VectorXd x = grid.position(node);
  const Dynamics d = eval_dynamics(problem.system, x);
  const Eigen::VectorXd gtg = d.g.transpose() * grad;
  const double drift = grad.dot(d.f);
  const double slack = 1.0 - field.w[node];
  double best = std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& u : problem.controls.samples()) {
    double v = drift + gtg.dot(u);
    if (slack != 0.0) v += problem.transform.alpha() * slack * eval_eta(problem.cost, problem.safe, x, u);
    best = std::min(best, v);
  }
  return best;
}

std::vector<double> interior_residuals(const ValueField& field, const ZubovProblem& problem, int workers) {
  const std::vector<std::uint32_t> interior = interior_of(*field.grid);
  std::vector<double> out(interior.size());
  const long count = static_cast<long>(interior.size());
#pragma omp parallel for schedule(static) num_threads(thread_count(workers))
  for (long i = 0; i < count; ++i) out[i] = zubov_residual(field, problem, interior[i]);
  return out;
}

std::vector<double> recover_V(const ValueField& field, const ZubovTransform& transform) {
  std::vector<double> v(field.w.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = beta_inv(transform, field.w[i]);
  return v;
}

std::string params_hash(const ZubovProblem& problem, const Grid& grid, const SolverParams& params) {
  std::ostringstream os;
  const auto reals = [&os](const auto& values) {
    for (Eigen::Index i = 0; i < values.size(); ++i) os << (i ? "," : "") << format_real(values(i));
    os << "\n";
  };
  os << serialize_system_config(problem.system, problem.safe);
  os << "theta=" << format_real(problem.cost.theta()) << "\nQ=";
  reals(problem.cost.Q().reshaped<Eigen::RowMajor>());
  os << "R=";
  reals(problem.cost.R().reshaped<Eigen::RowMajor>());
  os << "k=" << format_real(problem.cost.k()) << "\nbarrier=" << problem.cost.barrier_on() << "\n";
  os << "alpha=" << format_real(problem.transform.alpha()) << "\nu_max=";
  reals(problem.controls.u_max());
  os << "samples=" << problem.controls.samples_per_axis() << "\nlower=";
  reals(grid.lower());
  os << "upper=";
  reals(grid.upper());
  os << "counts=";
  for (size_t a = 0; a < grid.counts().size(); ++a) os << (a ? "," : "") << grid.counts()[a];
  os << "\nconstrained=" << grid.constrained() << "\n";
  os << "dt=" << format_real(params.dt) << "\ntol=" << format_real(params.tol) << "\nmax_sweeps=" << params.max_sweeps
     << "\nintegrator=" << to_string(params.integrator) << "\n";

  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace clbf
