#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "clbf/grid.hpp"
#include "clbf/indicator.hpp"
#include "clbf/system_model.hpp"

namespace clbf {

enum class Integrator { kEuler, kRk4 };

const char* to_string(Integrator integrator);
/// Accepts "euler" and "rk4" (case-sensitive).
std::optional<Integrator> parse_integrator(std::string_view text);

struct SolverParams {
  double dt = 0.01;
  double tol = 1e-6;
  int max_sweeps = 10000;
  Integrator integrator = Integrator::kEuler;
  /// OpenMP threads for the parallel kernels; 0 uses the runtime default.
  /// Never changes numeric output.
  int workers = 0;

  /// Throws InputError unless dt > 0, tol > 0, max_sweeps >= 1, workers >= 0.
  void validate() const;
};

/// Everything the Bellman operator depends on besides the grid. Whether the
/// safe set is enforced as an exit condition follows the grid: a grid built
/// without a safe set runs the unconstrained problem.
struct ZubovProblem {
  SystemModel system;
  SafeSet safe;
  RunningCost cost;
  ZubovTransform transform;
  ControlSet controls;

  /// Throws InputError on any dimension mismatch.
  void validate() const;
};

struct BellmanChoice {
  double value = 1.0;
  size_t control = 0;
};

/// Minimum over the control lattice of 1 - exp(-alpha dt eta(x, u)) (1 - W(x+)),
/// with x+ one integrator step of f + g u from x. A candidate is 1 when x+
/// leaves the grid box or, on a constrained grid, lands in h >= 1. Ties go to
/// the smallest control index; the value is clamped to [0, 1].
/// Throws QueryError if x is outside the grid box.
BellmanChoice bellman_choice(const ValueField& field, const ZubovProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x,
                             const SolverParams& params);

/// Reusable bellman_choice with its scratch space; one instance per thread.
/// Holds references to `field` and `problem`.
class BellmanEvaluator {
 public:
  BellmanEvaluator(const ValueField& field, const ZubovProblem& problem, const SolverParams& params);
  ~BellmanEvaluator();
  BellmanEvaluator(BellmanEvaluator&&) noexcept;
  BellmanEvaluator& operator=(BellmanEvaluator&&) noexcept;

  BellmanChoice operator()(const Eigen::Ref<const Eigen::VectorXd>& x);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// bellman_choice at a grid node. Serial, recomputes everything from scratch:
/// the reference the cached kernels are tested against.
double bellman_update(const ValueField& field, const ZubovProblem& problem, size_t node, const SolverParams& params);

/// Per (interior node, control) discount factor and interpolation stencil of x+,
/// precomputed once so a sweep is a gather over the previous iterate.
class TransitionTable {
 public:
  static TransitionTable build(const ZubovProblem& problem, const Grid& grid, const SolverParams& params);

  const std::vector<std::uint32_t>& interior_nodes() const { return interior_; }
  size_t num_controls() const { return num_controls_; }
  int corners() const { return corners_; }

  /// Bellman update of interior node number `i` (an index into interior_nodes()).
  double update(size_t i, const double* w) const;

 private:
  std::vector<std::uint32_t> interior_;
  size_t num_controls_ = 0;
  int corners_ = 0;
  std::vector<double> discount_;  // negative marks an exiting transition
  std::vector<std::uint32_t> nodes_;
  std::vector<double> weights_;
};

/// Jacobi sweep over all INTERIOR nodes, reading `in` and writing `out`;
/// pinned nodes are copied. Returns the sup-norm change.
double sweep(const TransitionTable& table, const std::vector<double>& in, std::vector<double>& out, int workers);

/// Serial single-threaded sweep through bellman_update, no caching.
double sweep_reference(const ValueField& in, ValueField& out, const ZubovProblem& problem, const SolverParams& params);

enum class SolveStatus { kConverged, kNotConverged };

const char* to_string(SolveStatus status);

/// Quantiles of |Zubov residual| over INTERIOR nodes (linear interpolation
/// between order statistics).
struct ResidualSummary {
  size_t count = 0;
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
};

ResidualSummary summarize(std::vector<double> values);

struct SolveStats {
  SolveStatus status = SolveStatus::kNotConverged;
  int sweeps = 0;
  double final_change = 0.0;
  double wall_time = 0.0;
  ResidualSummary residual_summary;
};

struct SolveResult {
  ValueField field;
  SolveStats stats;
};

/// Called after every sweep with the previous and the new iterate.
using SweepObserver = std::function<void(int sweep, const std::vector<double>& previous, const std::vector<double>& next)>;

/// Value iteration from ValueField::initial until the sup change drops below
/// tol or max_sweeps is reached. Non-convergence is reported in the status.
SolveResult solve(const ZubovProblem& problem, std::shared_ptr<const Grid> grid, const SolverParams& params,
                  const SweepObserver& observer = nullptr);

/// min over the control lattice of grad W . (f + g u) + alpha (1 - W) eta(x, u)
/// with the central-difference gradient. Throws QueryError unless the node is
/// INTERIOR or ORIGIN and has both neighbours on every axis.
double zubov_residual(const ValueField& field, const ZubovProblem& problem, size_t node);

/// Residual at every INTERIOR node, in node order.
std::vector<double> interior_residuals(const ValueField& field, const ZubovProblem& problem, int workers);

/// V = -log(1 - w) / alpha per node; +infinity where w = 1.
std::vector<double> recover_V(const ValueField& field, const ZubovTransform& transform);

/// 64-bit FNV-1a over a canonical text of every parameter that affects the
/// field (not `workers`), as 16 lowercase hex digits.
std::string params_hash(const ZubovProblem& problem, const Grid& grid, const SolverParams& params);

}  // namespace clbf
