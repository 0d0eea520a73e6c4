#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clbf/certify.hpp"
#include "clbf/feedback.hpp"
#include "clbf/grid.hpp"
#include "clbf/system_model.hpp"
#include "clbf/zubov_solver.hpp"

namespace clbf {

/// Pass-fraction thresholds a certify run must meet.
struct CertThresholds {
  double clbf_decrease = 0.99;
  double clbf_level = 1.0;
  double positive_definite = 1.0;
  double compatibility = 0.0;
  double boundary_resolved = 0.95;
};

/// Everything one CLI invocation needs, resolved from benchmark defaults, a
/// config file and command-line overrides (later sources win).
///
/// Run keys, in addition to the system keys of parse_system_config:
///
///     benchmark                  catalog id supplying system and defaults
///     grid.lower, grid.upper     reals, one per axis or one for all
///     grid.counts                integers, one per axis or one for all
///     grid.constrained           bool, default true; false drops the safe set
///                                from the grid (no UNSAFE nodes, no exit on h >= 1)
///     controls.u_max             reals, one per input or one for all
///     controls.samples           odd integer >= 3
///     solver.dt, solver.tol, solver.max_sweeps, solver.integrator (euler|rk4)
///     solver.workers             default 0 (all threads)
///     cost.theta, cost.k, cost.barrier_on
///     cost.Q, cost.R             row-major entries
///     transform.alpha
///     certify.eps_lvl, certify.margin, certify.eps_layer, certify.alpha0,
///     certify.margin_c, certify.jitter
///     certify.threshold.<check>  one of clbf_decrease, clbf_level,
///                                positive_definite, compatibility, boundary_resolved
///     sim.horizon, sim.dt_sim, sim.delta_conv, sim.x0
///     verify.eps_lvl, verify.jitter, verify.min_safe_fraction
///     seed                       jitter streams only
struct RunConfig {
  std::string benchmark;
  std::optional<ParsedSystem> model;

  Eigen::VectorXd lower, upper;
  std::vector<int> counts;
  bool constrained = true;
  Eigen::VectorXd u_max;
  int samples_per_axis = 11;

  double theta = 1.0;
  Eigen::MatrixXd Q, R;
  double k = 1.0;
  bool barrier_on = true;
  double alpha = 0.1;
  SolverParams solver;

  double eps_lvl = 0.01;
  double margin = 0.0;
  CompatibilityParams compat;
  CertThresholds thresholds;

  SimParams sim;
  Eigen::VectorXd x0;
  double verify_eps_lvl = 0.2;
  int verify_jitter = 0;
  double verify_min_safe_fraction = 0.99;
  std::uint64_t seed = 0;

  ZubovProblem problem() const;
  /// Grid per `constrained`.
  std::shared_ptr<const Grid> grid() const;
};

/// Key/value pairs from the command line, using the config key names.
using Overrides = std::map<std::string, std::string>;

/// Throws ConfigError (line 0 for command-line values and cross-key problems).
/// `benchmark` and `config_text` may both be absent only if `overrides`
/// names a benchmark.
RunConfig load_run_config(const std::optional<std::string>& benchmark, const std::optional<std::string>& config_text,
                          const Overrides& overrides);

}  // namespace clbf
