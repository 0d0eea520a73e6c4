#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "clbf/system_model.hpp"
#include "clbf/zubov_solver.hpp"

namespace clbf {

enum class BenchmarkId { kLin1d, kIntegrator2dDisk, kPendulumBox };

const std::vector<BenchmarkId>& all_benchmarks();
const char* to_string(BenchmarkId id);
/// Throws LookupError for names outside the catalog.
BenchmarkId parse_benchmark_id(std::string_view name);

/// Grid, control lattice, cost and solver settings that solve the benchmark in
/// seconds on one core.
struct RecommendedParams {
  Eigen::VectorXd lower, upper;
  std::vector<int> counts;
  Eigen::VectorXd u_max;
  int samples_per_axis = 0;
  double theta = 1.0;
  Eigen::MatrixXd Q, R;
  double k = 1.0;
  bool barrier_on = true;
  double alpha = 0.1;
  SolverParams solver;
};

struct Benchmark {
  BenchmarkId id;
  std::string description;
  SystemModel system;
  SafeSet safe;
  RecommendedParams params;
};

/// lin1d: xdot = -x + u, h = x^2, so S = (-1, 1).
///
/// integrator2d_disk: xdot = u in the plane, obstacle U the closed disk of
/// radius 0.5 centred at (1, 0), written h = 2 - |x - c|^2 / r^2 so that
/// h >= 1 exactly on the disk and h(0) = -2.
///
/// pendulum_box: damped pendulum with torque input, sin replaced by its cubic
/// Taylor polynomial: x1dot = x2, x2dot = -x1 + x1^3/6 - 0.2 x2 + u. The safe
/// set is the rounded box h = (x1/2)^4 + (x2/2)^4 < 1.
Benchmark load_benchmark(BenchmarkId id);
Benchmark load_benchmark(std::string_view name);

}  // namespace clbf
