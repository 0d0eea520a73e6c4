#include "clbf/benchmarks.hpp"

#include "clbf/errors.hpp"

namespace clbf {

const std::vector<BenchmarkId>& all_benchmarks() {
  static const std::vector<BenchmarkId> ids = {BenchmarkId::kLin1d, BenchmarkId::kIntegrator2dDisk, BenchmarkId::kPendulumBox};
  return ids;
}

const char* to_string(BenchmarkId id) {
  switch (id) {
    case BenchmarkId::kLin1d:
      return "lin1d";
    case BenchmarkId::kIntegrator2dDisk:
      return "integrator2d_disk";
    case BenchmarkId::kPendulumBox:
      return "pendulum_box";
  }
  return "?";
}

BenchmarkId parse_benchmark_id(std::string_view name) {
  for (BenchmarkId id : all_benchmarks()) {
    if (name == to_string(id)) return id;
  }
  throw LookupError("unknown benchmark '" + std::string(name) + "'");
}

namespace {

Polynomial poly(std::string_view text, int n) { return Polynomial::parse(text, n); }

RecommendedParams defaults(int n, int m) {
  RecommendedParams p;
  p.Q = Eigen::MatrixXd::Identity(n, n);
  p.R = Eigen::MatrixXd::Identity(m, m);
  return p;
}

}  // namespace

Benchmark load_benchmark(BenchmarkId id) {
  switch (id) {
    case BenchmarkId::kLin1d: {
      SystemModel sys("lin1d", 1, 1, {poly("-x1", 1)}, {poly("1", 1)});
      SafeSet safe(poly("x1^2", 1), "|x| < 1");
      RecommendedParams p = defaults(1, 1);
      p.lower = Eigen::VectorXd::Constant(1, -1.5);
      p.upper = Eigen::VectorXd::Constant(1, 1.5);
      p.counts = {301};
      p.u_max = Eigen::VectorXd::Constant(1, 4.0);
      p.samples_per_axis = 41;
      p.solver.dt = 0.01;
      return {id, "xdot = -x + u, safe set |x| < 1", std::move(sys), std::move(safe), std::move(p)};
    }
    case BenchmarkId::kIntegrator2dDisk: {
      SystemModel sys("integrator2d_disk", 2, 2, {Polynomial(2, {}), Polynomial(2, {})},
                      {poly("1", 2), Polynomial(2, {}), Polynomial(2, {}), poly("1", 2)});
      // 2 - ((x1 - 1)^2 + x2^2) / 0.25
      SafeSet safe(poly("-2 + 8 * x1 - 4 * x1^2 - 4 * x2^2", 2), "outside the disk |x - (1, 0)| <= 0.5");
      RecommendedParams p = defaults(2, 2);
      p.lower = Eigen::VectorXd::Constant(2, -2.0);
      p.upper = Eigen::VectorXd::Constant(2, 2.0);
      p.counts = {61, 61};
      p.u_max = Eigen::VectorXd::Constant(2, 1.0);
      p.samples_per_axis = 9;
      p.solver.dt = 0.05;
      return {id, "planar single integrator with a disk obstacle", std::move(sys), std::move(safe), std::move(p)};
    }
    case BenchmarkId::kPendulumBox: {
      SystemModel sys("pendulum_box", 2, 1, {poly("x2", 2), poly("-x1 + 0.16666666666666666 * x1^3 - 0.2 * x2", 2)},
                      {Polynomial(2, {}), poly("1", 2)});
      SafeSet safe(poly("0.0625 * x1^4 + 0.0625 * x2^4", 2), "(x1/2)^4 + (x2/2)^4 < 1");
      RecommendedParams p = defaults(2, 1);
      p.lower = Eigen::VectorXd::Constant(2, -2.4);
      p.upper = Eigen::VectorXd::Constant(2, 2.4);
      p.counts = {61, 61};
      p.u_max = Eigen::VectorXd::Constant(1, 4.0);
      p.samples_per_axis = 11;
      p.solver.dt = 0.05;
      return {id, "damped pendulum (cubic sin) with torque input in a rounded box", std::move(sys), std::move(safe),
              std::move(p)};
    }
  }
  throw LookupError("unknown benchmark id");
}

Benchmark load_benchmark(std::string_view name) { return load_benchmark(parse_benchmark_id(name)); }

}  // namespace clbf
