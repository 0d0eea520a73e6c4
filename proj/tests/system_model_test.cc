#include "clbf/system_model.hpp"

#include <gtest/gtest.h>

#include "clbf/benchmarks.hpp"
#include "clbf/errors.hpp"

namespace clbf {
namespace {

GTEST_TEST(SystemModelTest, Lin1dDynamics) {
  const Benchmark b = load_benchmark(BenchmarkId::kLin1d);
  Dynamics d = eval_dynamics(b.system, Eigen::VectorXd::Zero(1));
  EXPECT_EQ(d.f[0], 0.0);
  EXPECT_EQ(d.g(0, 0), 1.0);
  d = eval_dynamics(b.system, Eigen::VectorXd::Constant(1, 0.5));
  EXPECT_EQ(d.f[0], -0.5);
  EXPECT_EQ(d.g(0, 0), 1.0);
  EXPECT_EQ(vector_field(b.system, Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, 2.0))[0], 1.5);
}

GTEST_TEST(SystemModelTest, IntegratorDynamics) {
  const Benchmark b = load_benchmark(BenchmarkId::kIntegrator2dDisk);
  const Dynamics d = eval_dynamics(b.system, Eigen::Vector2d(0.3, -0.2));
  EXPECT_EQ(d.f, Eigen::Vector2d::Zero());
  EXPECT_EQ(d.g, Eigen::Matrix2d::Identity());
}

GTEST_TEST(SystemModelTest, DimensionMismatch) {
  const Benchmark b = load_benchmark(BenchmarkId::kLin1d);
  EXPECT_THROW(eval_dynamics(b.system, Eigen::Vector2d(0.0, 0.0)), InputError);
  EXPECT_THROW(eval_h(b.safe, Eigen::Vector2d(0.0, 0.0)), InputError);
}

GTEST_TEST(SystemModelTest, SafeSetLevels) {
  const Benchmark b = load_benchmark(BenchmarkId::kLin1d);
  EXPECT_EQ(eval_h(b.safe, Eigen::VectorXd::Constant(1, 0.0)), 0.0);
  EXPECT_EQ(eval_h(b.safe, Eigen::VectorXd::Constant(1, 1.0)), 1.0);
  EXPECT_EQ(eval_h(b.safe, Eigen::VectorXd::Constant(1, 0.5)), 0.25);
  EXPECT_EQ(b.safe.gradient(Eigen::VectorXd::Constant(1, 0.5))[0], 1.0);
  EXPECT_THROW(SafeSet(Polynomial::parse("2", 1), "bad"), InputError);
}

GTEST_TEST(SystemModelTest, DiskObstacle) {
  const Benchmark b = load_benchmark(BenchmarkId::kIntegrator2dDisk);
  EXPECT_EQ(eval_h(b.safe, Eigen::Vector2d(0.0, 0.0)), -2.0);
  EXPECT_DOUBLE_EQ(eval_h(b.safe, Eigen::Vector2d(1.0, 0.0)), 2.0);
  EXPECT_DOUBLE_EQ(eval_h(b.safe, Eigen::Vector2d(0.5, 0.0)), 1.0);
  EXPECT_DOUBLE_EQ(eval_h(b.safe, Eigen::Vector2d(1.0, 0.5)), 1.0);
  EXPECT_LT(eval_h(b.safe, Eigen::Vector2d(1.0, 0.6)), 1.0);
}

GTEST_TEST(SystemModelTest, Catalog) {
  const Benchmark lin = load_benchmark("lin1d");
  EXPECT_EQ(lin.system.state_dim(), 1);
  EXPECT_EQ(lin.system.input_dim(), 1);
  const Benchmark disk = load_benchmark("integrator2d_disk");
  EXPECT_EQ(disk.system.state_dim(), 2);
  EXPECT_EQ(disk.system.input_dim(), 2);
  EXPECT_THROW(load_benchmark("foo"), LookupError);
  EXPECT_EQ(all_benchmarks().size(), 3);
  for (BenchmarkId id : all_benchmarks()) {
    const Benchmark b = load_benchmark(id);
    EXPECT_EQ(parse_benchmark_id(to_string(id)), id);
    const Dynamics d = eval_dynamics(b.system, Eigen::VectorXd::Zero(b.system.state_dim()));
    EXPECT_TRUE((d.f.array() == 0.0).all()) << to_string(id);
  }
}

GTEST_TEST(SystemModelTest, ParseLin1dConfig) {
  const ParsedSystem p = parse_system_config("state_dim = 1\ninput_dim = 1\nf.1 = -1 * x1\ng.1.1 = 1\nh = x1^2\n");
  const Benchmark b = load_benchmark(BenchmarkId::kLin1d);
  for (double x : {-1.3, 0.0, 0.7}) {
    const Eigen::VectorXd v = Eigen::VectorXd::Constant(1, x);
    EXPECT_EQ(eval_dynamics(p.system, v).f, eval_dynamics(b.system, v).f);
    EXPECT_EQ(eval_dynamics(p.system, v).g, eval_dynamics(b.system, v).g);
    EXPECT_EQ(eval_h(p.safe, v), eval_h(b.safe, v));
  }
}

GTEST_TEST(SystemModelTest, ParseDiagnostics) {
  const auto kind_and_line = [](const char* text) {
    try {
      parse_system_config(text);
    } catch (const ConfigError& e) {
      return std::make_pair(e.kind(), e.line());
    }
    return std::make_pair(ConfigErrorKind::kSyntax, -1);
  };
  EXPECT_EQ(kind_and_line("state_dim = 1\ninput_dim = 1\nf.1 = 1\ng.1.1 = 1\nh = x1^2\n"),
            std::make_pair(ConfigErrorKind::kDriftNonzeroAtOrigin, 3));
  EXPECT_EQ(kind_and_line("state_dim = 1\ninput_dim = 1\nf.1 = -x1\ng.1.1 = 1\nh = 2\n"),
            std::make_pair(ConfigErrorKind::kOriginUnsafe, 5));
  EXPECT_EQ(kind_and_line("state_dim = 1\ninput_dim = 1\nf.1 = -x1 +\nh = x1^2\n"),
            std::make_pair(ConfigErrorKind::kSyntax, 3));
  EXPECT_EQ(kind_and_line("state_dim = 1\ninput_dim = 1\nh = x1^2\n").first, ConfigErrorKind::kMissingKey);
  EXPECT_EQ(kind_and_line("state_dim = 1\ninput_dim = 1\nf.1 = -x1\nf.2 = x1\nh = x1^2\n"),
            std::make_pair(ConfigErrorKind::kUnknownKey, 4));
}

GTEST_TEST(SystemModelTest, SerializeRoundTrip) {
  for (BenchmarkId id : all_benchmarks()) {
    const Benchmark b = load_benchmark(id);
    const std::string text = serialize_system_config(b.system, b.safe);
    const ParsedSystem once = parse_system_config(text);
    EXPECT_EQ(once.system, b.system) << text;
    EXPECT_EQ(once.safe.h(), b.safe.h());
    const ParsedSystem twice = parse_system_config(serialize_system_config(once.system, once.safe));
    EXPECT_EQ(twice.system, once.system);
    EXPECT_EQ(twice.safe, once.safe);
  }
}

}  // namespace
}  // namespace clbf
