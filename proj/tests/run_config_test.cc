#include "clbf/run_config.hpp"

#include <gtest/gtest.h>

#include "clbf/errors.hpp"

namespace clbf {
namespace {

ConfigErrorKind KindOf(const std::optional<std::string>& bench, const std::optional<std::string>& text,
                       const Overrides& overrides = {}) {
  try {
    load_run_config(bench, text, overrides);
  } catch (const ConfigError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no ConfigError";
  return ConfigErrorKind::kSyntax;
}

GTEST_TEST(RunConfigTest, BenchmarkDefaults) {
  const RunConfig c = load_run_config("lin1d", std::nullopt, {});
  EXPECT_EQ(c.benchmark, "lin1d");
  EXPECT_EQ(c.counts, std::vector<int>{301});
  EXPECT_EQ(c.lower[0], -1.5);
  EXPECT_EQ(c.upper[0], 1.5);
  EXPECT_EQ(c.u_max[0], 4.0);
  EXPECT_EQ(c.samples_per_axis, 41);
  EXPECT_EQ(c.solver.dt, 0.01);
  EXPECT_EQ(c.alpha, 0.1);
  EXPECT_EQ(c.k, 1.0);
  EXPECT_TRUE(c.barrier_on);
  EXPECT_TRUE(c.constrained);
  EXPECT_EQ(c.problem().controls.size(), 41);
  EXPECT_TRUE(c.grid()->constrained());
}

GTEST_TEST(RunConfigTest, PrecedenceCliOverConfigOverDefaults) {
  const std::string text = "grid.counts = 101\nsolver.dt = 0.02\n";
  RunConfig c = load_run_config("lin1d", text, {});
  EXPECT_EQ(c.counts, std::vector<int>{101});
  EXPECT_EQ(c.solver.dt, 0.02);
  c = load_run_config("lin1d", text, {{"solver.dt", "0.005"}});
  EXPECT_EQ(c.counts, std::vector<int>{101});
  EXPECT_EQ(c.solver.dt, 0.005);
  c = load_run_config(std::nullopt, "benchmark = integrator2d_disk\n", {{"grid.counts", "21"}});
  EXPECT_EQ(c.benchmark, "integrator2d_disk");
  EXPECT_EQ(c.counts, (std::vector<int>{21, 21}));
}

GTEST_TEST(RunConfigTest, ConfigDefinedSystem) {
  const RunConfig c = load_run_config(std::nullopt,
                                      "state_dim = 1\ninput_dim = 1\nf.1 = -1 * x1\ng.1.1 = 1\nh = x1^2\n"
                                      "grid.lower = -1.2\ngrid.upper = 1.2\ngrid.counts = 25\n"
                                      "controls.u_max = 2\ncontrols.samples = 5\ncost.Q = 2\n",
                                      {});
  EXPECT_TRUE(c.benchmark.empty());
  EXPECT_EQ(c.problem().controls.size(), 5);
  EXPECT_EQ(c.Q(0, 0), 2.0);
  EXPECT_EQ(c.grid()->num_nodes(), 25);
}

GTEST_TEST(RunConfigTest, Unconstrained) {
  const RunConfig c = load_run_config("lin1d", std::nullopt, {{"grid.constrained", "false"}});
  EXPECT_FALSE(c.grid()->constrained());
}

GTEST_TEST(RunConfigTest, Errors) {
  EXPECT_EQ(KindOf("lin1d", "nonsense\n"), ConfigErrorKind::kSyntax);
  EXPECT_EQ(KindOf("lin1d", "grid.bogus = 3\n"), ConfigErrorKind::kUnknownKey);
  EXPECT_EQ(KindOf("lin1d", std::nullopt, {{"solver.bogus", "1"}}), ConfigErrorKind::kUnknownKey);
  EXPECT_EQ(KindOf("nope", std::nullopt), ConfigErrorKind::kBadValue);
  EXPECT_EQ(KindOf(std::nullopt, "grid.counts = 5\n"), ConfigErrorKind::kMissingKey);
  EXPECT_EQ(KindOf("lin1d", "state_dim = 1\n"), ConfigErrorKind::kBadValue);
  EXPECT_EQ(KindOf("lin1d", std::nullopt, {{"solver.dt", "-1"}}), ConfigErrorKind::kBadValue);
  EXPECT_EQ(KindOf("lin1d", std::nullopt, {{"controls.samples", "4"}}), ConfigErrorKind::kBadValue);
  EXPECT_EQ(KindOf("lin1d", std::nullopt, {{"grid.lower", "0.5"}}), ConfigErrorKind::kBadValue);
  EXPECT_EQ(KindOf("integrator2d_disk", std::nullopt, {{"grid.counts", "5,5,5"}}), ConfigErrorKind::kBadValue);
  EXPECT_EQ(KindOf("lin1d", std::nullopt, {{"solver.integrator", "midpoint"}}), ConfigErrorKind::kBadValue);
  EXPECT_EQ(KindOf("lin1d", std::nullopt, {{"certify.eps_lvl", "2"}}), ConfigErrorKind::kBadValue);
  EXPECT_EQ(KindOf(std::nullopt, "state_dim = 1\ninput_dim = 1\nf.1 = 1\ng.1.1 = 1\nh = x1^2\n"),
            ConfigErrorKind::kDriftNonzeroAtOrigin);
}

GTEST_TEST(RunConfigTest, ErrorLines) {
  try {
    load_run_config("lin1d", "grid.counts = 11\n\nsolver.tol = abc\n", {});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

GTEST_TEST(RunConfigTest, Thresholds) {
  const RunConfig c = load_run_config("lin1d", "certify.threshold.boundary_resolved = 0.5\n", {});
  EXPECT_EQ(c.thresholds.boundary_resolved, 0.5);
  EXPECT_EQ(c.thresholds.clbf_decrease, 0.99);
}

}  // namespace
}  // namespace clbf
