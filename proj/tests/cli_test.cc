#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("clbf_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Run(const std::string& args) const {
    const std::string cmd = std::string(CLBF_BINARY) + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string Slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(CliTest, BenchList) {
  EXPECT_EQ(Run("bench-list"), 0);
  const std::string out = Slurp(Path("stdout.txt"));
  for (const char* name : {"lin1d", "integrator2d_disk", "pendulum_box"}) EXPECT_NE(out.find(name), std::string::npos);
}

TEST_F(CliTest, SolveWritesArtifacts) {
  EXPECT_EQ(Run("solve --benchmark lin1d --out " + Path("run")), 0);
  EXPECT_TRUE(fs::exists(Path("run/field.csv")));
  EXPECT_TRUE(fs::exists(Path("run/solve.json")));
  EXPECT_NE(Slurp(Path("run/solve.json")).find("CONVERGED"), std::string::npos);
}

TEST_F(CliTest, SolveIsReproducible) {
  ASSERT_EQ(Run("solve --benchmark lin1d --counts 101 --out " + Path("a")), 0);
  ASSERT_EQ(Run("solve --benchmark lin1d --counts 101 --out " + Path("b")), 0);
  EXPECT_EQ(Slurp(Path("a/field.csv")), Slurp(Path("b/field.csv")));
}

TEST_F(CliTest, WorkersDoNotChangeOutput) {
  ASSERT_EQ(Run("solve --benchmark integrator2d_disk --counts 31 --workers 1 --out " + Path("one")), 0);
  ASSERT_EQ(Run("solve --benchmark integrator2d_disk --counts 31 --workers 4 --out " + Path("four")), 0);
  EXPECT_EQ(Slurp(Path("one/field.csv")), Slurp(Path("four/field.csv")));
}

TEST_F(CliTest, MalformedConfig) {
  std::ofstream(Path("bad.cfg")) << "state_dim = 1\nthis is not a pair\n";
  EXPECT_EQ(Run("solve --config " + Path("bad.cfg") + " --out " + Path("run")), 2);
  EXPECT_FALSE(fs::exists(Path("run")));
  EXPECT_NE(Slurp(Path("stderr.txt")).find("line 2"), std::string::npos);
}

TEST_F(CliTest, ConfigFileSystem) {
  std::ofstream(Path("sys.cfg")) << "state_dim = 1\ninput_dim = 1\nf.1 = -1 * x1\ng.1.1 = 1\nh = x1^2\n"
                                    "grid.lower = -1.5\ngrid.upper = 1.5\ngrid.counts = 61\n"
                                    "controls.u_max = 2\ncontrols.samples = 5\n";
  EXPECT_EQ(Run("solve --config " + Path("sys.cfg") + " --out " + Path("run")), 0);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Run("solve --benchmark nope --out " + Path("run")), 2);
  EXPECT_EQ(Run("solve --benchmark lin1d --no-such-flag"), 2);
  EXPECT_EQ(Run("frobnicate"), 2);
  EXPECT_EQ(Run("solve --benchmark lin1d --set grid.bogus=1 --out " + Path("run")), 2);
}

TEST_F(CliTest, NonConvergence) {
  EXPECT_EQ(Run("solve --benchmark lin1d --max-sweeps 1 --out " + Path("run")), 3);
  EXPECT_TRUE(fs::exists(Path("run/field.csv")));
  EXPECT_EQ(Run("certify --benchmark lin1d --max-sweeps 1 --field " + Path("run/field.csv") + " --out " + Path("cert")), 3);
}

TEST_F(CliTest, CertifyPipeline) {
  ASSERT_EQ(Run("solve --benchmark lin1d --out " + Path("run")), 0);
  const std::string field = " --field " + Path("run/field.csv");
  EXPECT_EQ(Run("certify --benchmark lin1d" + field + " --out " + Path("cert")), 0);
  EXPECT_NE(Slurp(Path("cert/certify.json")).find("boundary_resolved"), std::string::npos);

  EXPECT_EQ(Run("certify --benchmark lin1d --counts 201" + field + " --out " + Path("cert2")), 2);
  EXPECT_NE(Slurp(Path("stderr.txt")).find("params_hash"), std::string::npos);

  EXPECT_EQ(Run("certify --benchmark lin1d --threshold 1.01" + field + " --out " + Path("cert3")), 4);
  EXPECT_NE(Slurp(Path("stderr.txt")).find("warning"), std::string::npos);
}

TEST_F(CliTest, SimulateAndVerify) {
  ASSERT_EQ(Run("solve --benchmark lin1d --out " + Path("run")), 0);
  const std::string field = " --field " + Path("run/field.csv");
  EXPECT_EQ(Run("simulate --benchmark lin1d --x0 0.5" + field + " --out " + Path("sim")), 0);
  const std::string csv = Slurp(Path("sim/trajectory.csv"));
  EXPECT_EQ(csv.rfind("t,x1,u1,h,w\n", 0), 0);
  EXPECT_NE(Slurp(Path("sim/simulate.json")).find("SAFE_CONVERGED"), std::string::npos);
  EXPECT_EQ(Run("batch-verify --benchmark lin1d" + field + " --out " + Path("ver")), 0);
  EXPECT_TRUE(fs::exists(Path("ver/safety.json")));
}

TEST_F(CliTest, Sweep) {
  EXPECT_EQ(Run("sweep --benchmark lin1d --axis grid --factors 1,2 --counts 101 --out " + Path("sw")), 0);
  std::istringstream in(Slurp(Path("sw/sweep.csv")));
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 3);
  EXPECT_EQ(Run("sweep --benchmark lin1d --axis controls --factors 1 --counts 101 --out " + Path("one")), 0);
  std::istringstream one(Slurp(Path("one/sweep.csv")));
  lines = 0;
  while (std::getline(one, line)) ++lines;
  EXPECT_EQ(lines, 2);
  EXPECT_EQ(Run("sweep --benchmark lin1d --axis bogus --out " + Path("bad")), 2);
}

}  // namespace
