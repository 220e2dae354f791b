// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(TRACERFLOW_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tracerflow_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

const char* kSmallRun =
    "run --scheme sp --spectrum e1 --theta0 1 --d0 0.1 --dt 0.1 --tmax 20 "
    "--particles 64 --modes 16 ";

}  // namespace

TEST_F(CliTest, HelpListsFlags) {
  const auto r = cli("run --help");
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--scheme", "--spectrum", "--alpha", "--theta0", "--d0", "--dt",
                           "--tmax", "--particles", "--modes", "--seed", "--field-mode",
                           "--track-stream", "--out", "--preset"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
  const auto top = cli("--help");
  EXPECT_EQ(top.code, 0);
  for (const char* sub : {"run", "classify", "verify", "fit"}) {
    EXPECT_NE(top.out.find(sub), std::string::npos) << sub;
  }
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("run --no-such-flag").code, 2);
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("run --scheme rk4 --spectrum e1 --dt 0.1 --tmax 1").code, 2);
  const auto r = cli("run --scheme sp --spectrum e1 --tmax 10 --out " + path("x.csv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("dt"), std::string::npos) << r.out;
  EXPECT_EQ(cli("run --preset no-such-preset").code, 2);
}

TEST_F(CliTest, RunWritesCsvManifestAndIsReproducible) {
  const auto a = cli(std::string(kSmallRun) + "--threads 1 --out " + path("a.csv"));
  ASSERT_EQ(a.code, 0) << a.out;
  const auto b = cli(std::string(kSmallRun) + "--threads 3 --out " + path("b.csv"));
  ASSERT_EQ(b.code, 0) << b.out;
  const std::string csv = slurp(path("a.csv"));
  EXPECT_EQ(csv, slurp(path("b.csv")));
  EXPECT_NE(csv.find("t,m11,m22,m12,se11,se22\n"), std::string::npos);
  const std::string manifest = slurp(path("a.csv.manifest.json"));
  for (const char* key : {"\"config\"", "\"output_path\"", "\"preset_name\"", "\"started\"",
                          "\"finished\"", "\"artifact_digests\""}) {
    EXPECT_NE(manifest.find(key), std::string::npos) << key;
  }
}

TEST_F(CliTest, ConfigFileAndFlagsCombine) {
  {
    std::ofstream f(path("exp.cfg"));
    f << "scheme = em\nspectrum = e2\ndt = 0.1\ntmax = 5\nparticles = 16\nmodes = 8\n";
  }
  const auto r = cli("run --config " + path("exp.cfg") + " --particles 20 --out " + path("c.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = slurp(path("c.csv"));
  EXPECT_NE(csv.find("# scheme = em"), std::string::npos);
  EXPECT_NE(csv.find("# particles = 20"), std::string::npos);
}

TEST_F(CliTest, FitMatchesRunSummary) {
  const auto r = cli(std::string(kSmallRun) + "--out " + path("f.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto f = cli("fit " + path("f.csv"));
  ASSERT_EQ(f.code, 0) << f.out;
  EXPECT_EQ(f.out.rfind("record,mu,log_prefactor,t_lo,t_hi,r_squared,stderr_mu\npower_law_fit,", 0), 0u)
      << f.out;
  const auto mu_of = [](const std::string& s) {
    const auto p = s.find("mu=");
    return s.substr(p, s.find(' ', p) - p);
  };
  EXPECT_EQ(mu_of(r.out), mu_of(f.out));
  const auto w = cli("fit " + path("f.csv") + " --t-lo 1 --t-hi 10");
  EXPECT_EQ(w.code, 0);
  EXPECT_NE(w.out.find(",1,10,"), std::string::npos) << w.out;
  EXPECT_EQ(cli("fit " + path("missing.csv")).code, 2);
}

TEST_F(CliTest, BothSchemePresetWritesTwoFiles) {
  const auto r = cli("run --preset fig8-alpha0.5 --particles 16 --tmax 2 --out " + path("p.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(path("p-sp.csv")));
  EXPECT_TRUE(fs::exists(path("p-em.csv")));
  EXPECT_NE(r.out.find("theory=1.33333"), std::string::npos) << r.out;
  EXPECT_NE(slurp(path("p-sp.csv")).find("# preset = fig8-alpha0.5"), std::string::npos);
}

TEST_F(CliTest, RunFailureExitsOne) {
  const auto r = cli("run --scheme sp --spectrum e2 --dt 20 --tmax 200 --particles 8 "
                     "--modes 100 --out " + path("bad.csv"));
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("particle"), std::string::npos) << r.out;
}

TEST_F(CliTest, Classify) {
  auto r = cli("classify e1");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("class: Diffusive"), std::string::npos) << r.out;
  r = cli("classify e7");
  EXPECT_NE(r.out.find("class: Anomalous"), std::string::npos) << r.out;
  r = cli("classify powerlaw2d --alpha 0.75");
  EXPECT_NE(r.out.find("mu: 1.6"), std::string::npos) << r.out;
  EXPECT_EQ(cli("classify powerlaw2d").code, 2);
  EXPECT_EQ(cli("classify e9").code, 2);
}

TEST_F(CliTest, Verify) {
  const auto ok = cli("verify");
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_EQ(ok.out.find("FAIL"), std::string::npos) << ok.out;
  const auto bad = cli("verify --dt 10");
  EXPECT_EQ(bad.code, 1) << bad.out;
  EXPECT_NE(bad.out.find("solver-range"), std::string::npos) << bad.out;
}
