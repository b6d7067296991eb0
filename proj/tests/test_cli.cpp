#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "leosim/metrics.hpp"
#include "leosim/sweep.hpp"

using namespace leosim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string err;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("leosim_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Outcome cli(const std::string& args, const std::string& env = "") {
  const auto err = work_dir() / "stderr.txt";
  const std::string cmd = env + " \"" LEOSIM_CLI_PATH "\" " + args + " > \"" +
                          (work_dir() / "stdout.txt").string() + "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.err = read_file(err);
  return o;
}

std::string stdout_text() { return read_file(work_dir() / "stdout.txt"); }

fs::path scenario_file(const std::string& name, const std::string& body) {
  const auto p = work_dir() / name;
  std::ofstream(p) << body;
  return p;
}

fs::path short_scenario() { return scenario_file("short.scn", "duration_s = 30\n"); }

}  // namespace

TEST(Cli, RunWritesSummaryAndSeries) {
  const auto out = work_dir() / "run1";
  const auto o = cli("run --scenario " + short_scenario().string() +
                     " --protocol srv6-green --load 0.5 --seed 42 --out " + out.string());
  ASSERT_EQ(o.code, 0) << o.err;
  const auto s = summary_from_json(read_file(out / "summary.v1"));
  EXPECT_EQ(s.protocol, ProtocolKind::SRv6Green);
  EXPECT_EQ(s.seed, 42u);
  EXPECT_DOUBLE_EQ(s.load_fraction, 0.5);
  EXPECT_EQ(series_from_csv(read_file(out / "series.csv")).size(), s.samples);
}

TEST(Cli, RunIsByteIdenticalAcrossInvocations) {
  const auto a = work_dir() / "det_a";
  const auto b = work_dir() / "det_b";
  const std::string common = "run --scenario " + short_scenario().string() + " --protocol mpls --load 0.7 --seed 3 --out ";
  ASSERT_EQ(cli(common + a.string()).code, 0);
  ASSERT_EQ(cli(common + b.string()).code, 0);
  EXPECT_EQ(read_file(a / "summary.v1"), read_file(b / "summary.v1"));
  EXPECT_EQ(read_file(a / "series.csv"), read_file(b / "series.csv"));
}

TEST(Cli, LoadOutOfRangeExitsTwoNamingField) {
  const auto o = cli("run --scenario " + short_scenario().string() + " --load 1.5 --out " +
                     (work_dir() / "bad").string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("load"), std::string::npos) << o.err;
}

TEST(Cli, UnknownProtocolExitsTwo) {
  EXPECT_EQ(cli("run --protocol ospf --out " + (work_dir() / "bad").string()).code, 2);
}

TEST(Cli, InvalidScenarioListsEveryViolation) {
  const auto p = scenario_file("bad.scn", "green.cpu_th_pct = 105\nbogus = 1\n");
  const auto o = cli("validate --scenario " + p.string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("green.cpu_th_pct"), std::string::npos) << o.err;
  EXPECT_NE(o.err.find("bogus"), std::string::npos) << o.err;
  EXPECT_NE(o.err.find("line 1"), std::string::npos) << o.err;
}

TEST(Cli, ValidateEchoesEffectiveConfig) {
  const auto p = scenario_file("empty.scn", "");
  ASSERT_EQ(cli("validate --scenario " + p.string()).code, 0);
  const auto echo = stdout_text();
  EXPECT_NE(echo.find("duration_s = 3600"), std::string::npos);
  EXPECT_NE(echo.find("green.cpu_th_pct = 80"), std::string::npos);
  EXPECT_NE(echo.find("gs.sydney"), std::string::npos);
  const auto again = scenario_file("echo.scn", echo);
  ASSERT_EQ(cli("validate --scenario " + again.string()).code, 0);
  EXPECT_EQ(stdout_text(), echo);
}

TEST(Cli, MissingScenarioIsIoError) {
  EXPECT_EQ(cli("validate --scenario " + (work_dir() / "nope.scn").string()).code, 3);
}

TEST(Cli, UnwritableOutputIsIoError) {
  const auto blocker = work_dir() / "blocker";
  std::ofstream(blocker) << "x";
  const auto o = cli("run --scenario " + short_scenario().string() + " --out " + (blocker / "sub").string());
  EXPECT_EQ(o.code, 3) << o.err;
}

TEST(Cli, OutputDirFromEnvironment) {
  const auto out = work_dir() / "from_env";
  ASSERT_EQ(cli("run --scenario " + short_scenario().string() + " --protocol ipv4 --load 0.2",
                "LEOSIM_OUT=\"" + out.string() + "\"")
                .code,
            0);
  EXPECT_TRUE(fs::exists(out / "summary.v1"));
}

TEST(Cli, CompareWritesSortedGridAndResumes) {
  const auto out = work_dir() / "grid";
  const std::string args = "compare --scenario " + short_scenario().string() +
                           " --protocols srv6,ipv4 --loads 0.4:0.8:0.4 --seeds 2 --out " + out.string();
  ASSERT_EQ(cli(args).code, 0);
  const auto first = read_file(out / "grid.csv");
  const auto rows = parse_grid_csv(first);
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows.front().protocol, ProtocolKind::IPv4);
  EXPECT_EQ(rows.back().protocol, ProtocolKind::SRv6);

  fs::remove(out / "grid.csv");
  const auto cells = make_grid({ProtocolKind::IPv4, ProtocolKind::SRv6}, {0.4, 0.8}, 2);
  fs::remove(out / "cells" / cell_file_name(cells[3]));
  ASSERT_EQ(cli(args + " --resume").code, 0);
  EXPECT_EQ(read_file(out / "grid.csv"), first);
}

TEST(Cli, CompareRejectsBadRange) {
  const auto o = cli("compare --loads 0.1:x:0.1 --out " + (work_dir() / "g2").string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("loads"), std::string::npos) << o.err;
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(cli("--help").code, 0); }
