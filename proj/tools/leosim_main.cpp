#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "leosim/sweep.hpp"

namespace fs = std::filesystem;
using namespace leosim;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kIo = 3;

Scenario scenario_from(const std::string& path) {
  if (path.empty()) return Scenario{};
  if (!fs::exists(path)) throw IoFailure("scenario file not found: " + path);
  return load_scenario(path);
}

// --out, else $LEOSIM_OUT.
fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("LEOSIM_OUT"); env && *env) return env;
  throw ScenarioInvalid({{0, "out", "no output directory (pass --out or set LEOSIM_OUT)"}});
}

int cmd_run(const std::string& scenario_path, const std::string& protocol, double load,
            std::uint64_t seed, const std::string& out_flag) {
  const auto proto = parse_protocol(protocol);
  if (!proto) throw ScenarioInvalid({{0, "protocol", "unknown protocol '" + protocol + "'"}});
  const auto scenario = scenario_from(scenario_path);
  const auto dir = output_dir(out_flag);
  const auto result = run(scenario, *proto, load, seed);
  write_file_atomic(dir / "summary.v1", summary_to_json(result.summary));
  write_file_atomic(dir / "series.csv", series_to_csv(result.trace.samples));
  std::printf("%s load=%s seed=%llu pdr=%.2f%% avg_cpu=%.2f%% peak_cpu=%.2f%% -> %s\n",
              to_string(*proto).c_str(), format_load(load).c_str(),
              static_cast<unsigned long long>(seed), result.summary.pdr_pct, result.summary.avg_cpu_pct,
              result.summary.peak_cpu_pct, dir.string().c_str());
  return kOk;
}

int cmd_compare(const std::string& scenario_path, const std::string& protocols, const std::string& loads,
                std::size_t seeds, const std::string& out_flag, int jobs, bool resume) {
  std::vector<ProtocolKind> protos;
  std::vector<double> load_values;
  try {
    protos = parse_protocol_list(protocols);
    load_values = parse_load_range(loads);
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    throw ScenarioInvalid({{0, msg.substr(0, msg.find(':')), msg.substr(msg.find(':') + 2)}});
  }
  if (seeds == 0) throw ScenarioInvalid({{0, "seeds", "must be >= 1"}});
  const auto scenario = scenario_from(scenario_path);
  if (auto issues = validate(scenario); !issues.empty()) throw ScenarioInvalid(std::move(issues));
  const auto dir = output_dir(out_flag);

  const auto cells = make_grid(protos, load_values, seeds);
  GridOptions opts;
  opts.jobs = jobs;
  opts.cell_dir = dir / "cells";
  opts.resume = resume;
  const auto rows = run_grid(scenario, cells, opts);
  write_file_atomic(dir / "grid.csv", grid_csv(rows));
  std::printf("%zu cells -> %s\n", rows.size(), (dir / "grid.csv").string().c_str());
  return kOk;
}

int cmd_validate(const std::string& scenario_path) {
  const auto scenario = scenario_from(scenario_path);
  if (auto issues = validate(scenario); !issues.empty()) throw ScenarioInvalid(std::move(issues));
  std::cout << echo_scenario(scenario);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Packet-level LEO routing simulator"};
  app.require_subcommand(1);

  std::string scenario_path, protocol = "srv6-green", out;
  double load = 0.5;
  std::uint64_t seed = 1;
  auto* run_cmd = app.add_subcommand("run", "Simulate one protocol at one load");
  run_cmd->add_option("--scenario", scenario_path, "Scenario file (defaults when omitted)");
  run_cmd->add_option("--protocol", protocol, "ipv4|ipv6|mpls|srv6|srv6-green")->capture_default_str();
  run_cmd->add_option("--load", load, "Offered load fraction in [0, 1]")->capture_default_str();
  run_cmd->add_option("--seed", seed)->capture_default_str();
  run_cmd->add_option("--out", out, "Output directory (default $LEOSIM_OUT)");

  std::string protocols = "ipv4,ipv6,mpls,srv6,srv6-green", loads = "0.1:1.0:0.1";
  std::size_t seeds = 3;
  int jobs = 0;
  bool resume = false;
  auto* cmp_cmd = app.add_subcommand("compare", "Protocol x load x seed sweep into grid.csv");
  cmp_cmd->add_option("--scenario", scenario_path, "Scenario file (defaults when omitted)");
  cmp_cmd->add_option("--protocols", protocols)->capture_default_str();
  cmp_cmd->add_option("--loads", loads, "START:STOP:STEP")->capture_default_str();
  cmp_cmd->add_option("--seeds", seeds, "Seeds 1..N")->capture_default_str();
  cmp_cmd->add_option("--out", out, "Output directory (default $LEOSIM_OUT)");
  cmp_cmd->add_option("--jobs", jobs, "Concurrent runs (0 = all cores)")->capture_default_str();
  cmp_cmd->add_flag("--resume", resume, "Reuse finished cells from a previous invocation");

  auto* val_cmd = app.add_subcommand("validate", "Check a scenario and print the effective config");
  val_cmd->add_option("--scenario", scenario_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*run_cmd) return cmd_run(scenario_path, protocol, load, seed, out);
    if (*cmp_cmd) return cmd_compare(scenario_path, protocols, loads, seeds, out, jobs, resume);
    if (*val_cmd) return cmd_validate(scenario_path);
  } catch (const ScenarioInvalid& e) {
    std::cerr << e.what() << "\n";
    return kInvalid;
  } catch (const IoFailure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  }
  return kInvalid;
}
