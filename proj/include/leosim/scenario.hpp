#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "leosim/constellation.hpp"
#include "leosim/green_te.hpp"

namespace leosim {

/// Synthetic per-node CPU model, in cpu-units.
struct CostModel {
  double c_lookup_v4 = 1.0;
  double c_lookup_v6 = 1.0;
  double c_mpls_swap = 0.6;
  double c_mpls_push = 0.9;       // label push at the ingress satellite
  double c_srv6_end = 0.8;        // segment endpoint
  double c_srv6_transit = 0.5;    // plain IPv6 forwarding between segment endpoints
  double c_encap = 2.0;           // packet origination at the source ground station
  double c_spf_per_unit = 1.2;    // x (M+N) log2 N per route recomputation
  double c_base_units_per_s = 80.0;   // housekeeping load of an awake satellite
  double window_s = 10.0;
  double capacity_units_per_s = 1000.0;
  double ground_capacity_units_per_s = 1.0e6;  // ground stations and controllers
};

struct FlowEndpoints {
  std::string src;
  std::string dst;
};

struct Scenario {
  OrbitalShell polar = default_polar_shell();
  OrbitalShell inclined = default_inclined_shell();
  VisibilityParams visibility;
  std::vector<GroundStation> ground_stations = default_ground_stations();
  bool allow_nonstandard = false;

  GreenParams green;
  CostModel cost;

  double duration_s = 3600.0;
  double refresh_s = 10.0;
  double queue_ms = 250.0;
  double link_capacity_bps = 20.0e6;
  double packet_timeout_s = 1.0;
  double loss_probe_s = 1.0;
  int payload_bytes = 512;

  int auto_flows = 120;
  std::vector<FlowEndpoints> flows;  // explicit flows replace the random matrix

  Constellation constellation() const;
  double queue_bytes() const { return queue_ms / 1000.0 * link_capacity_bps / 8.0; }
};

struct ScenarioIssue {
  int line = 0;  // 0 = not tied to a line
  std::string field;
  std::string message;
};

class ScenarioInvalid : public std::runtime_error {
 public:
  explicit ScenarioInvalid(std::vector<ScenarioIssue> issues);
  const std::vector<ScenarioIssue>& issues() const { return issues_; }

 private:
  std::vector<ScenarioIssue> issues_;
};

/// Every invariant reachable from configuration; empty if valid.
std::vector<ScenarioIssue> validate(const Scenario& scenario);

/// Parses `key = value` lines (`#` comments, dotted keys) over the defaults. Collects every
/// problem before throwing ScenarioInvalid.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// Complete effective configuration in the same format, defaults filled in.
std::string echo_scenario(const Scenario& scenario);

}  // namespace leosim
