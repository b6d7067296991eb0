#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "leosim/routing.hpp"

namespace leosim {

enum class DropReason : std::uint8_t { NoRoute, StaleLink, QueueOverflow, Deadline };
inline constexpr std::size_t kDropReasonCount = 4;
inline constexpr std::array<DropReason, kDropReasonCount> kAllDropReasons = {
    DropReason::NoRoute, DropReason::StaleLink, DropReason::QueueOverflow, DropReason::Deadline};

std::string to_string(DropReason r);

/// One node's readings for the window (t_s - window, t_s]. The t = 0 sample is the cold
/// start and stays out of the aggregates.
struct Sample {
  double t_s = 0.0;
  NodeId node_id;
  double cpu_pct = 0.0;
  double mem_bytes = 0.0;
  bool low_power = false;

  bool operator==(const Sample&) const = default;
};

/// Packet outcomes of one flow, grouped by the header size the packet left its source with.
struct PacketTally {
  std::uint32_t flow_id = 0;
  int header_bytes = 0;
  int payload_bytes = 0;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::array<std::uint64_t, kDropReasonCount> dropped{};
  std::uint64_t in_flight = 0;

  std::uint64_t dropped_total() const;
  bool operator==(const PacketTally&) const = default;
};

struct LowPowerSpan {
  NodeId node_id;
  double start_s = 0.0;
  double end_s = 0.0;

  bool operator==(const LowPowerSpan&) const = default;
};

/// Everything a run produces that the summary depends on.
struct RunTrace {
  ProtocolKind protocol = ProtocolKind::IPv4;
  double load_fraction = 0.0;
  std::uint64_t seed = 0;
  double duration_s = 0.0;
  double window_s = 10.0;
  std::size_t satellite_count = 0;
  std::size_t node_count = 0;
  std::size_t snapshots = 0;
  std::vector<Sample> samples;  // time-major, then node id
  std::vector<PacketTally> packets;
  std::vector<LowPowerSpan> low_power;
  std::vector<double> controller_cpu_pct;  // one per controller per window (t > 0)

  bool operator==(const RunTrace&) const = default;
};

struct RunSummary {
  ProtocolKind protocol = ProtocolKind::IPv4;
  double load_fraction = 0.0;
  std::uint64_t seed = 0;
  double pdr_pct = 100.0;
  double peak_cpu_pct = 0.0;
  double avg_cpu_pct = 0.0;
  double avg_mem_bytes = 0.0;
  double overhead_pct = 0.0;
  std::map<std::string, std::uint64_t> drops_by_reason;
  double low_power_node_seconds = 0.0;
  double controller_cpu_pct = 0.0;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t in_flight = 0;
  std::size_t snapshots = 0;
  std::size_t samples = 0;

  bool operator==(const RunSummary&) const = default;
};

class IoFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyStream : public std::runtime_error {
 public:
  EmptyStream() : std::runtime_error("overhead of an empty packet stream") {}
};

/// 100 * delivered / sent; 100 when nothing was sent.
double pdr(std::uint64_t sent, std::uint64_t delivered);

struct PacketSize {
  int header_bytes = 0;
  int payload_bytes = 0;
};

/// Per-packet mean of header / (header + payload), in percent.
double overhead_pct(std::span<const PacketSize> packets);
double overhead_pct(std::span<const PacketTally> tallies);

RunSummary aggregate(const RunTrace& trace);

inline constexpr const char* kSummarySchema = "leosim.summary.v1";

/// Flat JSON object, one key per summary field plus `drops.<reason>` and `schema`.
std::string summary_to_json(const RunSummary& summary);
RunSummary summary_from_json(const std::string& text);

/// `t_s,node_id,cpu_pct,mem_bytes`, one row per sample.
std::string series_to_csv(std::span<const Sample> samples);
std::vector<Sample> series_from_csv(const std::string& text);

std::string trace_to_json(const RunTrace& trace);
RunTrace trace_from_json(const std::string& text);

/// Writes through a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace leosim
