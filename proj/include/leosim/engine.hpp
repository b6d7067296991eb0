#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include "leosim/metrics.hpp"
#include "leosim/scenario.hpp"

namespace leosim {

struct Flow {
  std::uint32_t flow_id = 0;
  NodeId src_gs;
  NodeId dst_gs;
  double rate_bps = 0.0;  // on the wire, headers included
  int payload_bytes = 512;
  int header_bytes = 0;
  std::size_t controller = 0;

  double packet_bits() const { return 8.0 * (header_bytes + payload_bytes); }
  double gap_s() const { return packet_bits() / rate_bps; }
};

struct Packet {
  std::uint64_t packet_id = 0;
  std::uint32_t flow_id = 0;
  double created_s = 0.0;
  double deadline_s = 0.0;
  int header_bytes = 0;
  int payload_bytes = 0;
  NodeId current_node;
  NodeId dst;
  // SRv6: the route set owns the segment list and path; the packet keeps its own
  // segments_left.
  const SegmentList* seglist = nullptr;
  int segments_left = 0;
  const Path* sr_path = nullptr;
  std::optional<std::uint32_t> label;
  std::uint32_t path_pos = 0;
  bool on_backup = false;
  std::uint32_t generation = 0;  // topology and routes in force at creation

  int size_bytes() const { return header_bytes + payload_bytes; }
};

/// Processing order at equal timestamps follows the enumerator order.
enum class EventKind : std::uint8_t {
  PacketArrival,
  PacketForward,
  MetricsSample,
  IdleScan,
  TopologyRefresh,
  RouteRecompute
};

struct Event {
  double t_s = 0.0;
  EventKind kind = EventKind::PacketArrival;
  std::uint64_t seq = 0;
  std::uint32_t payload = 0;

  bool operator>(const Event& o) const {
    if (t_s != o.t_s) return t_s > o.t_s;
    if (kind != o.kind) return kind > o.kind;
    return seq > o.seq;
  }
};

/// Calendar queue: fixed-width time buckets over a rolling horizon plus a heap for events
/// beyond it. Pops in (t_s, kind, seq) order, like a binary heap over all events.
class EventQueue {
 public:
  explicit EventQueue(double bucket_s = 5e-4, std::size_t buckets = std::size_t{1} << 13);

  void push(const Event& e);
  bool empty() const { return size_ == 0; }
  std::size_t size() const { return size_; }
  /// Earliest event; precondition !empty().
  const Event& top();
  void pop();

 private:
  std::uint64_t bucket_of(double t) const;
  void refill();

  using Heap = std::priority_queue<Event, std::vector<Event>, std::greater<>>;
  double width_;
  std::vector<std::vector<Event>> wheel_;
  std::size_t in_wheel_ = 0;
  std::uint64_t current_ = 0;
  std::vector<Event> now_;  // current bucket, sorted descending: earliest at the back
  Heap far_;
  std::size_t size_ = 0;
};

/// Random ground-station pairs (or the scenario's explicit list) sharing load_fraction x link
/// capacity equally, measured on the wire with the protocol's base header.
std::vector<Flow> make_flows(const Scenario& scenario, const Constellation& constellation,
                             ProtocolKind protocol, double load_fraction, std::uint64_t seed);

/// Offered bits per second on every ground link when `flows` follow the unit-weight routes
/// of `snapshot`, keyed by (satellite, ground station) directed as traversed.
std::map<std::pair<NodeId, NodeId>, double> ground_link_load(const TopologySnapshot& snapshot,
                                                             std::span<const Flow> flows);

/// CBR send instants of one flow in [0, duration): a seeded phase in [0, gap) then every gap.
std::vector<double> send_times(const Flow& flow, double duration_s, std::uint64_t seed);
double start_phase(const Flow& flow, std::uint64_t seed);

/// Tail-drop FIFO on one directed link, sized in bytes.
class LinkQueue {
 public:
  LinkQueue(double rate_bps, double capacity_bytes) : rate_bps_(rate_bps), capacity_(capacity_bytes) {}

  double backlog_bytes(double now) const;
  /// Departure-complete time of a packet offered at `now`, or nullopt if it does not fit.
  std::optional<double> admit(double now, int bytes);

 private:
  double rate_bps_;
  double capacity_;
  double busy_until_ = 0.0;
};

struct HopDecision {
  enum class Kind : std::uint8_t { Delivered, Progressed, Dropped };
  Kind kind = Kind::Dropped;
  NodeId next;
  double cpu_units = 0.0;
  DropReason reason = DropReason::NoRoute;
  bool failover = false;  // source switched to the backup segment list
};

/// True if the link a-b exists in the snapshot, is Active, and has not been lost by t.
bool link_usable(const TopologySnapshot& snapshot, NodeId a, NodeId b, double t);

/// One forwarding step at packet.current_node. Updates the packet's protocol state (label,
/// segment list, path position, header on failover) but not current_node. The deadline is
/// checked against t, link state against packet.created_s. An SRv6 source takes the backup
/// list when any primary link is down, or always with `use_backup`.
HopDecision forward(Packet& packet, const RouteSet& routes, const TopologySnapshot& snapshot,
                    const Constellation& constellation, const CostModel& cost, double t,
                    bool use_backup = false);

struct RunAudit {
  std::size_t snapshots = 0;
  std::size_t route_computations = 0;
  std::uint64_t events = 0;
  /// Computed SRv6Green paths that use a link with an endpoint above the CPU threshold.
  std::size_t overloaded_path_links = 0;
  std::size_t green_paths_checked = 0;
  std::size_t fallback_routes = 0;
  std::uint64_t trace_hash = 0;  // FNV-1a over processed events
};

struct RunResult {
  RunSummary summary;
  RunTrace trace;
  RunAudit audit;
};

RunResult run(const Scenario& scenario, ProtocolKind protocol, double load_fraction,
              std::uint64_t seed);

}  // namespace leosim
