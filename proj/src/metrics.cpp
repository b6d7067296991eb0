#include "leosim/metrics.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace leosim {

using nlohmann::json;

std::string to_string(DropReason r) {
  switch (r) {
    case DropReason::NoRoute: return "no_route";
    case DropReason::StaleLink: return "stale_link";
    case DropReason::QueueOverflow: return "queue_overflow";
    case DropReason::Deadline: return "deadline";
  }
  return "unknown";
}

std::uint64_t PacketTally::dropped_total() const {
  return std::accumulate(dropped.begin(), dropped.end(), std::uint64_t{0});
}

double pdr(std::uint64_t sent, std::uint64_t delivered) {
  if (delivered > sent) throw std::invalid_argument("delivered exceeds sent");
  if (sent == 0) return 100.0;
  return 100.0 * static_cast<double>(delivered) / static_cast<double>(sent);
}

double overhead_pct(std::span<const PacketSize> packets) {
  if (packets.empty()) throw EmptyStream();
  double sum = 0.0;
  for (const auto& p : packets) {
    sum += static_cast<double>(p.header_bytes) / (p.header_bytes + p.payload_bytes);
  }
  return 100.0 * sum / static_cast<double>(packets.size());
}

double overhead_pct(std::span<const PacketTally> tallies) {
  // Packets grouped by size first, so a stream of one size reproduces its ratio exactly.
  std::map<std::pair<int, int>, std::uint64_t> by_size;
  std::uint64_t count = 0;
  for (const auto& t : tallies) {
    if (t.sent == 0) continue;
    by_size[{t.header_bytes, t.payload_bytes}] += t.sent;
    count += t.sent;
  }
  if (count == 0) throw EmptyStream();
  double pct = 0.0;
  for (const auto& [size, n] : by_size) {
    const double share = static_cast<double>(n) / static_cast<double>(count);
    pct += share * (100.0 * size.first / (size.first + size.second));
  }
  return pct;
}

RunSummary aggregate(const RunTrace& trace) {
  RunSummary s;
  s.protocol = trace.protocol;
  s.load_fraction = trace.load_fraction;
  s.seed = trace.seed;
  s.snapshots = trace.snapshots;
  s.samples = trace.samples.size();

  double cpu_sum = 0.0;
  double mem_sum = 0.0;
  std::size_t count = 0;
  for (const auto& smp : trace.samples) {
    if (smp.t_s <= 0.0 || smp.node_id.value >= trace.satellite_count) continue;
    s.peak_cpu_pct = std::max(s.peak_cpu_pct, smp.cpu_pct);
    cpu_sum += smp.cpu_pct;
    mem_sum += smp.mem_bytes;
    ++count;
  }
  if (count > 0) {
    s.avg_cpu_pct = cpu_sum / static_cast<double>(count);
    s.avg_mem_bytes = mem_sum / static_cast<double>(count);
  }

  std::array<std::uint64_t, kDropReasonCount> drops{};
  for (const auto& t : trace.packets) {
    s.sent += t.sent;
    s.delivered += t.delivered;
    s.in_flight += t.in_flight;
    for (std::size_t r = 0; r < kDropReasonCount; ++r) drops[r] += t.dropped[r];
  }
  for (auto r : kAllDropReasons) s.drops_by_reason[to_string(r)] = drops[static_cast<std::size_t>(r)];
  s.pdr_pct = pdr(s.sent, s.delivered);
  s.overhead_pct = s.sent > 0 ? overhead_pct(trace.packets) : 0.0;

  for (const auto& span : trace.low_power) {
    s.low_power_node_seconds += std::max(0.0, std::min(span.end_s, trace.duration_s) - span.start_s);
  }
  if (!trace.controller_cpu_pct.empty()) {
    s.controller_cpu_pct =
        std::accumulate(trace.controller_cpu_pct.begin(), trace.controller_cpu_pct.end(), 0.0) /
        static_cast<double>(trace.controller_cpu_pct.size());
  }
  return s;
}

std::string summary_to_json(const RunSummary& s) {
  json j;
  j["schema"] = kSummarySchema;
  j["protocol"] = to_string(s.protocol);
  j["load_fraction"] = s.load_fraction;
  j["seed"] = s.seed;
  j["pdr_pct"] = s.pdr_pct;
  j["peak_cpu_pct"] = s.peak_cpu_pct;
  j["avg_cpu_pct"] = s.avg_cpu_pct;
  j["avg_mem_bytes"] = s.avg_mem_bytes;
  j["overhead_pct"] = s.overhead_pct;
  for (const auto& [reason, n] : s.drops_by_reason) j["drops." + reason] = n;
  j["low_power_node_seconds"] = s.low_power_node_seconds;
  j["controller_cpu_pct"] = s.controller_cpu_pct;
  j["sent"] = s.sent;
  j["delivered"] = s.delivered;
  j["in_flight"] = s.in_flight;
  j["snapshots"] = s.snapshots;
  j["samples"] = s.samples;
  return j.dump(2) + "\n";
}

RunSummary summary_from_json(const std::string& text) {
  const auto j = json::parse(text);
  if (j.value("schema", "") != kSummarySchema) throw std::runtime_error("not a leosim.summary.v1 document");
  RunSummary s;
  const auto proto = parse_protocol(j.at("protocol").get<std::string>());
  if (!proto) throw std::runtime_error("unknown protocol in summary");
  s.protocol = *proto;
  s.load_fraction = j.at("load_fraction");
  s.seed = j.at("seed");
  s.pdr_pct = j.at("pdr_pct");
  s.peak_cpu_pct = j.at("peak_cpu_pct");
  s.avg_cpu_pct = j.at("avg_cpu_pct");
  s.avg_mem_bytes = j.at("avg_mem_bytes");
  s.overhead_pct = j.at("overhead_pct");
  for (const auto& [key, value] : j.items()) {
    if (key.rfind("drops.", 0) == 0) s.drops_by_reason[key.substr(6)] = value.get<std::uint64_t>();
  }
  s.low_power_node_seconds = j.at("low_power_node_seconds");
  s.controller_cpu_pct = j.at("controller_cpu_pct");
  s.sent = j.at("sent");
  s.delivered = j.at("delivered");
  s.in_flight = j.at("in_flight");
  s.snapshots = j.at("snapshots");
  s.samples = j.at("samples");
  return s;
}

std::string series_to_csv(std::span<const Sample> samples) {
  std::string out = "t_s,node_id,cpu_pct,mem_bytes\n";
  char buf[96];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%.0f,%u,%.2f,%.0f\n", s.t_s, static_cast<unsigned>(s.node_id.value),
                  s.cpu_pct, s.mem_bytes);
    out += buf;
  }
  return out;
}

std::vector<Sample> series_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "t_s,node_id,cpu_pct,mem_bytes") {
    throw std::runtime_error("unexpected series header");
  }
  std::vector<Sample> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Sample s;
    unsigned node = 0;
    if (std::sscanf(line.c_str(), "%lf,%u,%lf,%lf", &s.t_s, &node, &s.cpu_pct, &s.mem_bytes) != 4) {
      throw std::runtime_error("malformed series row: " + line);
    }
    s.node_id = NodeId{static_cast<std::uint16_t>(node)};
    out.push_back(s);
  }
  return out;
}

std::string trace_to_json(const RunTrace& t) {
  json j;
  j["protocol"] = to_string(t.protocol);
  j["load_fraction"] = t.load_fraction;
  j["seed"] = t.seed;
  j["duration_s"] = t.duration_s;
  j["window_s"] = t.window_s;
  j["satellite_count"] = t.satellite_count;
  j["node_count"] = t.node_count;
  j["snapshots"] = t.snapshots;
  auto& samples = j["samples"] = json::array();
  for (const auto& s : t.samples) {
    samples.push_back({s.t_s, s.node_id.value, s.cpu_pct, s.mem_bytes, s.low_power});
  }
  auto& packets = j["packets"] = json::array();
  for (const auto& p : t.packets) {
    packets.push_back({p.flow_id, p.header_bytes, p.payload_bytes, p.sent, p.delivered, p.dropped,
                       p.in_flight});
  }
  auto& lp = j["low_power"] = json::array();
  for (const auto& s : t.low_power) lp.push_back({s.node_id.value, s.start_s, s.end_s});
  j["controller_cpu_pct"] = t.controller_cpu_pct;
  return j.dump() + "\n";
}

RunTrace trace_from_json(const std::string& text) {
  const auto j = json::parse(text);
  RunTrace t;
  t.protocol = parse_protocol(j.at("protocol").get<std::string>()).value();
  t.load_fraction = j.at("load_fraction");
  t.seed = j.at("seed");
  t.duration_s = j.at("duration_s");
  t.window_s = j.at("window_s");
  t.satellite_count = j.at("satellite_count");
  t.node_count = j.at("node_count");
  t.snapshots = j.at("snapshots");
  for (const auto& s : j.at("samples")) {
    t.samples.push_back({s[0].get<double>(), NodeId{s[1].get<std::uint16_t>()}, s[2].get<double>(),
                         s[3].get<double>(), s[4].get<bool>()});
  }
  for (const auto& p : j.at("packets")) {
    PacketTally pt;
    pt.flow_id = p[0];
    pt.header_bytes = p[1];
    pt.payload_bytes = p[2];
    pt.sent = p[3];
    pt.delivered = p[4];
    pt.dropped = p[5].get<std::array<std::uint64_t, kDropReasonCount>>();
    pt.in_flight = p[6];
    t.packets.push_back(pt);
  }
  for (const auto& s : j.at("low_power")) {
    t.low_power.push_back({NodeId{s[0].get<std::uint16_t>()}, s[1].get<double>(), s[2].get<double>()});
  }
  t.controller_cpu_pct = j.at("controller_cpu_pct").get<std::vector<double>>();
  return t;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoFailure("write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoFailure("cannot move " + tmp.string() + " into place");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace leosim
