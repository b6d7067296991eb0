#include "leosim/scenario.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "leosim/metrics.hpp"

namespace leosim {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(trim(part));
  return out;
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) return std::nullopt;
  return v;
}

std::optional<long long> to_int(const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) return std::nullopt;
  return v;
}

std::optional<bool> to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  return std::nullopt;
}

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

struct Field {
  std::function<std::optional<std::string>(Scenario&, const std::string&)> set;
  std::function<std::string(const Scenario&)> get;
};

template <typename T>
Field real(T Scenario::*member) {
  return {[member](Scenario& s, const std::string& v) -> std::optional<std::string> {
            auto d = to_double(v);
            if (!d) return "expected a number";
            s.*member = *d;
            return std::nullopt;
          },
          [member](const Scenario& s) { return fmt(s.*member); }};
}

Field integer(int Scenario::*member) {
  return {[member](Scenario& s, const std::string& v) -> std::optional<std::string> {
            auto d = to_int(v);
            if (!d) return "expected an integer";
            s.*member = static_cast<int>(*d);
            return std::nullopt;
          },
          [member](const Scenario& s) { return std::to_string(s.*member); }};
}

template <typename Owner, typename T>
Field nested_real(Owner Scenario::*owner, T Owner::*member) {
  return {[owner, member](Scenario& s, const std::string& v) -> std::optional<std::string> {
            auto d = to_double(v);
            if (!d) return "expected a number";
            (s.*owner).*member = static_cast<T>(*d);
            return std::nullopt;
          },
          [owner, member](const Scenario& s) { return fmt(static_cast<double>((s.*owner).*member)); }};
}

Field nested_int(OrbitalShell Scenario::*owner, int OrbitalShell::*member) {
  return {[owner, member](Scenario& s, const std::string& v) -> std::optional<std::string> {
            auto d = to_int(v);
            if (!d) return "expected an integer";
            (s.*owner).*member = static_cast<int>(*d);
            return std::nullopt;
          },
          [owner, member](const Scenario& s) { return std::to_string((s.*owner).*member); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    t.emplace_back("duration_s", real(&Scenario::duration_s));
    t.emplace_back("refresh_s", real(&Scenario::refresh_s));
    t.emplace_back("queue_ms", real(&Scenario::queue_ms));
    t.emplace_back("link_capacity_bps", real(&Scenario::link_capacity_bps));
    t.emplace_back("packet_timeout_s", real(&Scenario::packet_timeout_s));
    t.emplace_back("loss_probe_s", real(&Scenario::loss_probe_s));
    t.emplace_back("payload_bytes", integer(&Scenario::payload_bytes));
    t.emplace_back("allow_nonstandard",
                   Field{[](Scenario& s, const std::string& v) -> std::optional<std::string> {
                           auto b = to_bool(v);
                           if (!b) return "expected true or false";
                           s.allow_nonstandard = *b;
                           return std::nullopt;
                         },
                         [](const Scenario& s) { return std::string(s.allow_nonstandard ? "true" : "false"); }});
    for (auto [prefix, shell] : {std::pair{"polar", &Scenario::polar}, std::pair{"inclined", &Scenario::inclined}}) {
      const std::string p = prefix;
      t.emplace_back(p + ".planes", nested_int(shell, &OrbitalShell::plane_count));
      t.emplace_back(p + ".sats_per_plane", nested_int(shell, &OrbitalShell::sats_per_plane));
      t.emplace_back(p + ".altitude_km", nested_real(shell, &OrbitalShell::altitude_km));
      t.emplace_back(p + ".inclination_deg", nested_real(shell, &OrbitalShell::inclination_deg));
      t.emplace_back(p + ".phasing_deg", nested_real(shell, &OrbitalShell::phasing_offset_deg));
      t.emplace_back(p + ".raan_spread_deg", nested_real(shell, &OrbitalShell::raan_spread_deg));
    }
    t.emplace_back("visibility.isl_margin_km", nested_real(&Scenario::visibility, &VisibilityParams::isl_margin_km));
    t.emplace_back("visibility.elevation_mask_deg",
                   nested_real(&Scenario::visibility, &VisibilityParams::elevation_mask_deg));
    t.emplace_back("green.cpu_th_pct", nested_real(&Scenario::green, &GreenParams::cpu_th_pct));
    t.emplace_back("green.idle_cpu_pct", nested_real(&Scenario::green, &GreenParams::idle_cpu_pct));
    t.emplace_back("green.idle_time_s", nested_real(&Scenario::green, &GreenParams::idle_time_s));
    t.emplace_back("green.baseline", nested_real(&Scenario::green, &GreenParams::baseline));
    t.emplace_back("cost.c_lookup_v4", nested_real(&Scenario::cost, &CostModel::c_lookup_v4));
    t.emplace_back("cost.c_lookup_v6", nested_real(&Scenario::cost, &CostModel::c_lookup_v6));
    t.emplace_back("cost.c_mpls_swap", nested_real(&Scenario::cost, &CostModel::c_mpls_swap));
    t.emplace_back("cost.c_mpls_push", nested_real(&Scenario::cost, &CostModel::c_mpls_push));
    t.emplace_back("cost.c_srv6_end", nested_real(&Scenario::cost, &CostModel::c_srv6_end));
    t.emplace_back("cost.c_srv6_transit", nested_real(&Scenario::cost, &CostModel::c_srv6_transit));
    t.emplace_back("cost.c_encap", nested_real(&Scenario::cost, &CostModel::c_encap));
    t.emplace_back("cost.c_spf_per_unit", nested_real(&Scenario::cost, &CostModel::c_spf_per_unit));
    t.emplace_back("cost.c_base_units_per_s", nested_real(&Scenario::cost, &CostModel::c_base_units_per_s));
    t.emplace_back("cost.window_s", nested_real(&Scenario::cost, &CostModel::window_s));
    t.emplace_back("cost.capacity_units_per_s", nested_real(&Scenario::cost, &CostModel::capacity_units_per_s));
    t.emplace_back("cost.ground_capacity_units_per_s",
                   nested_real(&Scenario::cost, &CostModel::ground_capacity_units_per_s));
    t.emplace_back("traffic.auto_flows", integer(&Scenario::auto_flows));
    return t;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return &f;
  }
  return nullptr;
}

void check_shell(const OrbitalShell& sh, const std::string& p, std::vector<ScenarioIssue>& out) {
  if (sh.plane_count < 1) out.push_back({0, p + ".planes", "must be >= 1"});
  if (sh.sats_per_plane < 1) out.push_back({0, p + ".sats_per_plane", "must be >= 1"});
  if (!(sh.altitude_km > 0.0)) out.push_back({0, p + ".altitude_km", "must be > 0"});
  if (!(sh.inclination_deg >= 0.0 && sh.inclination_deg <= 180.0)) {
    out.push_back({0, p + ".inclination_deg", "must be in [0, 180]"});
  }
  if (!(sh.raan_spread_deg > 0.0 && sh.raan_spread_deg <= 360.0)) {
    out.push_back({0, p + ".raan_spread_deg", "must be in (0, 360]"});
  }
}

}  // namespace

ScenarioInvalid::ScenarioInvalid(std::vector<ScenarioIssue> issues)
    : std::runtime_error([&] {
        std::string msg = "invalid scenario:";
        for (const auto& i : issues) {
          msg += "\n  ";
          if (i.line > 0) msg += "line " + std::to_string(i.line) + ": ";
          msg += i.field + ": " + i.message;
        }
        return msg;
      }()),
      issues_(std::move(issues)) {}

Constellation Scenario::constellation() const {
  auto p = polar;
  auto i = inclined;
  p.shell_id = ShellId::Polar;
  i.shell_id = ShellId::Inclined;
  p.sat_count = p.plane_count * p.sats_per_plane;
  i.sat_count = i.plane_count * i.sats_per_plane;
  return Constellation({p, i}, ground_stations, visibility);
}

std::vector<ScenarioIssue> validate(const Scenario& s) {
  std::vector<ScenarioIssue> out;
  check_shell(s.polar, "polar", out);
  check_shell(s.inclined, "inclined", out);
  if (s.visibility.isl_margin_km < 0.0) out.push_back({0, "visibility.isl_margin_km", "must be >= 0"});
  if (!(s.visibility.elevation_mask_deg >= 0.0 && s.visibility.elevation_mask_deg < 90.0)) {
    out.push_back({0, "visibility.elevation_mask_deg", "must be in [0, 90)"});
  }

  const auto gs_count = s.ground_stations.size();
  if (gs_count != 10 && !s.allow_nonstandard) {
    out.push_back({0, "gs", "ground station count != 10 (" + std::to_string(gs_count) +
                                 "); set allow_nonstandard = true to override"});
  }
  if (gs_count < 2) out.push_back({0, "gs", "at least two ground stations are required"});
  std::set<std::string> names;
  std::size_t controllers = 0;
  for (const auto& gs : s.ground_stations) {
    if (!names.insert(gs.name).second) out.push_back({0, "gs." + gs.name, "duplicate ground station"});
    if (!(gs.latitude_deg >= -90.0 && gs.latitude_deg <= 90.0)) {
      out.push_back({0, "gs." + gs.name, "latitude must be in [-90, 90]"});
    }
    if (!(gs.longitude_deg >= -180.0 && gs.longitude_deg <= 180.0)) {
      out.push_back({0, "gs." + gs.name, "longitude must be in [-180, 180]"});
    }
    controllers += gs.is_controller_site;
  }
  if (controllers == 0) out.push_back({0, "gs", "at least one controller site is required"});
  if (controllers != 2 && controllers != 0 && !s.allow_nonstandard) {
    out.push_back({0, "gs", "controller count != 2; set allow_nonstandard = true to override"});
  }
  const long long nodes = static_cast<long long>(s.polar.plane_count) * s.polar.sats_per_plane +
                          static_cast<long long>(s.inclined.plane_count) * s.inclined.sats_per_plane +
                          static_cast<long long>(gs_count);
  if (nodes > 4096) out.push_back({0, "constellation", "more than 4096 nodes"});

  for (const auto& msg : s.green.violations()) {
    out.push_back({0, msg.substr(0, msg.find(' ')), msg.substr(msg.find(' ') + 1)});
  }

  const auto& c = s.cost;
  const std::vector<std::pair<const char*, double>> positive = {
      {"cost.c_lookup_v4", c.c_lookup_v4},       {"cost.c_lookup_v6", c.c_lookup_v6},
      {"cost.c_mpls_swap", c.c_mpls_swap},       {"cost.c_mpls_push", c.c_mpls_push},
      {"cost.c_srv6_end", c.c_srv6_end},         {"cost.c_srv6_transit", c.c_srv6_transit},
      {"cost.c_encap", c.c_encap},               {"cost.c_spf_per_unit", c.c_spf_per_unit},
      {"cost.window_s", c.window_s},             {"cost.capacity_units_per_s", c.capacity_units_per_s},
      {"cost.ground_capacity_units_per_s", c.ground_capacity_units_per_s},
      {"duration_s", s.duration_s},              {"refresh_s", s.refresh_s},
      {"queue_ms", s.queue_ms},                  {"link_capacity_bps", s.link_capacity_bps},
      {"packet_timeout_s", s.packet_timeout_s}};
  for (const auto& [key, v] : positive) {
    if (!(v > 0.0)) out.push_back({0, key, "must be > 0"});
  }
  if (!(c.c_base_units_per_s >= 0.0 && c.c_base_units_per_s < c.capacity_units_per_s)) {
    out.push_back({0, "cost.c_base_units_per_s", "must be in [0, capacity_units_per_s)"});
  }
  if (s.loss_probe_s < 0.0) out.push_back({0, "loss_probe_s", "must be >= 0"});
  if (s.refresh_s > 0.0 && s.packet_timeout_s >= s.refresh_s) {
    out.push_back({0, "packet_timeout_s", "must be shorter than refresh_s"});
  }
  if (s.payload_bytes <= 0) out.push_back({0, "payload_bytes", "must be > 0"});
  if (s.auto_flows < 0) out.push_back({0, "traffic.auto_flows", "must be >= 0"});
  for (const auto& f : s.flows) {
    if (!names.count(f.src)) out.push_back({0, "traffic.flow", "unknown ground station '" + f.src + "'"});
    if (!names.count(f.dst)) out.push_back({0, "traffic.flow", "unknown ground station '" + f.dst + "'"});
    if (f.src == f.dst) out.push_back({0, "traffic.flow", "source equals destination '" + f.src + "'"});
  }
  return out;
}

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  std::vector<ScenarioIssue> issues;
  std::map<std::string, int> key_line;
  std::vector<GroundStation> stations;
  bool custom_stations = false;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      issues.push_back({line_no, line, "expected 'key = value'"});
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      issues.push_back({line_no, "(empty)", "missing key"});
      continue;
    }

    if (key.rfind("gs.", 0) == 0) {
      custom_stations = true;
      const auto parts = split_commas(value);
      GroundStation gs;
      gs.name = key.substr(3);
      const auto lat = parts.size() >= 2 ? to_double(parts[0]) : std::nullopt;
      const auto lon = parts.size() >= 2 ? to_double(parts[1]) : std::nullopt;
      if (!lat || !lon || parts.size() > 3 || (parts.size() == 3 && parts[2] != "controller")) {
        issues.push_back({line_no, key, "expected 'lat, lon' or 'lat, lon, controller'"});
        continue;
      }
      gs.latitude_deg = *lat;
      gs.longitude_deg = *lon;
      gs.is_controller_site = parts.size() == 3;
      stations.push_back(gs);
      key_line[key] = line_no;
      continue;
    }
    if (key == "traffic.flow") {
      const auto parts = split_commas(value);
      if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
        issues.push_back({line_no, key, "expected 'src, dst'"});
        continue;
      }
      s.flows.push_back({parts[0], parts[1]});
      key_line[key] = line_no;
      continue;
    }
    const Field* f = find_field(key);
    if (!f) {
      issues.push_back({line_no, key, "unknown key"});
      continue;
    }
    if (key_line.count(key)) {
      issues.push_back({line_no, key, "duplicate key (first set on line " + std::to_string(key_line[key]) + ")"});
      continue;
    }
    if (auto err = f->set(s, value)) {
      issues.push_back({line_no, key, *err + ", got '" + value + "'"});
      continue;
    }
    key_line[key] = line_no;
  }
  if (custom_stations) s.ground_stations = stations;

  for (auto issue : validate(s)) {
    for (const auto& [key, ln] : key_line) {
      if (key == issue.field || key.rfind(issue.field + ".", 0) == 0) {
        issue.line = ln;
        break;
      }
    }
    issues.push_back(issue);
  }
  if (!issues.empty()) throw ScenarioInvalid(std::move(issues));
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) { return parse_scenario(read_file(path)); }

std::string echo_scenario(const Scenario& s) {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + " = " + f.get(s) + "\n";
  for (const auto& gs : s.ground_stations) {
    out += "gs." + gs.name + " = " + fmt(gs.latitude_deg) + ", " + fmt(gs.longitude_deg) +
           (gs.is_controller_site ? ", controller" : "") + "\n";
  }
  for (const auto& f : s.flows) out += "traffic.flow = " + f.src + ", " + f.dst + "\n";
  return out;
}

}  // namespace leosim
