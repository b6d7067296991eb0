#include "leosim/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <omp.h>

namespace leosim {

namespace {

double round_load(double v) { return std::round(v * 1e9) / 1e9; }

}  // namespace

std::vector<double> parse_load_range(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      throw std::invalid_argument("loads: '" + tok + "' is not a number");
    }
    parts.push_back(v);
  }
  if (parts.size() == 1) parts = {parts[0], parts[0], 1.0};
  if (parts.size() != 3) throw std::invalid_argument("loads: expected START:STOP:STEP");
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (!(step > 0.0) || stop < start) throw std::invalid_argument("loads: empty or invalid range");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double v = round_load(start + static_cast<double>(k) * step);
    if (!(v > 0.0) || v > 1.0) throw std::invalid_argument("loads: " + format_load(v) + " outside (0, 1]");
    out.push_back(v);
  }
  return out;
}

std::vector<ProtocolKind> parse_protocol_list(const std::string& spec) {
  std::vector<ProtocolKind> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto p = parse_protocol(tok);
    if (!p) throw std::invalid_argument("protocols: unknown protocol '" + tok + "'");
    if (std::find(out.begin(), out.end(), *p) == out.end()) out.push_back(*p);
  }
  if (out.empty()) throw std::invalid_argument("protocols: empty list");
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<GridCell> make_grid(const std::vector<ProtocolKind>& protocols,
                                const std::vector<double>& loads, std::size_t seed_count) {
  std::vector<GridCell> cells;
  for (auto p : protocols) {
    for (double l : loads) {
      for (std::size_t s = 1; s <= seed_count; ++s) cells.push_back({p, l, s});
    }
  }
  std::sort(cells.begin(), cells.end(), [](const GridCell& a, const GridCell& b) {
    return std::tie(a.protocol, a.load, a.seed) < std::tie(b.protocol, b.load, b.seed);
  });
  return cells;
}

std::string format_load(double load) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, round_load(load));
  return std::string(buf, p);
}

std::string cell_file_name(const GridCell& cell) {
  return to_string(cell.protocol) + "_" + format_load(cell.load) + "_" + std::to_string(cell.seed) +
         ".summary.v1";
}

namespace {

RunSummary run_cell(const Scenario& scenario, const GridCell& cell, const GridOptions& options) {
  std::optional<std::filesystem::path> file;
  if (options.cell_dir) file = *options.cell_dir / cell_file_name(cell);
  if (file && options.resume && std::filesystem::exists(*file)) {
    return summary_from_json(read_file(*file));
  }
  auto summary = run(scenario, cell.protocol, cell.load, cell.seed).summary;
  if (file) write_file_atomic(*file, summary_to_json(summary));
  return summary;
}

}  // namespace

std::vector<RunSummary> run_grid(const Scenario& scenario, const std::vector<GridCell>& cells,
                                 const GridOptions& options) {
  std::vector<RunSummary> out(cells.size());
  const int jobs = options.jobs > 0 ? options.jobs : omp_get_max_threads();
  std::exception_ptr error;
  const auto n = static_cast<std::int64_t>(cells.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[i] = run_cell(scenario, cells[i], options);
    } catch (...) {
#pragma omp critical(leosim_grid_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<RunSummary> run_grid_serial(const Scenario& scenario, const std::vector<GridCell>& cells) {
  std::vector<RunSummary> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(run(scenario, c.protocol, c.load, c.seed).summary);
  return out;
}

std::string grid_csv(std::vector<RunSummary> rows) {
  std::sort(rows.begin(), rows.end(), [](const RunSummary& a, const RunSummary& b) {
    return std::tie(a.protocol, a.load_fraction, a.seed) < std::tie(b.protocol, b.load_fraction, b.seed);
  });
  std::string out = "protocol,load,seed,pdr_pct,peak_cpu_pct,avg_cpu_pct,avg_mem_bytes,overhead_pct\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%llu,%.4f,%.4f,%.4f,%.2f,%.4f\n", to_string(r.protocol).c_str(),
                  format_load(r.load_fraction).c_str(), static_cast<unsigned long long>(r.seed), r.pdr_pct,
                  r.peak_cpu_pct, r.avg_cpu_pct, r.avg_mem_bytes, r.overhead_pct);
    out += buf;
  }
  return out;
}

std::vector<GridRow> parse_grid_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::vector<GridRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    char proto[32] = {};
    GridRow r;
    unsigned long long seed = 0;
    if (std::sscanf(line.c_str(), "%31[^,],%lf,%llu,%lf,%lf,%lf,%lf,%lf", proto, &r.load, &seed, &r.pdr_pct,
                    &r.peak_cpu_pct, &r.avg_cpu_pct, &r.avg_mem_bytes, &r.overhead_pct) != 8) {
      throw std::runtime_error("malformed grid row: " + line);
    }
    auto p = parse_protocol(proto);
    if (!p) throw std::runtime_error("unknown protocol in grid row: " + line);
    r.protocol = *p;
    r.seed = seed;
    out.push_back(r);
  }
  return out;
}

}  // namespace leosim
