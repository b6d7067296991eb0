#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "leosim/engine.hpp"

namespace leosim {

struct GridCell {
  ProtocolKind protocol = ProtocolKind::IPv4;
  double load = 0.0;
  std::uint64_t seed = 0;
};

/// `START:STOP:STEP`, inclusive of STOP up to rounding. Throws std::invalid_argument.
std::vector<double> parse_load_range(const std::string& spec);
/// Comma-separated protocol names.
std::vector<ProtocolKind> parse_protocol_list(const std::string& spec);

/// Sorted by (protocol, load, seed); seeds are 1..seed_count.
std::vector<GridCell> make_grid(const std::vector<ProtocolKind>& protocols,
                                const std::vector<double>& loads, std::size_t seed_count);

struct GridOptions {
  int jobs = 0;  // 0 = all available threads
  /// Each finished cell is stored here as a summary file; with `resume`, cells already
  /// present are read back instead of rerun.
  std::optional<std::filesystem::path> cell_dir;
  bool resume = false;
};

/// One summary per cell, in cell order. Cells run concurrently.
std::vector<RunSummary> run_grid(const Scenario& scenario, const std::vector<GridCell>& cells,
                                 const GridOptions& options = {});
/// Same cells, one after another.
std::vector<RunSummary> run_grid_serial(const Scenario& scenario, const std::vector<GridCell>& cells);

std::string cell_file_name(const GridCell& cell);
std::string format_load(double load);

/// protocol,load,seed,pdr_pct,peak_cpu_pct,avg_cpu_pct,avg_mem_bytes,overhead_pct
std::string grid_csv(std::vector<RunSummary> rows);

struct GridRow {
  ProtocolKind protocol = ProtocolKind::IPv4;
  double load = 0.0;
  std::uint64_t seed = 0;
  double pdr_pct = 0.0;
  double peak_cpu_pct = 0.0;
  double avg_cpu_pct = 0.0;
  double avg_mem_bytes = 0.0;
  double overhead_pct = 0.0;
};

std::vector<GridRow> parse_grid_csv(const std::string& text);

}  // namespace leosim
