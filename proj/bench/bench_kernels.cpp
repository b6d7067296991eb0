// Parallel kernels against their serial references.
#include <benchmark/benchmark.h>

#include "leosim/sweep.hpp"

using namespace leosim;

namespace {

const Constellation& constellation() {
  static const Constellation c = Scenario{}.constellation();
  return c;
}

const RoutingGraph& unit_graph() {
  static const RoutingGraph g = [] {
    TopologyParams tp;
    tp.loss_probe_s = 0.0;
    const auto snap = build_snapshot(constellation(), 0.0, initial_resources(constellation().node_count()), tp);
    return RoutingGraph::unit(snap);
  }();
  return g;
}

void BM_AccessIntervals(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_access_intervals(constellation(), 600.0, 10.0));
  }
}
BENCHMARK(BM_AccessIntervals)->Unit(benchmark::kMillisecond);

void BM_AccessIntervalsSerial(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_access_intervals_serial(constellation(), 600.0, 10.0));
  }
}
BENCHMARK(BM_AccessIntervalsSerial)->Unit(benchmark::kMillisecond);

void BM_AllPairs(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(all_pairs_next_hops(unit_graph()));
}
BENCHMARK(BM_AllPairs)->Unit(benchmark::kMillisecond);

void BM_AllPairsSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(all_pairs_next_hops_serial(unit_graph()));
}
BENCHMARK(BM_AllPairsSerial)->Unit(benchmark::kMillisecond);

std::vector<GridCell> small_grid() {
  return make_grid({ProtocolKind::IPv4, ProtocolKind::SRv6, ProtocolKind::SRv6Green}, {0.2, 0.6}, 1);
}

Scenario short_run() {
  Scenario sc;
  sc.duration_s = 60.0;
  return sc;
}

void BM_Grid(benchmark::State& state) {
  const auto sc = short_run();
  const auto cells = small_grid();
  for (auto _ : state) benchmark::DoNotOptimize(run_grid(sc, cells));
}
BENCHMARK(BM_Grid)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_GridSerial(benchmark::State& state) {
  const auto sc = short_run();
  const auto cells = small_grid();
  for (auto _ : state) benchmark::DoNotOptimize(run_grid_serial(sc, cells));
}
BENCHMARK(BM_GridSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
