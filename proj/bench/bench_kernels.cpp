#include <benchmark/benchmark.h>

#include <random>
#include <span>
#include <vector>

#include "rmaft/simulator.hpp"
#include "rmaft/topology.hpp"
#include "rmaft/xor_kernels.hpp"

using namespace rmaft;

namespace {

std::vector<std::vector<Word>> payloads(std::size_t members, std::size_t cells) {
  std::mt19937_64 rng(42);
  std::vector<std::vector<Word>> out(members, std::vector<Word>(cells));
  for (auto& p : out) {
    for (auto& w : p) w = static_cast<Word>(rng());
  }
  return out;
}

template <bool Parallel>
void BM_XorReduce(benchmark::State& state) {
  const auto data = payloads(8, static_cast<std::size_t>(state.range(0)));
  std::vector<std::span<const Word>> spans(data.begin(), data.end());
  for (auto _ : state) {
    auto r = Parallel ? xor_reduce(spans) : xor_reduce_serial(spans);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetBytesProcessed(state.iterations() * state.range(0) * 8 * 8);
}

template <bool Parallel>
void BM_Pcf(benchmark::State& state) {
  PcfQuery q;
  q.processes = 4000;
  q.groups = 200;
  q.taware_level = 4;
  q.hierarchy = tsubame2_profile();
  for (auto _ : state) benchmark::DoNotOptimize(Parallel ? p_cf(q) : p_cf_serial(q));
}

template <bool Parallel>
void BM_TrialBatch(benchmark::State& state) {
  std::vector<Scenario> batch;
  for (std::uint64_t seed = 1; seed <= 16; ++seed) {
    Scenario s;
    s.processes = 8;
    s.window_cells = 32;
    s.protocol.groups = 2;
    s.random_faults = 1;
    s.seed = seed;
    batch.push_back(s);
  }
  for (auto _ : state) {
    auto r = Parallel ? run_batch(batch) : run_batch_serial(batch);
    benchmark::DoNotOptimize(r.data());
  }
}

}  // namespace

BENCHMARK(BM_XorReduce<false>)->Arg(1 << 12)->Arg(1 << 18);
BENCHMARK(BM_XorReduce<true>)->Arg(1 << 12)->Arg(1 << 18);
BENCHMARK(BM_Pcf<false>);
BENCHMARK(BM_Pcf<true>);
BENCHMARK(BM_TrialBatch<false>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialBatch<true>)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
