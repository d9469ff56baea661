#include <benchmark/benchmark.h>

#include "mdiqp/criteria.hpp"
#include "mdiqp/gf2.hpp"
#include "mdiqp/grid.hpp"
#include "mdiqp/noise.hpp"
#include "mdiqp/reservoir.hpp"
#include "mdiqp/rng.hpp"
#include "mdiqp/simcore.hpp"
#include "mdiqp/staircase.hpp"

using namespace mdiqp;

static void BM_RankGf2(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto rng = make_rng(1);
  const auto m = BitMatrix::random(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(rank_gf2(m));
}
BENCHMARK(BM_RankGf2)->Arg(64)->Arg(256)->Arg(1024);

static void BM_CxSynthesis(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = build_staircase_all_to_all(n, {2, 1, 1}, 3).system_map;
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_cx_circuit(m));
}
BENCHMARK(BM_CxSynthesis)->Arg(64)->Arg(256);

static void BM_GridStaircase(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  const auto layout = system_grid_layout(w, w);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(build_staircase(layout, {2, 1, 1}, ++seed));
}
BENCHMARK(BM_GridStaircase)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

static void BM_StateVectorLayer(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto s = StateVector::plus(n);
  for (auto _ : state) {
    for (std::size_t q = 0; q + 1 < n; ++q) s.cx(q, q + 1);
    for (std::size_t q = 0; q < n; ++q) s.rz(q, 0.3);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n - 1));
}
BENCHMARK(BM_StateVectorLayer)->Arg(12)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_RandomnessCriterion(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = criterion_instance(Generator::measurement_driven, Connectivity::all_to_all, n, 2, 5);
  for (auto _ : state) benchmark::DoNotOptimize(criterion1(a, {}, 5));
}
BENCHMARK(BM_RandomnessCriterion)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_NoisyDistribution(benchmark::State& state) {
  const auto fs = build_staircase(system_grid_layout(3, 2), {2, 1, 1}, 7);
  const auto c = measurement_driven_circuit({fs}, {std::vector<double>(6, 0.3), std::vector<double>(6, 0.7)});
  NoiseModel nm;
  nm.p2 = 1e-2;
  for (auto _ : state) benchmark::DoNotOptimize(noisy_distribution(c, nm, 100, 9));
}
BENCHMARK(BM_NoisyDistribution)->Unit(benchmark::kMillisecond);

static void BM_SshLowest(benchmark::State& state) {
  const auto s = phase_parameters(Phase::topological, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ssh_lowest(s, 20));
}
BENCHMARK(BM_SshLowest)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

static void BM_FloquetStep(benchmark::State& state) {
  const auto r = measurement_reservoir(4, 2, 2, true, 0.05, 11);
  auto s = StateVector::plus(8);
  for (auto _ : state) floquet_step(r, s);
}
BENCHMARK(BM_FloquetStep);
BENCHMARK_MAIN();
