#include <benchmark/benchmark.h>

#include <wspec/wspec.hpp>

namespace {

using namespace wspec;

void BM_Periodogram(benchmark::State& state) {
  const auto x = simulate(ar3_process(static_cast<std::size_t>(state.range(0)), 1));
  for (auto _ : state) benchmark::DoNotOptimize(periodogram(x));
}
BENCHMARK(BM_Periodogram)->Arg(128)->Arg(1024)->Arg(60000);

void BM_LocalPeriodograms(benchmark::State& state) {
  const auto x = simulate(ls1_process(1024, 1));
  for (auto _ : state) benchmark::DoNotOptimize(local_periodograms(x.values, 32, 32));
}
BENCHMARK(BM_LocalPeriodograms);

void BM_StationaryGram(benchmark::State& state) {
  const auto p = periodogram(simulate(ar3_process(static_cast<std::size_t>(state.range(0)), 1)));
  for (auto _ : state) benchmark::DoNotOptimize(gram_matrix(p.freqs));
}
BENCHMARK(BM_StationaryGram)->Arg(128)->Arg(512);

void BM_FitStationary(benchmark::State& state) {
  const auto p = periodogram(simulate(ar3_process(static_cast<std::size_t>(state.range(0)), 1)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_stationary(p, 1e-4));
}
BENCHMARK(BM_FitStationary)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SelectStationary(benchmark::State& state) {
  const auto p = periodogram(simulate(ar3_process(128, 1)));
  const auto method = static_cast<Method>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(select_stationary(p, method));
  state.SetLabel(std::string(method_name(method)));
}
BENCHMARK(BM_SelectStationary)
    ->Arg(static_cast<int>(Method::kDM))
    ->Arg(static_cast<int>(Method::kDV))
    ->Unit(benchmark::kMillisecond);

void BM_SelectSsanovaDM(benchmark::State& state) {
  const auto grid = local_periodograms(simulate(ls1_process(1024, 1)).values, 32, 32);
  for (auto _ : state) benchmark::DoNotOptimize(select_ssanova(grid, Method::kDM));
}
BENCHMARK(BM_SelectSsanovaDM)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace
BENCHMARK_MAIN();
