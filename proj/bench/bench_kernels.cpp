#include <benchmark/benchmark.h>

#include <omp.h>

#include <random>

#include "predvar/metrics.hpp"

using namespace predvar;

namespace {

Matrix noise(Eigen::Index rows, Eigen::Index cols) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n(rng);
  return m;
}

void moments(benchmark::State& state, Execution exec) {
  const StackedData st(noise(state.range(0), 6), 2);
  for (auto _ : state) {
    LaggedMoments m(st, exec);
    benchmark::DoNotOptimize(m.all().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MomentsSerial(benchmark::State& state) { moments(state, Execution::Serial); }
void BM_MomentsParallel(benchmark::State& state) { moments(state, Execution::Parallel); }

BENCHMARK(BM_MomentsSerial)->RangeMultiplier(10)->Range(1000, 1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MomentsParallel)->RangeMultiplier(10)->Range(1000, 1000000)->Unit(benchmark::kMicrosecond);

SweepSpec small_sweep() {
  SweepSpec spec;
  spec.sample_counts = {2000, 4000};
  spec.algorithms = {Algorithm::OneShot, Algorithm::PredVar};
  spec.seeds = {0, 1, 2, 3};
  return spec;
}

SyntheticDataset cached_case(std::uint64_t seed) {
  static const PredVarParams truth = random_params(6, 3, 2, 0, 0.95, 0.7);
  return simulated_case(truth, 4000, 4000, 0, seed);
}

void BM_SweepSerial(benchmark::State& state) {
  const SweepSpec spec = small_sweep();
  for (auto _ : state) benchmark::DoNotOptimize(consistency_sweep_serial(cached_case, spec).size());
}

void BM_SweepParallel(benchmark::State& state) {
  const SweepSpec spec = small_sweep();
  const auto jobs = static_cast<std::size_t>(omp_get_max_threads());
  for (auto _ : state) benchmark::DoNotOptimize(consistency_sweep(cached_case, spec, jobs).size());
  state.counters["jobs"] = static_cast<double>(jobs);
}

BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
