#include "sbl/em_baseline.hpp"
#include "sbl/simulate.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace sbl;
namespace sim = sbl::simulate;

sim::ExperimentSpec dct(linop::Index D) {
  sim::ExperimentSpec s;
  s.dictionary.kind = linop::Kind::UndersampledDct;
  s.dictionary.size = D;
  s.dictionary.rows = D / 3;
  s.sparsity.factor = 0.12;
  s.spikes.kind = sim::SpikeKind::Normal;
  s.seed = 5;
  s.cofem.iterations = 10;
  return s;
}

void BM_Cofem(benchmark::State& state) {
  const auto inst = sim::make_instance(dct(state.range(0)));
  cofem::CofemConfig cfg;
  cfg.iterations = 10;
  for (auto _ : state) {
    auto res = cofem::run_cofem(inst.problem, cfg);
    benchmark::DoNotOptimize(res.estimate.mu.data());
  }
}

void BM_Em(benchmark::State& state) {
  const auto inst = sim::make_instance(dct(state.range(0)));
  em::EmConfig cfg;
  cfg.iterations = 10;
  cfg.route = state.range(1) ? em::Route::Woodbury : em::Route::Dense;
  for (auto _ : state) {
    auto res = em::run_em(inst.problem, cfg);
    benchmark::DoNotOptimize(res.posterior.mu.data());
  }
}

BENCHMARK(BM_Cofem)->RangeMultiplier(4)->Range(256, 16384)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Em)->ArgsProduct({{256, 1024}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
