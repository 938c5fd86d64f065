#include "sbl/cg.hpp"
#include "sbl/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace sbl;
using linop::Index;
using linop::Matrix;
using linop::Vector;

void BM_CgFixedSteps(benchmark::State& state) {
  const Index D = state.range(0);
  const Index Q = state.range(1);
  Rng rng(3);
  const auto op = linop::build_undersampled_dct(D, D / 3, rng);
  const Vector alpha = Vector::Ones(D);
  const linop::SystemMatrix system(op, 1e4, alpha);
  const auto pre = cg::make_preconditioner(cg::ThetaPolicy::AllOnes, op, 1e4, alpha);
  const Matrix B = Matrix::Random(D, Q);
  cg::CgConfig cfg;
  cfg.max_steps = 20;
  cfg.tolerance = 1e-300;
  for (auto _ : state) {
    auto rep = cg::solve(system, B, pre, cfg);
    benchmark::DoNotOptimize(rep.solution.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.max_steps);
}

BENCHMARK(BM_CgFixedSteps)->ArgsProduct({{1024, 4096, 16384}, {1, 21}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
