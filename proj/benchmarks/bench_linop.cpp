#include "sbl/linop.hpp"
#include "sbl/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace sbl;
using linop::Index;
using linop::Matrix;

linop::LinearOperator make_op(int kind, Index D) {
  Rng rng(1);
  switch (kind) {
    case 0: return linop::build_undersampled_dct(D, D / 3, rng);
    case 1: return linop::build_exp_convolution(D, 0.04);
    default: return linop::build_dense_gaussian(D / 4, D, rng);
  }
}

void apply(benchmark::State& state, linop::Path path) {
  const auto op = make_op(static_cast<int>(state.range(0)), state.range(1));
  const Matrix V = Matrix::Random(op.cols(), 21);
  for (auto _ : state) {
    Matrix out = op.apply(V, path);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ApplyFast(benchmark::State& state) { apply(state, linop::Path::Fast); }
void BM_ApplyNaive(benchmark::State& state) { apply(state, linop::Path::Naive); }

void BM_SystemApply(benchmark::State& state) {
  const auto op = make_op(0, state.range(0));
  const linop::SystemMatrix system(op, 1e4, linop::Vector::Ones(op.cols()));
  const Matrix V = Matrix::Random(op.cols(), 21);
  for (auto _ : state) {
    Matrix out = system.apply(V);
    benchmark::DoNotOptimize(out.data());
  }
}

// range(0): 0 = DCT, 1 = convolution, 2 = dense Gaussian
BENCHMARK(BM_ApplyFast)->ArgsProduct({{0, 1, 2}, {256, 1024, 4096}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ApplyNaive)->ArgsProduct({{0, 1}, {256, 1024}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SystemApply)->RangeMultiplier(4)->Range(256, 16384)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
