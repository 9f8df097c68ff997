#include "cusal/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using cusal::Index;
using cusal::Matrix;
using cusal::Vector;

struct Problem {
  Matrix Y, M, X, E, G;
  Vector s, w;
};

Problem make_problem(Index L, Index R, Index T) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto fill = [&](Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = u(rng);
    return m;
  };
  Problem p;
  p.Y = fill(L, T);
  p.M = fill(L, R);
  p.X = fill(R, T);
  p.w = fill(L, 1).col(0);
  cusal::kernels::serial::residuals(p.Y, p.M, p.X, p.E);
  return p;
}

void args(benchmark::internal::Benchmark* b) {
  b->Args({244, 3, 2500})->Args({244, 20, 225})->Args({244, 62, 2500});
  b->ArgNames({"L", "R", "T"});
}

template <bool Parallel>
void BM_Residuals(benchmark::State& state) {
  Problem p = make_problem(state.range(0), state.range(1), state.range(2));
  for (auto _ : state) {
    if constexpr (Parallel)
      cusal::kernels::residuals(p.Y, p.M, p.X, p.E);
    else
      cusal::kernels::serial::residuals(p.Y, p.M, p.X, p.E);
    benchmark::DoNotOptimize(p.E.data());
  }
}

template <bool Parallel>
void BM_BandSquareSums(benchmark::State& state) {
  Problem p = make_problem(state.range(0), state.range(1), state.range(2));
  for (auto _ : state) {
    if constexpr (Parallel)
      cusal::kernels::band_square_sums(p.E, p.s);
    else
      cusal::kernels::serial::band_square_sums(p.E, p.s);
    benchmark::DoNotOptimize(p.s.data());
  }
}

template <bool Parallel>
void BM_WeightedGradient(benchmark::State& state) {
  Problem p = make_problem(state.range(0), state.range(1), state.range(2));
  for (auto _ : state) {
    if constexpr (Parallel)
      cusal::kernels::weighted_gradient(p.M, p.E, p.w, -1.0, p.G);
    else
      cusal::kernels::serial::weighted_gradient(p.M, p.E, p.w, -1.0, p.G);
    benchmark::DoNotOptimize(p.G.data());
  }
}

}  // namespace

BENCHMARK(BM_Residuals<false>)->Name("residuals/serial")->Apply(args);
BENCHMARK(BM_Residuals<true>)->Name("residuals/openmp")->Apply(args);
BENCHMARK(BM_BandSquareSums<false>)->Name("band_square_sums/serial")->Apply(args);
BENCHMARK(BM_BandSquareSums<true>)->Name("band_square_sums/openmp")->Apply(args);
BENCHMARK(BM_WeightedGradient<false>)->Name("weighted_gradient/serial")->Apply(args);
BENCHMARK(BM_WeightedGradient<true>)->Name("weighted_gradient/openmp")->Apply(args);

BENCHMARK_MAIN();
