// Microbenchmarks for the operations that dominate solver wall time: the
// two prox operators, the spectral norm, the knapsack projection, and a
// full small solve with and without certification.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>

#include "laros/certificate.hpp"
#include "laros/dual_ppa.hpp"
#include "laros/linalg.hpp"
#include "laros/problem.hpp"

namespace {

using laros::Matrix;
using laros::Vector;

Matrix uniform_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

// Unit-spectral-norm planted block instance, the shape the solver actually
// runs on after scaling.
Matrix planted(int rows, int cols, int h, int w) {
  Matrix A = Matrix::Zero(rows, cols);
  A.block(1, 1, h, w).setConstant(1.0);
  return A / laros::spectral_norm(A);
}

void BM_prox_nuclear(benchmark::State& state) {
  const Matrix m = uniform_matrix(static_cast<int>(state.range(0)),
                                  static_cast<int>(state.range(1)), 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(laros::prox_nuclear(m, 0.5));
  }
}
BENCHMARK(BM_prox_nuclear)
    ->Args({40, 30})
    ->Args({200, 30})
    ->Args({4000, 30})
    ->Unit(benchmark::kMicrosecond);

void BM_prox_l1(benchmark::State& state) {
  const Matrix m = uniform_matrix(static_cast<int>(state.range(0)),
                                  static_cast<int>(state.range(1)), 12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(laros::prox_l1(m, 0.5));
  }
}
BENCHMARK(BM_prox_l1)->Args({200, 30})->Args({4000, 30})->Unit(
    benchmark::kMicrosecond);

void BM_spectral_norm(benchmark::State& state) {
  const Matrix m = uniform_matrix(static_cast<int>(state.range(0)),
                                  static_cast<int>(state.range(1)), 13);
  for (auto _ : state) {
    benchmark::DoNotOptimize(laros::spectral_norm(m));
  }
}
BENCHMARK(BM_spectral_norm)
    ->Args({100, 80})
    ->Args({4000, 30})
    ->Unit(benchmark::kMicrosecond);

void BM_knapsack_project(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector w_bar(n), u(n), lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    w_bar(i) = 3.0 * dist(rng);
    u(i) = dist(rng);
    lo(i) = -1.0 - 0.5 * std::abs(dist(rng));
    hi(i) = 1.0 + 0.5 * std::abs(dist(rng));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(laros::knapsack_project(w_bar, u, lo, hi));
  }
}
BENCHMARK(BM_knapsack_project)->Arg(8)->Arg(64)->Arg(512)->Unit(
    benchmark::kMicrosecond);

void BM_dual_solve(benchmark::State& state) {
  const laros::ProblemSpec spec(planted(12, 10, 4, 3), 0.5);
  laros::DualConfig cfg;
  cfg.eps = 1e-8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(laros::dual_solve(spec, cfg));
  }
}
BENCHMARK(BM_dual_solve)->Unit(benchmark::kMillisecond);

void BM_dual_solve_certified(benchmark::State& state) {
  const laros::ProblemSpec spec(planted(12, 10, 4, 3), 0.5);
  laros::DualConfig cfg;
  cfg.eps = 1e-8;
  const laros::Certifier certifier = laros::make_certifier(spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(laros::dual_solve(spec, cfg, certifier));
  }
}
BENCHMARK(BM_dual_solve_certified)->Unit(benchmark::kMillisecond);

void BM_certify(benchmark::State& state) {
  const laros::ProblemSpec spec(planted(12, 10, 4, 3), 0.5);
  laros::DualConfig cfg;
  cfg.eps = 1e-8;
  const laros::SolveResult res = laros::dual_solve(spec, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(laros::certify(spec, res.X));
  }
}
BENCHMARK(BM_certify)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
