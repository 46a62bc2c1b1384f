#include <benchmark/benchmark.h>

#include <random>

#include "dsa/geometry.hpp"
#include "dsa/numerics.hpp"

using namespace dsa;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

void BM_JacobiSvd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix a = random_matrix(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(jacobi_svd(a));
}
BENCHMARK(BM_JacobiSvd)->Arg(2)->Arg(8)->Arg(32);

void BM_EntropyProx(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ProxSetup s = make_prox_setup(FeasibleSet::simplex(n, 1.0), Dgf::kEntropy);
  DenseVector g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<double>(i % 7) - 3.0;
  for (auto _ : state) benchmark::DoNotOptimize(prox_map_solve(s, s.prox_center, g, 2.0));
}
BENCHMARK(BM_EntropyProx)->Arg(4)->Arg(64)->Arg(1024);

void BM_SecondOrderProjection(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Cone k = Cone::second_order(n);
  DenseVector y(n, 1.0);
  y.back() = -0.5;
  for (auto _ : state) benchmark::DoNotOptimize(project_dual_cone(k, y));
}
BENCHMARK(BM_SecondOrderProjection)->Arg(3)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
