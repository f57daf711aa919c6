#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "krrlab/krr.hpp"
#include "krrlab/quadrature.hpp"
#include "krrlab/random.hpp"

namespace {

using namespace krrlab;

constexpr double kC = 0.005;

Design design_for(std::size_t n) { return sample_design(n, 0.05, derive_seed(1, "bench", n)); }

std::vector<double> labels_for(const Design& d) {
  std::vector<double> y(d.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sin(2.0 * 3.141592653589793 * d.points()[i]);
  return y;
}

void BM_Solve(benchmark::State& state, SolverRoute route) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto kernel = KernelSpec::min_kernel();
  const auto design = design_for(n);
  const auto y = labels_for(design);
  const double lambda = kC / std::sqrt(static_cast<double>(n));
  for (auto _ : state) {
    auto sol = solve(kernel, design, y, lambda, route);
    benchmark::DoNotOptimize(sol.coefficients().data());
  }
  state.SetComplexityN(state.range(0));
}

void BM_VarianceIntegral(benchmark::State& state, SolverRoute route) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto kernel = KernelSpec::min_kernel();
  const double lambda = kC / std::sqrt(static_cast<double>(n));
  const RidgeSystem system(kernel, design_for(n), lambda, route);
  const auto rule = QuadratureRule::simpson(default_node_count(n));
  for (auto _ : state) benchmark::DoNotOptimize(system.variance_integral(rule));
  state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Solve, structured, SolverRoute::structured)->RangeMultiplier(4)->Range(64, 4096)->Complexity();
BENCHMARK_CAPTURE(BM_Solve, dense, SolverRoute::dense)->RangeMultiplier(4)->Range(64, 1024)->Complexity();
BENCHMARK_CAPTURE(BM_VarianceIntegral, structured, SolverRoute::structured)
    ->RangeMultiplier(4)
    ->Range(64, 4096)
    ->Complexity();
BENCHMARK_CAPTURE(BM_VarianceIntegral, dense, SolverRoute::dense)->RangeMultiplier(4)->Range(64, 256)->Complexity();

BENCHMARK_MAIN();
