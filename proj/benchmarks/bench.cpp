#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "kns/fields.hpp"
#include "kns/noise.hpp"
#include "kns/solver.hpp"
#include "kns/spectral.hpp"

namespace {

std::vector<double> samples(const kns::TorusGrid& g, int comps) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::vector<double> v(g.size() * static_cast<std::size_t>(comps));
  for (auto& x : v) x = nd(rng);
  return v;
}

kns::TorusGrid grid_for(const benchmark::State& st) {
  return kns::TorusGrid(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
}

void BM_ForwardTransform(benchmark::State& st) {
  const auto g = grid_for(st);
  const auto v = samples(g, g.dim());
  for (auto _ : st) benchmark::DoNotOptimize(kns::forward_transform(g, v, g.dim()));
}
BENCHMARK(BM_ForwardTransform)->Args({2, 64})->Args({2, 256})->Args({3, 32});

void BM_HelmholtzProject(benchmark::State& st) {
  const auto g = grid_for(st);
  const auto f = kns::forward_transform(g, samples(g, g.dim()), g.dim());
  for (auto _ : st) benchmark::DoNotOptimize(kns::helmholtz_project(f));
}
BENCHMARK(BM_HelmholtzProject)->Args({2, 64})->Args({2, 256})->Args({3, 32});

void BM_ConvectiveTerm(benchmark::State& st) {
  kns::SolverConfig c;
  c.grid = grid_for(st);
  c.a = kns::ViscosityTensor::isotropic(c.grid.dim(), 1.0);
  c.noise = kns::NoiseFamily::none(c.grid.dim());
  const kns::Solver s(c);
  const auto u = kns::taylor_green(c.grid);
  for (auto _ : st) benchmark::DoNotOptimize(s.convective_term(u));
}
BENCHMARK(BM_ConvectiveTerm)->Args({2, 64})->Args({3, 32});

void BM_StepKraichnan(benchmark::State& st) {
  kns::SolverConfig c;
  c.grid = grid_for(st);
  const int d = c.grid.dim();
  c.a = kns::ViscosityTensor::isotropic(d, 0.5);
  c.noise = kns::synthesize_kraichnan(c.grid, 8, 1.0, 0.3, 5);
  c.nonlinearity.g_kind = kns::GKind::linear;
  c.nonlinearity.gamma = {0.3, 0.2};
  const kns::Solver s(c);
  const auto u = kns::random_band_limited(c.grid, 4.0, 1.0, 3);
  const std::vector<double> inc(8, 0.01);
  for (auto _ : st) benchmark::DoNotOptimize(s.step(u, inc));
}
BENCHMARK(BM_StepKraichnan)->Args({2, 64})->Args({3, 32});

}  // namespace

BENCHMARK_MAIN();
