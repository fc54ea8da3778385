#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "kns/spectral.hpp"

namespace kns::test {

/// Grid samples with independent N(0,1) entries.
inline std::vector<double> random_samples(const TorusGrid& grid, int components, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> v(grid.size() * static_cast<std::size_t>(components));
  for (auto& x : v) x = nd(rng);
  return v;
}

inline SpectralField random_field(const TorusGrid& grid, int components, std::uint64_t seed) {
  return forward_transform(grid, random_samples(grid, components, seed), components);
}

/// Random dealiased divergence-free field.
inline SpectralField random_divfree(const TorusGrid& grid, std::uint64_t seed) {
  SpectralField f = helmholtz_project(dealias(random_field(grid, grid.dim(), seed)));
  f.set_divfree(true);
  return f;
}

inline double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double max_abs(const SpectralField& a) {
  double m = 0.0;
  for (const auto& z : a.data()) m = std::max(m, std::abs(z));
  return m;
}

}  // namespace kns::test
