#include "kns/fields.hpp"

#include <cmath>
#include <numbers>

#include "detail.hpp"
#include "kns/error.hpp"
#include "kns/spectral.hpp"

namespace kns {

namespace {

bool canonical(const Wavevector& k) {
  const int lead = k[0] != 0 ? k[0] : (k[1] != 0 ? k[1] : k[2]);
  return lead > 0;
}

// Complex Gaussian with E|z|^2 = 1 drawn from a hash of (seed, k, component),
// Box-Muller on two hashed uniforms.
Complex hashed_gaussian(std::uint64_t seed, const Wavevector& k, int c) {
  const auto salt = static_cast<std::uint64_t>(c);
  const double u1 = detail::unit_from_hash(detail::hash_mode(seed, k[0], k[1], k[2], 2 * salt + 1));
  const double u2 = detail::unit_from_hash(detail::hash_mode(seed, k[0], k[1], k[2], 2 * salt + 2));
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  return std::polar(r, 2.0 * std::numbers::pi * u2) / std::sqrt(2.0);
}

}  // namespace

SpectralField taylor_green(const TorusGrid& grid, double amplitude) {
  const int d = grid.dim();
  const std::size_t size = grid.size();
  std::vector<double> v(size * static_cast<std::size_t>(d), 0.0);
  for (std::size_t i = 0; i < size; ++i) {
    const double x = grid.coordinate(i, 0);
    const double y = grid.coordinate(i, 1);
    const double zf = d == 3 ? std::cos(grid.coordinate(i, 2)) : 1.0;
    v[i] = amplitude * std::sin(x) * std::cos(y) * zf;
    v[size + i] = -amplitude * std::cos(x) * std::sin(y) * zf;
  }
  SpectralField f = forward_transform(grid, v, d);
  enforce_hermitian(f);
  f.set_divfree(true);
  return f;
}

SpectralField single_mode(const TorusGrid& grid, const Wavevector& k, const Vec3& polarization,
                          double amplitude) {
  SpectralField f(grid, grid.dim());
  const bool zero = k == Wavevector{0, 0, 0};
  for (int j = 0; j < grid.dim(); ++j) {
    f.set_mode(j, k, zero ? amplitude * polarization[j] : 0.5 * amplitude * polarization[j]);
  }
  return helmholtz_project(f);
}

SpectralField random_band_limited(const TorusGrid& grid, double kmax, double l2_target, std::uint64_t seed,
                                  double decay) {
  const auto& tab = wavenumbers(grid);
  SpectralField f(grid, grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Wavevector& k = tab.k[i];
    if (!tab.kept[i] || !canonical(k) || tab.k2[i] > kmax * kmax) continue;
    const double w = std::pow(tab.k2[i], -0.5 * decay);
    for (int c = 0; c < grid.dim(); ++c) f.set_mode(c, k, w * hashed_gaussian(seed, k, c));
  }
  f = helmholtz_project(f);
  const double norm = l2_norm(f);
  if (norm == 0.0) throw ConfigurationError("random_band_limited: empty wavenumber band");
  f *= l2_target / norm;
  return f;
}

SpectralField rough_field(const TorusGrid& grid, double decay, double amplitude, std::uint64_t seed) {
  const auto& tab = wavenumbers(grid);
  SpectralField f(grid, grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Wavevector& k = tab.k[i];
    if (!tab.kept[i] || !canonical(k)) continue;
    const double w = amplitude * std::pow(tab.k2[i], -0.5 * decay);
    for (int c = 0; c < grid.dim(); ++c) f.set_mode(c, k, w * hashed_gaussian(seed, k, c));
  }
  return helmholtz_project(f);
}

}  // namespace kns
