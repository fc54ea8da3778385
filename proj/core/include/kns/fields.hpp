#pragma once

#include <cstdint>

#include "kns/noise.hpp"
#include "kns/spectral_field.hpp"

namespace kns {

/// Taylor-Green vortex: (sin x cos y, -cos x sin y) in 2-D, with a cos z
/// factor and zero third component in 3-D.
SpectralField taylor_green(const TorusGrid& grid, double amplitude = 1.0);

/// amplitude * polarization * cos(k.x), projected onto divergence-free fields.
SpectralField single_mode(const TorusGrid& grid, const Wavevector& k, const Vec3& polarization,
                          double amplitude = 1.0);

/// Divergence-free field with Gaussian coefficients on 0 < |k| <= kmax,
/// weighted by |k|^{-decay}, rescaled to the requested L^2 norm. Coefficients
/// are hashed from (seed, k) as in rough_field, so the field does not depend
/// on the grid once the band fits.
SpectralField random_band_limited(const TorusGrid& grid, double kmax, double l2_target, std::uint64_t seed,
                                  double decay = 0.0);

/// Rough divergence-free data with coefficients amplitude * |k|^{-decay} *
/// (Gaussian drawn from a hash of (seed, k)) on every dealiased mode. The
/// coefficient of a given k does not depend on the grid, so refined grids
/// extend coarse ones.
SpectralField rough_field(const TorusGrid& grid, double decay, double amplitude, std::uint64_t seed);

}  // namespace kns
