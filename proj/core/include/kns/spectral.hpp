#pragma once

#include <span>
#include <vector>

#include "kns/spectral_field.hpp"

namespace kns {

// Transforms. Grid samples are component-major, each component row-major
// with axis 0 slowest.
SpectralField forward_transform(const TorusGrid& grid, std::span<const double> values, int components);
std::vector<double> inverse_transform(const SpectralField& field);
ScalarSpectralField forward_transform(const TorusGrid& grid, std::span<const double> values);
std::vector<double> inverse_transform(const ScalarSpectralField& field);
/// Transform of a single real component into a caller-owned coefficient span.
void forward_component(const TorusGrid& grid, std::span<const double> values, std::span<Complex> out);

/// Leray projection onto divergence-free fields; the zero mode is untouched.
SpectralField helmholtz_project(const SpectralField& f);
/// Mean-zero psi with lap psi = div f, so that f - grad psi = P f.
ScalarSpectralField q_solve(const SpectralField& f);
SpectralField gradient(const ScalarSpectralField& psi);
ScalarSpectralField divergence(const SpectralField& f);

/// d/dx_axis with the Nyquist line zeroed.
SpectralField spectral_derivative(const SpectralField& f, int axis);
ScalarSpectralField spectral_derivative(const ScalarSpectralField& f, int axis);

SpectralField dealias(SpectralField f);
void dealias_in_place(SpectralField& f);
ScalarSpectralField dealias(ScalarSpectralField f);

/// L^2 inner product over the torus (measure (2*pi)^d), summed over components.
double inner_product(const SpectralField& a, const SpectralField& b);
double l2_norm(const SpectralField& f);
/// Plain Euclidean norm of the coefficient vector.
double coefficient_norm(const SpectralField& f);
/// ||grad f||_{L^2}^2.
double grad_norm_squared(const SpectralField& f);
/// Trapezoid L^2 norm of grid samples (any number of stacked components).
double grid_l2_norm(const TorusGrid& grid, std::span<const double> values);

/// max_k |k . f(k)| / |k| relative to max_k |f(k)|.
double max_divergence_defect(const SpectralField& f);
/// max |f(k) - conj f(-k)| relative to the largest coefficient.
double hermitian_defect(const SpectralField& f);
void enforce_hermitian(SpectralField& f);

/// Zero-padded copy on a finer grid (Nyquist modes of the source dropped).
SpectralField refine(const SpectralField& f, int n_fine);

}  // namespace kns
