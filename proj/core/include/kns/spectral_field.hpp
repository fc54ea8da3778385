#pragma once

#include <complex>
#include <span>
#include <vector>

#include "kns/grid.hpp"

namespace kns {

using Complex = std::complex<double>;

/// A real-valued field with `components` components on a torus grid, stored
/// as Fourier coefficients. Coefficient k of a component is the continuum
/// Fourier coefficient of the trigonometric interpolant of the grid samples,
/// i.e. (1/N) sum_x v(x) exp(-i k.x).
class SpectralField {
 public:
  SpectralField() = default;
  SpectralField(const TorusGrid& grid, int components);

  const TorusGrid& grid() const { return grid_; }
  int components() const { return components_; }
  std::size_t modes() const { return grid_.size(); }

  std::span<Complex> component(int c);
  std::span<const Complex> component(int c) const;
  std::vector<Complex>& data() { return data_; }
  const std::vector<Complex>& data() const { return data_; }

  Complex& at(int c, std::size_t flat) { return data_[static_cast<std::size_t>(c) * modes() + flat]; }
  Complex at(int c, std::size_t flat) const {
    return data_[static_cast<std::size_t>(c) * modes() + flat];
  }

  /// Coefficient of mode k (zero when k is not representable on the grid).
  Complex mode(int c, const Wavevector& k) const;
  /// Sets mode k to `value` and mode -k to conj(value).
  void set_mode(int c, const Wavevector& k, Complex value);

  /// True when the field is known to lie in the range of the Helmholtz projection.
  bool divfree() const { return divfree_; }
  void set_divfree(bool flag) { divfree_ = flag; }

  void set_zero();
  bool is_zero() const;
  bool all_finite() const;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double factor);
  /// this += factor * other
  SpectralField& axpy(double factor, const SpectralField& other);

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

 private:
  void check_compatible(const SpectralField& other) const;

  TorusGrid grid_{};
  int components_ = 0;
  std::vector<Complex> data_;
  bool divfree_ = false;
};

/// Single-component companion of SpectralField used for potentials and pressures.
struct ScalarSpectralField {
  TorusGrid grid{};
  std::vector<Complex> coeffs;

  ScalarSpectralField() = default;
  explicit ScalarSpectralField(const TorusGrid& g) : grid(g), coeffs(g.size()) {}

  Complex mode(const Wavevector& k) const;
  void set_mode(const Wavevector& k, Complex value);
  bool mean_zero(double tol = 0.0) const { return std::abs(coeffs[0]) <= tol; }
};

}  // namespace kns
