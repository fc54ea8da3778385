#include "kns/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kns/error.hpp"
#include "kns/fft.hpp"

namespace kns {

// ---------------------------------------------------------------------------
// SpectralField / ScalarSpectralField

SpectralField::SpectralField(const TorusGrid& grid, int components)
    : grid_(grid), components_(components), data_(grid.size() * static_cast<std::size_t>(components)) {
  if (components < 1) throw ConfigurationError("a field needs at least one component");
}

std::span<Complex> SpectralField::component(int c) {
  return {data_.data() + static_cast<std::size_t>(c) * modes(), modes()};
}

std::span<const Complex> SpectralField::component(int c) const {
  return {data_.data() + static_cast<std::size_t>(c) * modes(), modes()};
}

Complex SpectralField::mode(int c, const Wavevector& k) const {
  const std::size_t idx = grid_.flat_index_of_mode(k);
  return idx < modes() ? at(c, idx) : Complex{};
}

void SpectralField::set_mode(int c, const Wavevector& k, Complex value) {
  const std::size_t idx = grid_.flat_index_of_mode(k);
  if (idx >= modes()) throw ConfigurationError("mode is not representable on this grid");
  const std::size_t conj = grid_.conjugate_index(idx);
  at(c, idx) = value;
  if (conj == idx) {
    at(c, idx) = Complex(value.real(), 0.0);
  } else {
    at(c, conj) = std::conj(value);
  }
}

void SpectralField::set_zero() { std::fill(data_.begin(), data_.end(), Complex{}); }

bool SpectralField::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](Complex z) { return z == Complex{}; });
}

bool SpectralField::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

void SpectralField::check_compatible(const SpectralField& other) const {
  if (grid_ != other.grid_ || components_ != other.components_) {
    throw ConfigurationError("field grids or component counts differ");
  }
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  divfree_ = divfree_ && other.divfree_;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  divfree_ = divfree_ && other.divfree_;
  return *this;
}

SpectralField& SpectralField::operator*=(double factor) {
  for (auto& z : data_) z *= factor;
  return *this;
}

SpectralField& SpectralField::axpy(double factor, const SpectralField& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += factor * other.data_[i];
  divfree_ = divfree_ && other.divfree_;
  return *this;
}

Complex ScalarSpectralField::mode(const Wavevector& k) const {
  const std::size_t idx = grid.flat_index_of_mode(k);
  return idx < coeffs.size() ? coeffs[idx] : Complex{};
}

void ScalarSpectralField::set_mode(const Wavevector& k, Complex value) {
  const std::size_t idx = grid.flat_index_of_mode(k);
  if (idx >= coeffs.size()) throw ConfigurationError("mode is not representable on this grid");
  const std::size_t conj = grid.conjugate_index(idx);
  coeffs[idx] = value;
  if (conj == idx) {
    coeffs[idx] = Complex(value.real(), 0.0);
  } else {
    coeffs[conj] = std::conj(value);
  }
}

// ---------------------------------------------------------------------------
// transforms

namespace {

void forward_in_place(const TorusGrid& grid, std::span<Complex> data) {
  FftPlan::get(grid).forward(data.data());
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (auto& z : data) z *= scale;
}

void backward_to_real(const TorusGrid& grid, std::span<const Complex> coeffs, std::span<double> out,
                      std::vector<Complex>& scratch) {
  scratch.assign(coeffs.begin(), coeffs.end());
  FftPlan::get(grid).backward(scratch.data());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scratch[i].real();
}

}  // namespace

SpectralField forward_transform(const TorusGrid& grid, std::span<const double> values, int components) {
  if (components < 1 || values.size() != grid.size() * static_cast<std::size_t>(components)) {
    throw ConfigurationError("forward_transform: expected " +
                             std::to_string(grid.size() * static_cast<std::size_t>(std::max(components, 0))) +
                             " samples, got " + std::to_string(values.size()));
  }
  SpectralField field(grid, components);
  for (int c = 0; c < components; ++c) {
    auto comp = field.component(c);
    const double* src = values.data() + static_cast<std::size_t>(c) * grid.size();
    for (std::size_t i = 0; i < grid.size(); ++i) comp[i] = Complex(src[i], 0.0);
    forward_in_place(grid, comp);
  }
  return field;
}

std::vector<double> inverse_transform(const SpectralField& field) {
  const std::size_t n = field.modes();
  std::vector<double> out(n * static_cast<std::size_t>(field.components()));
  std::vector<Complex> scratch;
  for (int c = 0; c < field.components(); ++c) {
    backward_to_real(field.grid(), field.component(c),
                     std::span<double>(out.data() + static_cast<std::size_t>(c) * n, n), scratch);
  }
  return out;
}

ScalarSpectralField forward_transform(const TorusGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) {
    throw ConfigurationError("forward_transform: scalar sample count does not match the grid");
  }
  ScalarSpectralField field(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) field.coeffs[i] = Complex(values[i], 0.0);
  forward_in_place(grid, field.coeffs);
  return field;
}

std::vector<double> inverse_transform(const ScalarSpectralField& field) {
  std::vector<double> out(field.grid.size());
  std::vector<Complex> scratch;
  backward_to_real(field.grid, field.coeffs, out, scratch);
  return out;
}

void forward_component(const TorusGrid& grid, std::span<const double> values, std::span<Complex> out) {
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = Complex(values[i], 0.0);
  forward_in_place(grid, out);
}

// ---------------------------------------------------------------------------
// projection and elliptic solves

SpectralField helmholtz_project(const SpectralField& f) {
  const TorusGrid& grid = f.grid();
  const int d = grid.dim();
  if (f.components() != d) throw ConfigurationError("helmholtz_project needs a d-component field");
  const auto& tab = wavenumbers(grid);
  SpectralField out = f;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double kd2 = tab.kd2[i];
    if (kd2 == 0.0) continue;
    const auto& k = tab.kd[i];
    Complex dot{};
    for (int j = 0; j < d; ++j) dot += static_cast<double>(k[j]) * f.at(j, i);
    for (int c = 0; c < d; ++c) out.at(c, i) -= (static_cast<double>(k[c]) / kd2) * dot;
  }
  out.set_divfree(true);
  return out;
}

ScalarSpectralField q_solve(const SpectralField& f) {
  const TorusGrid& grid = f.grid();
  const int d = grid.dim();
  if (f.components() != d) throw ConfigurationError("q_solve needs a d-component field");
  const auto& tab = wavenumbers(grid);
  ScalarSpectralField psi(grid);
  // psi(k) = -i (k . f(k)) / |k|^2 solves lap psi = div f with zero mean.
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double kd2 = tab.kd2[i];
    if (kd2 == 0.0) continue;
    Complex dot{};
    for (int j = 0; j < d; ++j) dot += static_cast<double>(tab.kd[i][j]) * f.at(j, i);
    psi.coeffs[i] = Complex(0.0, -1.0) * dot / kd2;
  }
  return psi;
}

SpectralField gradient(const ScalarSpectralField& psi) {
  const TorusGrid& grid = psi.grid;
  const auto& tab = wavenumbers(grid);
  SpectralField out(grid, grid.dim());
  for (int c = 0; c < grid.dim(); ++c) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out.at(c, i) = Complex(0.0, static_cast<double>(tab.kd[i][c])) * psi.coeffs[i];
    }
  }
  return out;
}

ScalarSpectralField divergence(const SpectralField& f) {
  const TorusGrid& grid = f.grid();
  if (f.components() != grid.dim()) throw ConfigurationError("divergence needs a d-component field");
  const auto& tab = wavenumbers(grid);
  ScalarSpectralField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Complex s{};
    for (int j = 0; j < grid.dim(); ++j) s += static_cast<double>(tab.kd[i][j]) * f.at(j, i);
    out.coeffs[i] = Complex(0.0, 1.0) * s;
  }
  return out;
}

SpectralField spectral_derivative(const SpectralField& f, int axis) {
  const TorusGrid& grid = f.grid();
  if (axis < 0 || axis >= grid.dim()) {
    throw ConfigurationError("derivative axis " + std::to_string(axis) + " out of range");
  }
  const auto& tab = wavenumbers(grid);
  SpectralField out(grid, f.components());
  for (int c = 0; c < f.components(); ++c) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out.at(c, i) = Complex(0.0, static_cast<double>(tab.kd[i][axis])) * f.at(c, i);
    }
  }
  out.set_divfree(f.divfree());
  return out;
}

ScalarSpectralField spectral_derivative(const ScalarSpectralField& f, int axis) {
  const TorusGrid& grid = f.grid;
  if (axis < 0 || axis >= grid.dim()) {
    throw ConfigurationError("derivative axis " + std::to_string(axis) + " out of range");
  }
  const auto& tab = wavenumbers(grid);
  ScalarSpectralField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.coeffs[i] = Complex(0.0, static_cast<double>(tab.kd[i][axis])) * f.coeffs[i];
  }
  return out;
}

SpectralField dealias(SpectralField f) {
  dealias_in_place(f);
  return f;
}

void dealias_in_place(SpectralField& f) {
  const auto& tab = wavenumbers(f.grid());
  for (int c = 0; c < f.components(); ++c) {
    auto comp = f.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i) {
      if (!tab.kept[i]) comp[i] = Complex{};
    }
  }
}

ScalarSpectralField dealias(ScalarSpectralField f) {
  const auto& tab = wavenumbers(f.grid);
  for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
    if (!tab.kept[i]) f.coeffs[i] = Complex{};
  }
  return f;
}

// ---------------------------------------------------------------------------
// inner products and audits

double inner_product(const SpectralField& a, const SpectralField& b) {
  if (a.grid() != b.grid() || a.components() != b.components()) {
    throw ConfigurationError("inner_product: incompatible fields");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    s += a.data()[i].real() * b.data()[i].real() + a.data()[i].imag() * b.data()[i].imag();
  }
  return s * a.grid().volume();
}

double l2_norm(const SpectralField& f) {
  const double e = inner_product(f, f);
  return e < 0.0 ? 0.0 : std::sqrt(e);
}

double coefficient_norm(const SpectralField& f) {
  double s = 0.0;
  for (const auto& z : f.data()) s += std::norm(z);
  return std::sqrt(s);
}

double grad_norm_squared(const SpectralField& f) {
  const auto& tab = wavenumbers(f.grid());
  double s = 0.0;
  for (int c = 0; c < f.components(); ++c) {
    auto comp = f.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i) s += tab.kd2[i] * std::norm(comp[i]);
  }
  return s * f.grid().volume();
}

double grid_l2_norm(const TorusGrid& grid, std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s * grid.cell_volume());
}

double max_divergence_defect(const SpectralField& f) {
  const TorusGrid& grid = f.grid();
  const auto& tab = wavenumbers(grid);
  double worst = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Complex dot{};
    double mag2 = 0.0;
    for (int j = 0; j < grid.dim(); ++j) {
      dot += static_cast<double>(tab.kd[i][j]) * f.at(j, i);
      mag2 += std::norm(f.at(j, i));
    }
    scale = std::max(scale, mag2);
    if (tab.kd2[i] > 0.0) worst = std::max(worst, std::abs(dot) / std::sqrt(tab.kd2[i]));
  }
  return scale > 0.0 ? worst / std::sqrt(scale) : 0.0;
}

double hermitian_defect(const SpectralField& f) {
  const TorusGrid& grid = f.grid();
  double worst = 0.0;
  double scale = 0.0;
  for (const auto& z : f.data()) scale = std::max(scale, std::abs(z));
  for (int c = 0; c < f.components(); ++c) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const std::size_t j = grid.conjugate_index(i);
      worst = std::max(worst, std::abs(f.at(c, i) - std::conj(f.at(c, j))));
    }
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

void enforce_hermitian(SpectralField& f) {
  const TorusGrid& grid = f.grid();
  for (int c = 0; c < f.components(); ++c) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const std::size_t j = grid.conjugate_index(i);
      if (j < i) continue;
      const Complex avg = 0.5 * (f.at(c, i) + std::conj(f.at(c, j)));
      f.at(c, i) = avg;
      f.at(c, j) = std::conj(avg);
    }
  }
}

SpectralField refine(const SpectralField& f, int n_fine) {
  const TorusGrid& coarse = f.grid();
  TorusGrid fine(coarse.dim(), n_fine);
  if (n_fine < coarse.n()) throw ConfigurationError("refine: target grid is coarser than the source");
  SpectralField out(fine, f.components());
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    const Wavevector s = coarse.storage_indices(i);
    bool nyquist = false;
    for (int a = 0; a < coarse.dim(); ++a) nyquist = nyquist || coarse.is_nyquist(s[a]);
    if (nyquist) continue;
    const std::size_t j = fine.flat_index_of_mode(coarse.wavevector(i));
    for (int c = 0; c < f.components(); ++c) out.at(c, j) = f.at(c, i);
  }
  out.set_divfree(f.divfree());
  return out;
}

}  // namespace kns
