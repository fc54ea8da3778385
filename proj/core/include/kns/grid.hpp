#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace kns {

using Wavevector = std::array<int, 3>;

/// Uniform periodic grid on the torus [0, 2*pi)^dim.
///
/// Points are stored row-major with axis 0 slowest. Along each axis the
/// storage index i maps to the integer wavenumber i for i < n/2 and i - n
/// otherwise, so the Nyquist wavenumber is -n/2.
class TorusGrid {
 public:
  TorusGrid() = default;
  TorusGrid(int dim, int n);

  int dim() const { return dim_; }
  int n() const { return n_; }
  std::size_t size() const { return size_; }
  double period() const;
  /// Lebesgue measure of the torus, (2*pi)^dim.
  double volume() const;
  /// Quadrature weight of one grid point, volume()/size().
  double cell_volume() const { return volume() / static_cast<double>(size_); }

  int wavenumber(int index) const { return index < n_ / 2 ? index : index - n_; }
  /// Wavenumber used by derivatives: the Nyquist wavenumber is mapped to 0.
  int derivative_wavenumber(int index) const {
    return index == n_ / 2 ? 0 : wavenumber(index);
  }
  bool is_nyquist(int index) const { return index == n_ / 2; }
  int storage_index(int wavenumber) const {
    return wavenumber >= 0 ? wavenumber : wavenumber + n_;
  }

  Wavevector wavevector(std::size_t flat) const;
  Wavevector storage_indices(std::size_t flat) const;
  std::size_t flat_index(const Wavevector& storage) const;
  /// Flat index of mode k, or size() when k is not representable.
  std::size_t flat_index_of_mode(const Wavevector& k) const;
  /// Flat index holding the conjugate partner of the given flat index.
  std::size_t conjugate_index(std::size_t flat) const;
  /// Physical coordinate of grid point `flat` along `axis`.
  double coordinate(std::size_t flat, int axis) const;

  bool operator==(const TorusGrid& other) const {
    return dim_ == other.dim_ && n_ == other.n_;
  }
  bool operator!=(const TorusGrid& other) const { return !(*this == other); }

 private:
  int dim_ = 2;
  int n_ = 8;
  std::size_t size_ = 64;
};

/// Precomputed per-mode tables shared by all fields on one grid.
struct WavenumberTable {
  std::vector<Wavevector> k;        ///< true wavenumbers
  std::vector<Wavevector> kd;       ///< derivative wavenumbers (Nyquist -> 0)
  std::vector<double> k2;           ///< |k|^2 with true wavenumbers
  std::vector<double> kd2;          ///< |kd|^2
  std::vector<unsigned char> kept;  ///< 1 when the mode survives dealiasing
};

/// Cached table for a grid; thread-safe, the returned reference stays valid.
const WavenumberTable& wavenumbers(const TorusGrid& grid);

}  // namespace kns
