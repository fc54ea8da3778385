#include "kns/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "kns/error.hpp"

namespace kns {

TorusGrid::TorusGrid(int dim, int n) : dim_(dim), n_(n) {
  if (dim != 2 && dim != 3) {
    throw ConfigurationError("grid dimension must be 2 or 3, got " + std::to_string(dim));
  }
  if (n < 8 || n % 2 != 0) {
    throw ConfigurationError("points per dimension must be even and >= 8, got " +
                             std::to_string(n));
  }
  size_ = 1;
  for (int a = 0; a < dim; ++a) size_ *= static_cast<std::size_t>(n);
}

double TorusGrid::period() const { return 2.0 * std::numbers::pi; }

double TorusGrid::volume() const { return std::pow(period(), dim_); }

Wavevector TorusGrid::storage_indices(std::size_t flat) const {
  Wavevector s{0, 0, 0};
  for (int a = dim_ - 1; a >= 0; --a) {
    s[a] = static_cast<int>(flat % static_cast<std::size_t>(n_));
    flat /= static_cast<std::size_t>(n_);
  }
  return s;
}

Wavevector TorusGrid::wavevector(std::size_t flat) const {
  Wavevector s = storage_indices(flat);
  for (int a = 0; a < dim_; ++a) s[a] = wavenumber(s[a]);
  return s;
}

std::size_t TorusGrid::flat_index(const Wavevector& storage) const {
  std::size_t flat = 0;
  for (int a = 0; a < dim_; ++a) {
    flat = flat * static_cast<std::size_t>(n_) + static_cast<std::size_t>(storage[a]);
  }
  return flat;
}

std::size_t TorusGrid::flat_index_of_mode(const Wavevector& k) const {
  Wavevector s{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    if (k[a] < -n_ / 2 || k[a] >= n_ / 2) return size_;
    s[a] = storage_index(k[a]);
  }
  return flat_index(s);
}

std::size_t TorusGrid::conjugate_index(std::size_t flat) const {
  Wavevector s = storage_indices(flat);
  for (int a = 0; a < dim_; ++a) s[a] = (n_ - s[a]) % n_;
  return flat_index(s);
}

double TorusGrid::coordinate(std::size_t flat, int axis) const {
  const Wavevector s = storage_indices(flat);
  return period() * static_cast<double>(s[axis]) / static_cast<double>(n_);
}

namespace {

std::unique_ptr<WavenumberTable> build_table(const TorusGrid& grid) {
  auto table = std::make_unique<WavenumberTable>();
  const std::size_t size = grid.size();
  table->k.resize(size);
  table->kd.resize(size);
  table->k2.resize(size);
  table->kd2.resize(size);
  table->kept.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    const Wavevector s = grid.storage_indices(i);
    Wavevector k{0, 0, 0};
    Wavevector kd{0, 0, 0};
    double k2 = 0.0;
    double kd2 = 0.0;
    bool kept = true;
    for (int a = 0; a < grid.dim(); ++a) {
      k[a] = grid.wavenumber(s[a]);
      kd[a] = grid.derivative_wavenumber(s[a]);
      k2 += static_cast<double>(k[a]) * k[a];
      kd2 += static_cast<double>(kd[a]) * kd[a];
      // 2/3 rule, strict so that grids divisible by 3 stay alias free
      if (3 * std::abs(k[a]) >= grid.n()) kept = false;
    }
    table->k[i] = k;
    table->kd[i] = kd;
    table->k2[i] = k2;
    table->kd2[i] = kd2;
    table->kept[i] = kept ? 1 : 0;
  }
  return table;
}

}  // namespace

const WavenumberTable& wavenumbers(const TorusGrid& grid) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<WavenumberTable>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{grid.dim(), grid.n()}];
  if (!slot) slot = build_table(grid);
  return *slot;
}

}  // namespace kns
