#include "kns/snapshot_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "kns/error.hpp"
#include "kns/spectral.hpp"

namespace kns {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ConfigurationError("truncated snapshot header in " + path);
  }
  return value;
}

}  // namespace

void write_snapshot(const std::string& path, const Snapshot& snap) {
  const std::size_t expected = snap.grid.size() * static_cast<std::size_t>(snap.components);
  if (snap.values.size() != expected) throw ConfigurationError("snapshot sample count does not match header");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigurationError("cannot open " + path + " for writing");
  out.write("SNSF", 4);
  put<std::uint32_t>(out, kSnapshotVersion);
  put<std::int32_t>(out, snap.grid.dim());
  put<std::int32_t>(out, snap.grid.n());
  put<std::int32_t>(out, snap.components);
  put<double>(out, snap.time);
  out.write(reinterpret_cast<const char*>(snap.values.data()),
            static_cast<std::streamsize>(snap.values.size() * sizeof(double)));
  if (!out) throw ConfigurationError("write failed for " + path);
}

void write_snapshot(const std::string& path, const SpectralField& field, double time) {
  Snapshot snap;
  snap.grid = field.grid();
  snap.components = field.components();
  snap.time = time;
  snap.values = inverse_transform(field);
  write_snapshot(path, snap);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("cannot open snapshot " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SNSF", 4) != 0) {
    throw ConfigurationError(path + " is not a field snapshot");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kSnapshotVersion) {
    throw ConfigurationError("unsupported snapshot version " + std::to_string(version));
  }
  const int dim = get<std::int32_t>(in, path);
  const int n = get<std::int32_t>(in, path);
  const int comps = get<std::int32_t>(in, path);
  Snapshot snap;
  snap.grid = TorusGrid(dim, n);
  if (comps < 1) throw ConfigurationError("snapshot component count must be positive");
  snap.components = comps;
  snap.time = get<double>(in, path);
  snap.values.resize(snap.grid.size() * static_cast<std::size_t>(comps));
  if (!in.read(reinterpret_cast<char*>(snap.values.data()),
               static_cast<std::streamsize>(snap.values.size() * sizeof(double)))) {
    throw ConfigurationError("truncated snapshot body in " + path);
  }
  return snap;
}

SpectralField snapshot_to_field(const Snapshot& snap) {
  return forward_transform(snap.grid, snap.values, snap.components);
}

}  // namespace kns
