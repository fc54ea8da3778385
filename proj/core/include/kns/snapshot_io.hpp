#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kns/spectral_field.hpp"

namespace kns {

// Binary field snapshot, little-endian:
//   char[4]  magic "SNSF"
//   uint32   version (1)
//   int32    dim, n, components
//   double   time
//   double   samples[components * n^dim], component-major, each component
//            row-major with axis 0 slowest
inline constexpr std::uint32_t kSnapshotVersion = 1;

struct Snapshot {
  TorusGrid grid{};
  int components = 0;
  double time = 0.0;
  std::vector<double> values;
};

void write_snapshot(const std::string& path, const Snapshot& snap);
void write_snapshot(const std::string& path, const SpectralField& field, double time);
Snapshot read_snapshot(const std::string& path);
SpectralField snapshot_to_field(const Snapshot& snap);

}  // namespace kns
