#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "kns/fields.hpp"
#include "kns/snapshot_io.hpp"
#include "kns/spectral.hpp"
#include "test_util.hpp"

using namespace kns;

TEST(Snapshot, RoundTrip) {
  TorusGrid g(3, 8);
  const auto f = kns::test::random_divfree(g, 3);
  const auto path = (std::filesystem::temp_directory_path() / "kns_snapshot_roundtrip.snsf").string();
  write_snapshot(path, f, 0.125);
  const auto s = read_snapshot(path);
  EXPECT_EQ(s.grid, g);
  EXPECT_EQ(s.components, 3);
  EXPECT_EQ(s.time, 0.125);
  const auto back = snapshot_to_field(s);
  EXPECT_LE(kns::test::max_abs_diff(back, f), 1e-15);
  EXPECT_EQ(s.values, inverse_transform(f));
  std::filesystem::remove(path);
}

TEST(Snapshot, HeaderLayout) {
  TorusGrid g(2, 8);
  const auto path = (std::filesystem::temp_directory_path() / "kns_snapshot_header.snsf").string();
  write_snapshot(path, taylor_green(g), 2.5);
  std::ifstream is(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)), {});
  ASSERT_EQ(bytes.size(), 4 + 4 + 12 + 8 + 2 * 64 * 8u);
  EXPECT_EQ(std::string(bytes.data(), 4), "SNSF");
  std::uint32_t version;
  std::int32_t dims[3];
  double t;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(dims, bytes.data() + 8, 12);
  std::memcpy(&t, bytes.data() + 20, 8);
  EXPECT_EQ(version, 1u);
  EXPECT_EQ(dims[0], 2);
  EXPECT_EQ(dims[1], 8);
  EXPECT_EQ(dims[2], 2);
  EXPECT_EQ(t, 2.5);
  std::filesystem::remove(path);
}

TEST(Snapshot, RejectsBadMagic) {
  const auto path = (std::filesystem::temp_directory_path() / "kns_snapshot_bad.snsf").string();
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE0000000000000000000000000";
  }
  EXPECT_ANY_THROW(read_snapshot(path));
  std::filesystem::remove(path);
}
