#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "experiment.hpp"
#include "kns/error.hpp"

using namespace kns;
using namespace kns::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("kns_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path write_yaml(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.yaml";
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(Cli, DefaultsResolveEveryKey) {
  const auto spec = load_spec("simulate", "", {}, false);
  for (auto it = default_config().begin(); it != default_config().end(); ++it) {
    EXPECT_TRUE(spec.config.contains(it.key()));
    EXPECT_TRUE(key_docs().count(it.key())) << it.key();
  }
  EXPECT_EQ(spec.solver.grid.n(), 32);
  EXPECT_EQ(spec.config_hash.size(), 64u);
  EXPECT_EQ(spec.config_hash, load_spec("simulate", "", {}, false).config_hash);
  EXPECT_NE(spec.config_hash, load_spec("noise-info", "", {}, false).config_hash);
}

TEST(Cli, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cli, UnknownKeyReportsLine) {
  const auto dir = scratch("unknown");
  const auto p = write_yaml(dir, "grid:\n  n: 16\ntime:\n  dtt: 0.1\n");
  try {
    load_spec("simulate", p.string(), {}, false);
    FAIL() << "expected ConfigurationError";
  } catch (const ConfigurationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("time.dtt"), std::string::npos) << e.what();
  }
}

TEST(Cli, KappaBoundaryRejected) {
  Overrides ov;
  ov.set = {"exponents.p=4", "exponents.q=4", "exponents.kappa=1"};
  try {
    load_spec("exponents", "", ov, false);
    FAIL() << "expected ConfigurationError";
  } catch (const ConfigurationError& e) {
    EXPECT_NE(std::string(e.what()).find("kappa=1 violates 0 <= kappa < p/2 - 1 = 1"), std::string::npos);
  }
  EXPECT_NO_THROW(load_spec("exponents", "", ov, true));
}

TEST(Cli, StratonovichTimeDependentRejected) {
  Overrides ov;
  ov.set = {"solver.calculus=stratonovich", "noise.kind=constant", "noise.vectors=[[0.2, 0.1]]",
            "noise.time_dependent=true"};
  EXPECT_THROW(load_spec("simulate", "", ov, false), UnsupportedModeError);
}

TEST(Cli, NoncoerciveRejected) {
  Overrides ov;
  ov.set = {"viscosity.nu=0.01", "noise.kind=constant", "noise.vectors=[[1.0, 0.0]]"};
  EXPECT_THROW(load_spec("simulate", "", ov, false), ConfigurationError);
}

TEST(Cli, ExponentsPreset) {
  const auto dir = scratch("exponents");
  Overrides ov;
  ov.set = {"grid.dim=3", "serrin.p0=4", "serrin.q0=6"};
  auto spec = load_spec("exponents", "", ov, false);
  spec.out_dir = dir.string();
  std::ostringstream log;
  EXPECT_EQ(run_experiment(spec, log), 0);
  const auto report = json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report["serrin"]["gamma0"].get<double>(), 0.0);
  EXPECT_TRUE(report["serrin"]["classic"].get<bool>());
}

TEST(Cli, ZeroDataGivesZeroSeries) {
  const auto dir = scratch("zero");
  Overrides ov;
  ov.set = {"grid.n=16", "time.T=0.01", "noise.kind=constant", "noise.vectors=[[0.3, 0.0], [0.0, 0.3]]"};
  ov.paths = 2;
  ov.snapshot_every = 5;
  auto spec = load_spec("simulate", "", ov, false);
  spec.out_dir = dir.string();
  std::ostringstream log;
  ASSERT_EQ(run_experiment(spec, log), 0);
  std::istringstream series(slurp(dir / "series.tsv"));
  std::string line;
  std::getline(series, line);
  EXPECT_EQ(line, "# config_hash " + spec.config_hash);
  std::getline(series, line);  // header
  int rows = 0;
  while (std::getline(series, line)) {
    std::istringstream cols(line);
    double path, t, l2, h1;
    cols >> path >> t >> l2 >> h1;
    EXPECT_EQ(l2, 0.0);
    EXPECT_EQ(h1, 0.0);
    ++rows;
  }
  EXPECT_EQ(rows, 2 * 11);
  EXPECT_TRUE(fs::exists(dir / "snapshots" / "path0001_000002.snsf"));
  const auto manifest = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["config_hash"], spec.config_hash);
}

TEST(Cli, RerunIsByteIdentical) {
  Overrides ov;
  ov.set = {"grid.n=16", "time.T=0.02", "initial.kind=taylor-green", "noise.kind=kraichnan", "noise.channels=8",
            "noise.zeta=1.0", "noise.amplitude=0.3", "nonlinearity.g=linear", "nonlinearity.gamma=[0.2, 0.1]"};
  ov.paths = 3;
  ov.seed = 11;
  std::string first;
  for (int run = 0; run < 2; ++run) {
    const auto dir = scratch("rerun" + std::to_string(run));
    auto spec = load_spec("simulate", "", ov, false);
    spec.out_dir = dir.string();
    std::ostringstream log;
    ASSERT_EQ(run_experiment(spec, log), 0);
    const auto s = slurp(dir / "series.tsv");
    if (run == 0) {
      first = s;
    } else {
      EXPECT_EQ(s, first);
    }
  }
  ov.seed = 12;
  const auto dir = scratch("rerun_other");
  auto spec = load_spec("simulate", "", ov, false);
  spec.out_dir = dir.string();
  std::ostringstream log;
  ASSERT_EQ(run_experiment(spec, log), 0);
  EXPECT_NE(slurp(dir / "series.tsv"), first);
}
