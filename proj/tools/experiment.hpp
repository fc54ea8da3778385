#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kns/diagnostics.hpp"
#include "kns/function_spaces.hpp"
#include "kns/solver.hpp"

namespace kns::cli {

using json = nlohmann::json;

inline const std::vector<std::string> kPresets = {"simulate",       "energy-check", "scaling-check", "smr-estimate",
                                                  "serrin-monitor", "small-data",   "exponents",     "noise-info"};

/// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::optional<int> snapshot_every;
  std::vector<std::string> set;  ///< "key=value", value parsed as YAML
};

struct ExperimentSpec {
  std::string preset;
  json config;  ///< every key with its resolved value, keys sorted
  std::string config_hash;
  std::string out_dir = "kns-out";
  bool allow_inadmissible = false;

  SolverConfig solver;
  ParameterReport exponents;
  SerrinPair serrin;
  int paths = 1;
  json derived;

  const json& at(const std::string& key) const { return config.at(key); }
};

/// Default value of every accepted key; the table doubles as the schema.
const json& default_config();
/// Key -> one-line description with units.
const std::map<std::string, std::string>& key_docs();

/// Parses and validates a configuration. An empty path uses defaults only.
/// Throws ConfigurationError (with key or line) or UnsupportedModeError.
ExperimentSpec load_spec(const std::string& preset, const std::string& path, const Overrides& ov,
                         bool allow_inadmissible);

/// Lowercase hex SHA-256 of the canonical JSON dump.
std::string sha256_hex(const std::string& data);

/// Initial datum of path `index`, multiplied by `scale`.
SpectralField initial_field(const ExperimentSpec& spec, std::size_t index, double scale = 1.0);

/// SMR settings of an smr-estimate spec (linear system, exponents and forcing keys).
SmrSettings smr_settings(const ExperimentSpec& spec);

/// Runs the preset and writes manifest.json, series.tsv, report.json (and
/// snapshots for simulate) under spec.out_dir. Returns 0, or 3 when the
/// preset's pass condition fails.
int run_experiment(const ExperimentSpec& spec, std::ostream& log);

}  // namespace kns::cli
