#include "experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "kns/diagnostics.hpp"
#include "kns/error.hpp"
#include "kns/fields.hpp"
#include "kns/noise.hpp"
#include "kns/snapshot_io.hpp"
#include "kns/spectral.hpp"

#ifndef KNS_VERSION
#define KNS_VERSION "0.0.0"
#endif

namespace kns::cli {

namespace fs = std::filesystem;

namespace {

struct KeyDef {
  const char* key;
  json value;
  const char* doc;
};

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      {"grid.dim", 2, "space dimension d (2 or 3)"},
      {"grid.n", 32, "grid points per axis (even, >= 8)"},
      {"time.dt", 1e-3, "time step (time units)"},
      {"time.T", 0.1, "horizon (time units, whole number of steps)"},
      {"solver.calculus", "ito", "ito | stratonovich"},
      {"solver.scheme", "semi-implicit", "semi-implicit | exponential"},
      {"solver.convection", true, "include -div(u (x) u); false gives the linear system"},
      {"solver.blowup_factor", 1e6, "blow-up when |u|^2 > factor * max(|u0|^2, 1)"},
      {"solver.norm_every", 1, "norm sampling stride (steps)"},
      {"viscosity.nu", 1.0, "isotropic viscosity (length^2/time)"},
      {"viscosity.matrix", json::array(), "constant d x d tensor, row-major; overrides nu"},
      {"noise.kind", "none", "none | constant | kraichnan"},
      {"noise.vectors", json::array(), "constant transport vectors b_n, one d-list per channel"},
      {"noise.channels", 0, "kraichnan: number of channels"},
      {"noise.zeta", 0.0, "kraichnan: spectral decay exponent of |k|^-zeta"},
      {"noise.amplitude", 0.0, "kraichnan: amplitude A (length/time^(1/2))"},
      {"noise.seed", 0, "kraichnan: seed for polarization angles"},
      {"noise.time_dependent", false, "declare b dependent on (t, omega)"},
      {"noise.h", json::array(), "turbulent-pressure matrices h_n, d*d entries per channel"},
      {"nonlinearity.g", "zero", "zero | linear | quadratic"},
      {"nonlinearity.gamma", json::array(), "per-channel coefficients gamma_n"},
      {"nonlinearity.cap", 1.0, "quadratic: cap on |u| in gamma u min(|u|, cap)"},
      {"nonlinearity.c0", 0.0, "f0(u) = c0 u (1/time)"},
      {"nonlinearity.beta", json::array(), "f_j(u) = beta_j u (length/time)"},
      {"initial.kind", "zero", "zero | taylor-green | single-mode | band-limited | rough"},
      {"initial.amplitude", 1.0, "amplitude, or L^2 norm for band-limited"},
      {"initial.k", json::array({1, 0}), "single-mode wavevector"},
      {"initial.polarization", json::array({0, 1}), "single-mode polarization"},
      {"initial.kmax", 4.0, "band-limited: largest |k|"},
      {"initial.decay", 0.0, "spectral decay |k|^-decay (band-limited, rough)"},
      {"initial.seed", 0, "seed of random initial data; path i uses seed + i"},
      {"ensemble.paths", 1, "number of Brownian paths"},
      {"seed", 0, "Brownian seed"},
      {"output.snapshot_every", 0, "snapshot stride (steps), 0 = none"},
      {"norms", json::array(), "extra norms: bessel:s:q or besov:s:q:p"},
      {"exponents.p", 2.0, "time integrability p"},
      {"exponents.q", 2.0, "space integrability q"},
      {"exponents.delta", 0.0, "smoothness shift delta in (-1, 0]"},
      {"exponents.kappa", 0.0, "time weight exponent kappa"},
      {"serrin.p0", 2.0, "Serrin time exponent p0"},
      {"serrin.q0", 2.0, "Serrin space exponent q0"},
      {"serrin.delta0", 0.0, "Serrin smoothness shift delta0"},
      {"serrin.epsilon", 0.0, "start time of the Serrin accumulator"},
      {"scaling.lambda", 4.0, "scale lambda (sqrt(lambda) integer)"},
      {"smr.samples", 64, "number of random forcings"},
      {"smr.kmax", 4.0, "forcing band |k| <= kmax"},
      {"smr.f_level", 1.0, "nominal L^2 norm of f"},
      {"smr.g_level", 0.5, "nominal L^2 norm of each g_n"},
      {"smr.g_channels", 2, "number of g_n"},
      {"smr.forcing_seed", 1, "seed of the forcing ensemble"},
      {"smr.theta", 2.0, "homogeneity probe: (f, g) -> theta (f, g)"},
      {"small_data.levels", json::array({4.0, 2.0, 1.0}), "initial amplitude ladder"},
      {"energy.safety", 1.5, "C_T = safety * calibrated ratio"},
      {"energy.multipliers", json::array({2.0, 4.0}), "initial-data scalings checked with frozen C_T"},
      {"energy.residual_stability", 1.5, "allowed ratio of residual constants under dt halving"},
      {"regularization.ladder", json::array(), "smoothness ladder s for H^{s,2} norm series"},
  };
  return table;
}

[[noreturn]] void bad_key(const std::string& key, const std::string& what) {
  throw ConfigurationError(fmt::format("key '{}': {}", key, what));
}

json scalar_to_json(const YAML::Node& n) {
  const std::string s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(s, &pos);
    if (pos == s.size()) return i;
  } catch (...) {
  }
  try {
    std::size_t pos = 0;
    const double d = std::stod(s, &pos);
    if (pos == s.size()) return d;
  } catch (...) {
  }
  return s;
}

json node_to_json(const YAML::Node& n) {
  if (n.IsSequence()) {
    json arr = json::array();
    for (const auto& e : n) arr.push_back(node_to_json(e));
    return arr;
  }
  if (n.IsScalar()) return scalar_to_json(n);
  if (n.IsNull()) return nullptr;
  throw ConfigurationError(fmt::format("line {}: nested maps are only allowed as key groups", n.Mark().line + 1));
}

void flatten(const YAML::Node& n, const std::string& prefix, std::map<std::string, std::pair<json, int>>& out) {
  for (const auto& kv : n) {
    const std::string key = prefix.empty() ? kv.first.as<std::string>() : prefix + "." + kv.first.as<std::string>();
    if (kv.second.IsMap()) {
      flatten(kv.second, key, out);
    } else {
      out[key] = {node_to_json(kv.second), kv.first.Mark().line + 1};
    }
  }
}

/// Coerces `v` to the type of `def`.
json coerce(const std::string& key, const json& def, json v) {
  if (def.is_number_float()) {
    if (!v.is_number()) bad_key(key, "expected a number");
    return v.get<double>();
  }
  if (def.is_number_integer()) {
    if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) v = static_cast<long long>(v.get<double>());
    if (!v.is_number_integer()) bad_key(key, "expected an integer");
    return v;
  }
  if (def.is_boolean()) {
    if (!v.is_boolean()) bad_key(key, "expected true or false");
    return v;
  }
  if (def.is_string()) {
    if (!v.is_string()) bad_key(key, "expected a string");
    return v;
  }
  if (def.is_array()) {
    if (!v.is_array()) v = json::array({v});
    return v;
  }
  return v;
}

std::vector<double> numbers(const std::string& key, const json& v) {
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) bad_key(key, "expected a list of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

NormSpec parse_norm(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : text) {
    if (ch == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  NormSpec n;
  try {
    if (parts.size() == 3 && parts[0] == "bessel") {
      n.kind = NormSpec::Kind::bessel;
      n.s = std::stod(parts[1]);
      n.q = std::stod(parts[2]);
      return n;
    }
    if (parts.size() == 4 && parts[0] == "besov") {
      n.kind = NormSpec::Kind::besov;
      n.s = std::stod(parts[1]);
      n.q = std::stod(parts[2]);
      n.p = parts[3] == "inf" ? kInfinity : std::stod(parts[3]);
      return n;
    }
  } catch (const std::exception&) {
  }
  bad_key("norms", fmt::format("cannot parse '{}' (expected bessel:s:q or besov:s:q:p)", text));
}

Vec3 vec3(const std::string& key, const std::vector<double>& v, int d) {
  if (static_cast<int>(v.size()) != d) bad_key(key, fmt::format("expected {} entries, got {}", d, v.size()));
  Vec3 out{0, 0, 0};
  for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)];
  return out;
}

Mat3 mat3(const std::string& key, const std::vector<double>& v, int d) {
  if (static_cast<int>(v.size()) != d * d) bad_key(key, fmt::format("expected {} entries, got {}", d * d, v.size()));
  Mat3 m{};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m[static_cast<std::size_t>(3 * i + j)] = v[static_cast<std::size_t>(d * i + j)];
  return m;
}

SolverConfig build_solver(const json& c) {
  SolverConfig s;
  const int d = c.at("grid.dim").get<int>();
  const int n = c.at("grid.n").get<int>();
  if (d != 2 && d != 3) bad_key("grid.dim", fmt::format("d={} must be 2 or 3", d));
  if (n < 8 || n % 2 != 0) bad_key("grid.n", fmt::format("n={} must be even and >= 8", n));
  s.grid = TorusGrid(d, n);
  s.dt = c.at("time.dt").get<double>();
  s.T = c.at("time.T").get<double>();
  s.calculus = parse_calculus(c.at("solver.calculus").get<std::string>());
  s.scheme = parse_scheme(c.at("solver.scheme").get<std::string>());
  s.convection = c.at("solver.convection").get<bool>();
  s.blowup_factor = c.at("solver.blowup_factor").get<double>();
  s.norm_every = c.at("solver.norm_every").get<int>();
  s.seed = c.at("seed").get<std::uint64_t>();
  s.snapshot_every = c.at("output.snapshot_every").get<int>();

  const auto matrix = numbers("viscosity.matrix", c.at("viscosity.matrix"));
  s.a = matrix.empty() ? ViscosityTensor::isotropic(d, c.at("viscosity.nu").get<double>())
                       : ViscosityTensor::constant(d, mat3("viscosity.matrix", matrix, d));

  const std::string kind = c.at("noise.kind").get<std::string>();
  if (kind == "none") {
    s.noise = NoiseFamily::none(d);
  } else if (kind == "constant") {
    std::vector<Vec3> vs;
    for (const auto& v : c.at("noise.vectors")) vs.push_back(vec3("noise.vectors", numbers("noise.vectors", v), d));
    if (vs.empty()) bad_key("noise.vectors", "constant noise needs at least one vector");
    s.noise = NoiseFamily::constant(d, vs);
  } else if (kind == "kraichnan") {
    s.noise = synthesize_kraichnan(s.grid, c.at("noise.channels").get<int>(), c.at("noise.zeta").get<double>(),
                                   c.at("noise.amplitude").get<double>(), c.at("noise.seed").get<std::uint64_t>());
  } else {
    bad_key("noise.kind", fmt::format("unknown kind '{}' (expected none, constant or kraichnan)", kind));
  }
  s.noise.time_dependent = c.at("noise.time_dependent").get<bool>();
  for (const auto& h : c.at("noise.h")) s.noise.h.push_back(mat3("noise.h", numbers("noise.h", h), d));

  auto& nl = s.nonlinearity;
  nl.g_kind = parse_g_kind(c.at("nonlinearity.g").get<std::string>());
  nl.gamma = numbers("nonlinearity.gamma", c.at("nonlinearity.gamma"));
  nl.u_cap = c.at("nonlinearity.cap").get<double>();
  nl.f0_linear = c.at("nonlinearity.c0").get<double>();
  const auto beta = numbers("nonlinearity.beta", c.at("nonlinearity.beta"));
  if (!beta.empty()) nl.f_beta = vec3("nonlinearity.beta", beta, d);

  for (const auto& e : c.at("norms")) {
    if (!e.is_string()) bad_key("norms", "expected a list of strings");
    s.norms.push_back(parse_norm(e.get<std::string>()));
  }
  for (double sm : numbers("regularization.ladder", c.at("regularization.ladder"))) {
    NormSpec ns{NormSpec::Kind::bessel, sm, 2.0, 2.0};
    bool present = false;
    for (const auto& x : s.norms) present = present || x.name() == ns.name();
    if (!present) s.norms.push_back(ns);
  }
  return s;
}

json tensor_json(const ViscosityTensor& a, const TorusGrid& grid) {
  json out;
  out["constant"] = a.is_constant();
  if (a.is_constant()) {
    json m = json::array();
    for (int i = 0; i < a.dim(); ++i) {
      json row = json::array();
      for (int j = 0; j < a.dim(); ++j) row.push_back(a.constant_value()[static_cast<std::size_t>(3 * i + j)]);
      m.push_back(row);
    }
    out["value"] = m;
  }
  out["min_eigenvalue"] = a.min_eigenvalue(grid);
  return out;
}

json noise_manifest(const NoiseFamily& nf) {
  json modes = json::array();
  for (const auto& m : nf.modes) {
    json k = json::array();
    json amp = json::array();
    for (int i = 0; i < nf.dim; ++i) {
      k.push_back(m.k[static_cast<std::size_t>(i)]);
      amp.push_back(m.amplitude[static_cast<std::size_t>(i)]);
    }
    modes.push_back({{"k", k}, {"amplitude", amp}, {"phase", m.phase}});
  }
  return {{"channels", nf.channels()}, {"zeta", nf.zeta},      {"amplitude", nf.amplitude},
          {"seed", nf.seed},           {"modes", modes},       {"time_dependent", nf.time_dependent},
          {"has_h", nf.has_h()}};
}

double finite_or(double v) { return std::isfinite(v) ? v : -1.0; }

}  // namespace

const json& default_config() {
  static const json def = [] {
    json j = json::object();
    for (const auto& k : key_table()) j[k.key] = k.value;
    return j;
  }();
  return def;
}

const std::map<std::string, std::string>& key_docs() {
  static const std::map<std::string, std::string> docs = [] {
    std::map<std::string, std::string> m;
    for (const auto& k : key_table()) m[k.key] = k.doc;
    return m;
  }();
  return docs;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

ExperimentSpec load_spec(const std::string& preset, const std::string& path, const Overrides& ov,
                         bool allow_inadmissible) {
  if (std::find(kPresets.begin(), kPresets.end(), preset) == kPresets.end()) {
    throw ConfigurationError(fmt::format("unknown preset '{}'", preset));
  }
  std::map<std::string, std::pair<json, int>> given;
  if (!path.empty()) {
    if (!fs::exists(path)) throw ConfigurationError(fmt::format("config file '{}' does not exist", path));
    YAML::Node root;
    try {
      root = YAML::LoadFile(path);
    } catch (const YAML::Exception& e) {
      throw ConfigurationError(fmt::format("{}: line {}, column {}: {}", path, e.mark.line + 1, e.mark.column + 1, e.msg));
    }
    if (!root.IsNull()) {
      if (!root.IsMap()) throw ConfigurationError(fmt::format("{}: top level must be a key: value map", path));
      flatten(root, "", given);
    }
  }
  for (const auto& kv : ov.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigurationError(fmt::format("--set '{}' is not key=value", kv));
    YAML::Node v;
    try {
      v = YAML::Load(kv.substr(eq + 1));
    } catch (const YAML::Exception& e) {
      throw ConfigurationError(fmt::format("--set '{}': {}", kv, e.msg));
    }
    given[kv.substr(0, eq)] = {node_to_json(v), 0};
  }

  ExperimentSpec spec;
  spec.preset = preset;
  spec.allow_inadmissible = allow_inadmissible;
  json cfg = default_config();
  for (auto& [key, val] : given) {
    if (key == "preset") {
      if (!val.first.is_string() || val.first.get<std::string>() != preset) {
        throw ConfigurationError(
            fmt::format("line {}: file declares preset '{}' but '{}' was requested", val.second, val.first.dump(), preset));
      }
      continue;
    }
    if (!cfg.contains(key)) {
      throw ConfigurationError(val.second > 0 ? fmt::format("line {}: unknown key '{}'", val.second, key)
                                              : fmt::format("unknown key '{}'", key));
    }
    cfg[key] = coerce(key, cfg[key], val.first);
  }
  if (ov.seed) cfg["seed"] = *ov.seed;
  if (ov.paths) cfg["ensemble.paths"] = *ov.paths;
  if (ov.snapshot_every) cfg["output.snapshot_every"] = *ov.snapshot_every;
  spec.config = cfg;
  spec.paths = cfg.at("ensemble.paths").get<int>();
  if (spec.paths < 1) bad_key("ensemble.paths", "must be >= 1");

  const int d = cfg.at("grid.dim").get<int>();
  ParameterTuple t{d, cfg.at("exponents.p").get<double>(), cfg.at("exponents.q").get<double>(),
                   cfg.at("exponents.delta").get<double>(), cfg.at("exponents.kappa").get<double>()};
  spec.exponents = validate_parameters(t);
  spec.serrin = serrin_exponents(d, cfg.at("serrin.p0").get<double>(), cfg.at("serrin.q0").get<double>(),
                                 cfg.at("serrin.delta0").get<double>());
  bool exponents_given = preset == "smr-estimate";
  for (const auto& kv : given) exponents_given = exponents_given || kv.first.rfind("exponents.", 0) == 0;
  spec.derived["exponents_checked"] = exponents_given;
  if (exponents_given && !spec.exponents.admissible && !allow_inadmissible) {
    std::string msg = "inadmissible exponents (p, q, delta, kappa):";
    for (const auto& v : spec.exponents.violations) msg += "\n  " + v;
    msg += "\n  pass --allow-inadmissible to explore anyway";
    throw ConfigurationError(msg);
  }

  spec.derived["kappa_c"] = spec.exponents.kappa_c;
  spec.derived["admissible"] = spec.exponents.admissible;
  spec.derived["critical"] = spec.exponents.critical;
  spec.derived["trace_smoothness"] = spec.exponents.trace_smoothness;
  spec.derived["violations"] = spec.exponents.violations;
  spec.derived["serrin"] = {{"gamma0", spec.serrin.gamma0},
                            {"classic", spec.serrin.classic},
                            {"in_range", spec.serrin.in_range}};

  if (preset != "exponents") {
    spec.solver = build_solver(cfg);
    spec.solver.allow_noncoercive = allow_inadmissible;
    spec.solver.validate();
    const auto& s = spec.solver;
    spec.derived["steps"] = s.steps();
    spec.derived["channels"] = s.noise.channels();
    spec.derived["nu_hat"] = coercivity_nu(s.a, s.noise, s.grid);
    if (!s.noise.time_dependent) spec.derived["ito_correction"] = tensor_json(ito_correction(s.noise, s.grid), s.grid);
    spec.derived["noise_sup_bound"] = noise_sup_bound(s.noise, s.grid);
    const auto cert = growth_certificate(s.nonlinearity, d);
    spec.derived["growth"] = {{"M1", cert.m1}, {"M2", cert.m2}, {"g_lipschitz", cert.g_lipschitz}};
  }
  spec.config_hash = sha256_hex(json({{"preset", preset}, {"config", cfg}}).dump());
  return spec;
}

SpectralField initial_field(const ExperimentSpec& spec, std::size_t index, double scale) {
  const auto& c = spec.config;
  const TorusGrid& grid = spec.solver.grid;
  const int d = grid.dim();
  const std::string kind = c.at("initial.kind").get<std::string>();
  const double amp = c.at("initial.amplitude").get<double>() * scale;
  const auto seed = c.at("initial.seed").get<std::uint64_t>() + index;
  if (kind == "zero") return SpectralField(grid, d);
  if (kind == "taylor-green") return taylor_green(grid, amp);
  if (kind == "single-mode") {
    const auto kv = numbers("initial.k", c.at("initial.k"));
    const Vec3 kd = vec3("initial.k", kv, d);
    Wavevector k{0, 0, 0};
    for (int i = 0; i < d; ++i) k[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(kd[static_cast<std::size_t>(i)]));
    return single_mode(grid, k, vec3("initial.polarization", numbers("initial.polarization", c.at("initial.polarization")), d), amp);
  }
  if (kind == "band-limited") {
    return random_band_limited(grid, c.at("initial.kmax").get<double>(), amp, seed, c.at("initial.decay").get<double>());
  }
  if (kind == "rough") return rough_field(grid, c.at("initial.decay").get<double>(), amp, seed);
  bad_key("initial.kind", fmt::format("unknown kind '{}'", kind));
}

// ---------------------------------------------------------------------------

namespace {

/// Single writer for all artifacts of one run.
class Writer {
 public:
  explicit Writer(const ExperimentSpec& spec) : spec_(spec), dir_(spec.out_dir) { fs::create_directories(dir_); }

  void manifest(const json& extra) {
    json m;
    m["software"] = {{"name", "kns"}, {"version", KNS_VERSION}};
    m["preset"] = spec_.preset;
    m["config_hash"] = spec_.config_hash;
    m["seed"] = spec_.config.at("seed");
    m["paths"] = spec_.paths;
    m["config"] = spec_.config;
    m["derived"] = spec_.derived;
    if (spec_.preset != "exponents") m["noise"] = noise_manifest(spec_.solver.noise);
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    text("manifest.json", m.dump(2) + "\n");
  }

  void report(json r) {
    r["config_hash"] = spec_.config_hash;
    r["preset"] = spec_.preset;
    text("report.json", r.dump(2) + "\n");
  }

  void table(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<double>>& rows) {
    std::string out = "# config_hash " + spec_.config_hash + "\n";
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "\t" : "") + header[i];
    out += "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out += fmt::format("{}{:.17g}", i ? "\t" : "", r[i]);
      out += "\n";
    }
    text(name, out);
  }

  void snapshot(std::uint64_t path, std::size_t index, const SpectralField& f, double t) {
    fs::create_directories(dir_ / "snapshots");
    write_snapshot((dir_ / "snapshots" / fmt::format("path{:04d}_{:06d}.snsf", path, index)).string(), f, t);
  }

 private:
  void text(const std::string& name, const std::string& body) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    os << body;
  }

  const ExperimentSpec& spec_;
  fs::path dir_;
};

std::vector<std::string> series_header(const SolverConfig& cfg) {
  std::vector<std::string> h = {"path", "time", "l2", "h1"};
  for (const auto& n : cfg.norms) h.push_back(n.name());
  h.push_back("blown_up");
  return h;
}

void append_series(std::vector<std::vector<double>>& rows, const TrajectoryRecord& r) {
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    std::vector<double> row = {static_cast<double>(r.path), r.times[i], r.l2[i], r.h1[i]};
    for (const auto& s : r.norms) row.push_back(s[i]);
    row.push_back(r.blown_up && r.times[i] >= r.sigma ? 1.0 : 0.0);
    rows.push_back(std::move(row));
  }
}

json trajectory_summary(const TrajectoryRecord& r) {
  return {{"path", r.path},
          {"sigma", r.sigma},
          {"blown_up", r.blown_up},
          {"non_finite", r.non_finite},
          {"auto_projected", r.auto_projected},
          {"final_l2", finite_or(r.l2.back())}};
}

std::vector<TrajectoryRecord> ensemble(const ExperimentSpec& spec, const Solver& solver, double scale = 1.0,
                                       int paths = -1) {
  return run_ensemble(solver, [&](std::size_t i) { return initial_field(spec, i, scale); },
                      paths < 0 ? spec.paths : paths);
}

int run_simulate(const ExperimentSpec& spec, Writer& w, std::ostream& log) {
  const Solver solver(spec.solver);
  const auto ens = ensemble(spec, solver);
  std::vector<std::vector<double>> rows;
  json paths = json::array();
  int blown = 0;
  for (const auto& r : ens) {
    append_series(rows, r);
    paths.push_back(trajectory_summary(r));
    blown += r.blown_up ? 1 : 0;
    for (std::size_t i = 0; i < r.snapshots.size(); ++i) w.snapshot(r.path, i, r.snapshots[i], r.snapshot_times[i]);
  }
  w.table("series.tsv", series_header(spec.solver), rows);
  w.report({{"verdict", "complete"}, {"blown_up_paths", blown}, {"trajectories", paths}});
  log << fmt::format("simulate: {} paths, {} blown up\n", ens.size(), blown);
  return 0;
}

int run_energy_check(const ExperimentSpec& spec, Writer& w, std::ostream& log) {
  if (spec.solver.grid.dim() != 2) {
    w.report({{"verdict", "not-applicable"}, {"note", "the energy estimate is a two-dimensional statement"}});
    w.table("series.tsv", {"multiplier", "lhs", "rhs"}, {});
    log << "energy-check: not applicable for d != 2\n";
    return 0;
  }
  SolverConfig cfg = spec.solver;
  cfg.norm_every = 1;
  cfg.snapshot_every = 0;
  const Solver solver(cfg);
  const auto ref = ensemble(spec, solver, 1.0);
  const double c_t = calibrate_energy_constant(ref, spec.config.at("energy.safety").get<double>());
  std::vector<std::vector<double>> rows;
  json checks = json::array();
  bool pass = true;
  const auto ref_est = energy_estimate_check(ref, c_t);
  rows.push_back({1.0, ref_est.lhs, ref_est.rhs, ref_est.mean_initial_energy});
  for (double m : numbers("energy.multipliers", spec.config.at("energy.multipliers"))) {
    const auto est = energy_estimate_check(ensemble(spec, solver, m), c_t);
    pass = pass && est.pass;
    rows.push_back({m, est.lhs, est.rhs, est.mean_initial_energy});
    checks.push_back({{"multiplier", m}, {"lhs", est.lhs}, {"rhs", est.rhs}, {"ratio", est.ratio}, {"pass", est.pass}});
    log << fmt::format("energy-check: x{} lhs {:.6g} rhs {:.6g} {}\n", m, est.lhs, est.rhs, est.pass ? "ok" : "FAIL");
  }

  // discrete energy identity on the noise-free counterpart
  SolverConfig det = cfg;
  det.noise = NoiseFamily::none(2);
  det.snapshot_every = 1;
  det.keep_increments = true;
  json residuals = json::array();
  std::vector<double> constants;
  for (int halving = 0; halving < 2; ++halving) {
    const Solver s(det);
    const auto traj = s.run_trajectory(initial_field(spec, 0));
    const auto led = energy_audit(traj, s);
    constants.push_back(led.residual_constant);
    residuals.push_back({{"dt", det.dt},
                         {"max_abs_residual", led.max_abs_residual},
                         {"residual_constant", led.residual_constant},
                         {"max_convective_ratio", led.max_convective_ratio}});
    det.dt *= 0.5;
  }
  const double lo = std::min(constants[0], constants[1]);
  const double hi = std::max(constants[0], constants[1]);
  const double limit = spec.config.at("energy.residual_stability").get<double>();
  const bool stable = hi == 0.0 || (lo > 0.0 && hi / lo <= limit);
  pass = pass && stable;
  w.table("series.tsv", {"multiplier", "lhs", "rhs", "mean_initial_energy"}, rows);
  w.report({{"verdict", pass ? "pass" : "fail"},
            {"c_t", c_t},
            {"reference", {{"lhs", ref_est.lhs}, {"mean_initial_energy", ref_est.mean_initial_energy}}},
            {"checks", checks},
            {"identity", residuals},
            {"residual_constant_stable", stable}});
  return pass ? 0 : 3;
}

int run_scaling(const ExperimentSpec& spec, Writer& w, std::ostream& log) {
  const double lambda = spec.config.at("scaling.lambda").get<double>();
  const auto rep = scaling_check(initial_field(spec, 0), spec.solver, lambda);
  const bool deterministic = spec.solver.noise.empty() && spec.solver.nonlinearity.g_is_zero();
  const double tol = deterministic ? 1e-3 : 5e-3;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rep.times.size(); ++i) rows.push_back({rep.times[i], rep.rel_error[i]});
  w.table("series.tsv", {"time", "rel_error"}, rows);
  const bool pass = rep.max_rel_error <= tol;
  w.report({{"verdict", pass ? "pass" : "fail"}, {"lambda", lambda}, {"max_rel_error", rep.max_rel_error}, {"tolerance", tol}});
  log << fmt::format("scaling-check: lambda {} max relative error {:.3e} (tolerance {:g})\n", lambda, rep.max_rel_error, tol);
  return pass ? 0 : 3;
}

}  // namespace

SmrSettings smr_settings(const ExperimentSpec& spec) {
  const auto& c = spec.config;
  SmrSettings s;
  s.solver = spec.solver;
  s.solver.convection = false;
  s.p = c.at("exponents.p").get<double>();
  s.q = c.at("exponents.q").get<double>();
  s.delta = c.at("exponents.delta").get<double>();
  s.kappa = c.at("exponents.kappa").get<double>();
  s.samples = c.at("smr.samples").get<int>();
  s.forcing_kmax = c.at("smr.kmax").get<double>();
  s.f_level = c.at("smr.f_level").get<double>();
  s.g_level = c.at("smr.g_level").get<double>();
  s.g_channels = c.at("smr.g_channels").get<int>();
  s.forcing_seed = c.at("smr.forcing_seed").get<std::uint64_t>();
  return s;
}

namespace {

int run_smr(const ExperimentSpec& spec, Writer& w, std::ostream& log) {
  const SmrSettings s = smr_settings(spec);
  const auto rep = smr_estimate(s);
  SmrSettings scaled = s;
  scaled.theta = spec.config.at("smr.theta").get<double>();
  scaled.samples = std::min(s.samples, 4);
  const auto rep2 = smr_estimate(scaled);
  double homog = 0.0;
  for (std::size_t i = 0; i < rep2.samples.size(); ++i)
    for (int r = 0; r < SmrReport::kRatios; ++r) {
      const double a = rep.samples[i].ratios[static_cast<std::size_t>(r)];
      const double b = rep2.samples[i].ratios[static_cast<std::size_t>(r)];
      homog = std::max(homog, std::abs(a - b) / std::max(std::abs(a), 1e-300));
    }
  bool finite = true;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rep.samples.size(); ++i) {
    std::vector<double> row = {static_cast<double>(i), rep.samples[i].j};
    for (double r : rep.samples[i].ratios) {
      row.push_back(r);
      finite = finite && std::isfinite(r);
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::string> header = {"sample", "J"};
  json stats = json::object();
  for (int r = 0; r < SmrReport::kRatios; ++r) {
    header.emplace_back(SmrReport::ratio_name(r));
    stats[SmrReport::ratio_name(r)] = {{"sup", rep.sup[static_cast<std::size_t>(r)]},
                                       {"median", rep.median[static_cast<std::size_t>(r)]},
                                       {"q90", rep.q90[static_cast<std::size_t>(r)]}};
  }
  w.table("series.tsv", header, rows);
  const bool pass = finite && homog <= 1e-10;
  w.report({{"verdict", pass ? "pass" : "fail"},
            {"ratios", stats},
            {"skipped", rep.skipped},
            {"homogeneity_defect", homog},
            {"theta", scaled.theta}});
  log << fmt::format("smr-estimate: {} samples, sup l2_h1 ratio {:.6g}, homogeneity defect {:.2e}\n",
                     rep.samples.size(), rep.sup[2], homog);
  return pass ? 0 : 3;
}

int run_serrin(const ExperimentSpec& spec, Writer& w, std::ostream& log) {
  SolverConfig cfg = spec.solver;
  const std::string name = serrin_series_name(spec.serrin);
  if (name != "h1") {
    bool present = false;
    for (const auto& n : cfg.norms) present = present || n.name() == name;
    if (!present) cfg.norms.push_back(serrin_norm(spec.serrin));
  }
  const Solver solver(cfg);
  const auto ens = ensemble(spec, solver);
  const double eps = spec.config.at("serrin.epsilon").get<double>();
  std::vector<SerrinAccumulator> acc;
  std::vector<std::vector<double>> rows;
  for (const auto& r : ens) {
    acc.push_back(serrin_monitor(r, spec.serrin, eps));
    const auto& a = acc.back();
    rows.push_back({static_cast<double>(r.path), r.sigma, r.blown_up ? 1.0 : 0.0, a.value, a.finite ? 1.0 : 0.0});
  }
  const auto sum = summarize_serrin(acc);
  w.table("series.tsv", {"path", "sigma", "blown_up", "accumulator", "finite"}, rows);
  const bool pass = sum.counterexamples == 0;
  w.report({{"verdict", pass ? "consistent" : "fail"},
            {"note", "consistency check only: no path may blow up before T with a finite accumulator"},
            {"gamma0", spec.serrin.gamma0},
            {"paths", sum.paths},
            {"survived", sum.survived},
            {"survival_fraction", sum.survival_fraction},
            {"counterexamples", sum.counterexamples}});
  log << fmt::format("serrin-monitor: {} paths, survival {:.3f}, counterexamples {}\n", sum.paths,
                     sum.survival_fraction, sum.counterexamples);
  return pass ? 0 : 3;
}

int run_small_data(const ExperimentSpec& spec, Writer& w, std::ostream& log) {
  const auto levels = numbers("small_data.levels", spec.config.at("small_data.levels"));
  const auto table = small_data_survival(spec.solver, initial_field(spec, 0), levels, spec.paths);
  std::vector<std::vector<double>> rows;
  json jrows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back({r.level, static_cast<double>(r.survived), static_cast<double>(r.paths), r.fraction, r.se});
    jrows.push_back({{"level", r.level}, {"survived", r.survived}, {"fraction", r.fraction}, {"se", r.se}});
    log << fmt::format("small-data: level {:g} survival {:.3f} +- {:.3f}\n", r.level, r.fraction, r.se);
  }
  w.table("series.tsv", {"level", "survived", "paths", "fraction", "se"}, rows);
  w.report({{"verdict", table.monotone ? "pass" : "fail"}, {"rows", jrows}, {"notes", table.notes}});
  return table.monotone ? 0 : 3;
}

int run_exponents(const ExperimentSpec& spec, Writer& w, std::ostream& log) {
  const auto& e = spec.exponents;
  const auto& s = spec.serrin;
  w.table("series.tsv", {"kappa_c", "trace_smoothness", "gamma0"}, {{e.kappa_c, e.trace_smoothness, s.gamma0}});
  w.report({{"verdict", "complete"},
            {"tuple", {{"d", e.tuple.d}, {"p", e.tuple.p}, {"q", e.tuple.q}, {"delta", e.tuple.delta}, {"kappa", e.tuple.kappa}}},
            {"kappa_c", e.kappa_c},
            {"header_ok", e.header_ok},
            {"admissible", e.admissible},
            {"critical", e.critical},
            {"trace_smoothness", e.trace_smoothness},
            {"violations", e.violations},
            {"serrin",
             {{"p0", s.p0}, {"q0", s.q0}, {"delta0", s.delta0}, {"gamma0", s.gamma0}, {"classic", s.classic}, {"in_range", s.in_range}}}});
  log << fmt::format("exponents: kappa_c {:.17g}, admissible {}, critical {}, gamma0 {:.17g}, classic {}\n", e.kappa_c,
                     e.admissible, e.critical, s.gamma0, s.classic);
  return 0;
}

int run_noise_info(const ExperimentSpec& spec, Writer& w, std::ostream& log) {
  const auto& s = spec.solver;
  std::vector<std::vector<double>> rows;
  for (int n = 0; n < s.noise.channels(); ++n) {
    const auto& m = s.noise.modes[static_cast<std::size_t>(n)];
    rows.push_back({static_cast<double>(n), static_cast<double>(m.k[0]), static_cast<double>(m.k[1]),
                    static_cast<double>(m.k[2]), m.amplitude[0], m.amplitude[1], m.amplitude[2], m.phase});
  }
  w.table("series.tsv", {"channel", "k0", "k1", "k2", "b0", "b1", "b2", "phase"}, rows);
  w.report({{"verdict", "complete"},
            {"channels", s.noise.channels()},
            {"sup_bound", noise_sup_bound(s.noise, s.grid)},
            {"bessel_norm_1", noise_bessel_norm(s.noise, s.grid, 1.0)},
            {"divergence_defect", noise_divergence_defect(s.noise, s.grid)},
            {"h_bound", h_bound(s.noise)},
            {"nu_hat", spec.derived.at("nu_hat")}});
  log << fmt::format("noise-info: {} channels, sup bound {:.6g}, nu_hat {:.6g}\n", s.noise.channels(),
                     noise_sup_bound(s.noise, s.grid), spec.derived.at("nu_hat").get<double>());
  return 0;
}

}  // namespace

int run_experiment(const ExperimentSpec& spec, std::ostream& log) {
  Writer w(spec);
  w.manifest(json::object());
  log << fmt::format("{} config {}\n", spec.preset, spec.config_hash);
  for (auto it = spec.derived.begin(); it != spec.derived.end(); ++it) log << "  " << it.key() << " = " << it.value().dump() << "\n";
  if (spec.preset == "simulate") return run_simulate(spec, w, log);
  if (spec.preset == "energy-check") return run_energy_check(spec, w, log);
  if (spec.preset == "scaling-check") return run_scaling(spec, w, log);
  if (spec.preset == "smr-estimate") return run_smr(spec, w, log);
  if (spec.preset == "serrin-monitor") return run_serrin(spec, w, log);
  if (spec.preset == "small-data") return run_small_data(spec, w, log);
  if (spec.preset == "exponents") return run_exponents(spec, w, log);
  return run_noise_info(spec, w, log);
}

}  // namespace kns::cli
