#include "kns/noise.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numbers>

#include "detail.hpp"
#include "kns/error.hpp"
#include "kns/spectral.hpp"

namespace kns {

namespace {

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(Vec3 v) {
  const double m = norm3(v);
  for (auto& x : v) x /= m;
  return v;
}

double min_eig(const Mat3& m, int d) {
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = 0.5 * (m[3 * i + j] + m[3 * j + i]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

// ---------------------------------------------------------------------------
// NoiseFamily

bool NoiseFamily::spatially_constant() const {
  return std::all_of(modes.begin(), modes.end(), [](const NoiseMode& m) { return m.k == Wavevector{0, 0, 0}; });
}

std::vector<double> NoiseFamily::evaluate(const TorusGrid& grid, int n) const {
  if (grid.dim() != dim) throw ConfigurationError("noise family and grid dimensions differ");
  const NoiseMode& m = modes.at(static_cast<std::size_t>(n));
  const std::size_t size = grid.size();
  std::vector<double> out(size * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < size; ++i) {
    double phase = m.phase;
    for (int a = 0; a < dim; ++a) phase += m.k[a] * grid.coordinate(i, a);
    const double c = std::cos(phase);
    for (int j = 0; j < dim; ++j) out[static_cast<std::size_t>(j) * size + i] = m.amplitude[j] * c;
  }
  return out;
}

SpectralField NoiseFamily::spectral(const TorusGrid& grid, int n) const {
  if (grid.dim() != dim) throw ConfigurationError("noise family and grid dimensions differ");
  const NoiseMode& m = modes.at(static_cast<std::size_t>(n));
  SpectralField f(grid, dim);
  if (m.k == Wavevector{0, 0, 0}) {
    for (int j = 0; j < dim; ++j) f.set_mode(j, m.k, m.amplitude[j] * std::cos(m.phase));
  } else {
    const Complex e = 0.5 * std::polar(1.0, m.phase);
    for (int j = 0; j < dim; ++j) f.set_mode(j, m.k, m.amplitude[j] * e);
  }
  f.set_divfree(true);
  return f;
}

NoiseFamily NoiseFamily::scaled(double theta) const {
  NoiseFamily out = *this;
  for (auto& m : out.modes)
    for (auto& a : m.amplitude) a *= theta;
  out.amplitude *= theta;
  return out;
}

NoiseFamily NoiseFamily::none(int dim) {
  NoiseFamily nf;
  nf.dim = dim;
  return nf;
}

NoiseFamily NoiseFamily::constant(int dim, const std::vector<Vec3>& vectors) {
  NoiseFamily nf;
  nf.dim = dim;
  for (const auto& v : vectors) {
    NoiseMode m;
    m.amplitude = v;
    for (int j = dim; j < 3; ++j) m.amplitude[j] = 0.0;
    nf.modes.push_back(m);
  }
  return nf;
}

NoiseFamily synthesize_kraichnan(const TorusGrid& grid, int channels, double zeta, double amplitude,
                                 std::uint64_t seed) {
  if (channels < 1) throw ConfigurationError(fmt::format("noise needs at least one channel, got {}", channels));
  if (!(zeta > 0.0)) throw ConfigurationError(fmt::format("spectrum exponent zeta={} must be positive", zeta));
  const int d = grid.dim();
  const int kmax = (grid.n() - 1) / 3;  // largest |k_j| kept by dealiasing

  std::vector<Wavevector> ks;
  const int k2lo = d == 3 ? -kmax : 0;
  const int k2hi = d == 3 ? kmax : 0;
  for (int a = -kmax; a <= kmax; ++a)
    for (int b = -kmax; b <= kmax; ++b)
      for (int c = k2lo; c <= k2hi; ++c) {
        const Wavevector k{a, b, c};
        const int lead = a != 0 ? a : (b != 0 ? b : c);
        if (lead > 0) ks.push_back(k);
      }
  std::sort(ks.begin(), ks.end(), [](const Wavevector& x, const Wavevector& y) {
    const int nx = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const int ny = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    if (nx != ny) return nx < ny;
    return x > y;
  });

  const int per_k = d == 2 ? 2 : 4;
  const long capacity = static_cast<long>(ks.size()) * per_k;
  if (channels > capacity) {
    throw ConfigurationError(fmt::format("{} noise channels exceed the {} available on a {}^{} grid", channels,
                                         capacity, grid.n(), d));
  }

  NoiseFamily nf;
  nf.dim = d;
  nf.zeta = zeta;
  nf.amplitude = amplitude;
  nf.seed = seed;
  for (const auto& k : ks) {
    if (nf.channels() >= channels) break;
    const double kn = std::sqrt(static_cast<double>(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
    const double amp = amplitude * std::pow(kn, -zeta);
    std::vector<Vec3> pols;
    if (d == 2) {
      pols.push_back({-k[1] / kn, k[0] / kn, 0.0});
    } else {
      const Vec3 kk{k[0] / kn, k[1] / kn, k[2] / kn};
      // helper axis least aligned with k
      int axis = 0;
      for (int j = 1; j < 3; ++j)
        if (std::abs(kk[j]) < std::abs(kk[axis])) axis = j;
      Vec3 ref{0, 0, 0};
      ref[axis] = 1.0;
      const Vec3 e1 = normalized(cross(kk, ref));
      const Vec3 e2 = cross(kk, e1);
      const double theta =
          2.0 * std::numbers::pi * detail::unit_from_hash(detail::hash_mode(seed, k[0], k[1], k[2], 0x70u));
      const double ct = std::cos(theta), st = std::sin(theta);
      Vec3 r1, r2;
      for (int j = 0; j < 3; ++j) {
        r1[j] = ct * e1[j] + st * e2[j];
        r2[j] = -st * e1[j] + ct * e2[j];
      }
      pols = {r1, r2};
    }
    for (const auto& e : pols) {
      for (double phase : {0.0, -0.5 * std::numbers::pi}) {
        if (nf.channels() >= channels) break;
        NoiseMode m;
        m.k = k;
        m.phase = phase;
        for (int j = 0; j < 3; ++j) m.amplitude[j] = amp * e[j];
        nf.modes.push_back(m);
      }
    }
  }
  return nf;
}

double noise_sup_bound(const NoiseFamily& nf, const TorusGrid& grid) {
  const std::size_t size = grid.size();
  std::vector<double> acc(size, 0.0);
  for (int n = 0; n < nf.channels(); ++n) {
    const auto b = nf.evaluate(grid, n);
    for (int j = 0; j < nf.dim; ++j)
      for (std::size_t i = 0; i < size; ++i) acc[i] += b[static_cast<std::size_t>(j) * size + i] * b[static_cast<std::size_t>(j) * size + i];
  }
  double m = 0.0;
  for (double v : acc) m = std::max(m, v);
  return std::sqrt(m);
}

double noise_bessel_norm(const NoiseFamily& nf, const TorusGrid& grid, double s) {
  const double vol = grid.volume();
  double acc = 0.0;
  for (const auto& m : nf.modes) {
    double k2 = 0.0;
    for (int j = 0; j < nf.dim; ++j) k2 += static_cast<double>(m.k[j]) * m.k[j];
    double a2 = 0.0;
    for (int j = 0; j < nf.dim; ++j) a2 += m.amplitude[j] * m.amplitude[j];
    const double mass = k2 == 0.0 ? a2 * std::pow(std::cos(m.phase), 2) * vol : 0.5 * a2 * vol;
    acc += std::pow(1.0 + k2, s) * mass;
  }
  return std::sqrt(acc);
}

double h_bound(const NoiseFamily& nf) {
  double acc = 0.0;
  for (const auto& hn : nf.h)
    for (int i = 0; i < nf.dim; ++i)
      for (int j = 0; j < nf.dim; ++j) acc += hn[3 * i + j] * hn[3 * i + j];
  return std::sqrt(acc);
}

double noise_divergence_defect(const NoiseFamily& nf, const TorusGrid& grid) {
  double worst = 0.0;
  for (int n = 0; n < nf.channels(); ++n) worst = std::max(worst, max_divergence_defect(nf.spectral(grid, n)));
  return worst;
}

// ---------------------------------------------------------------------------
// ViscosityTensor

ViscosityTensor ViscosityTensor::isotropic(int dim, double nu) {
  Mat3 m{};
  for (int i = 0; i < dim; ++i) m[static_cast<std::size_t>(4 * i)] = nu;
  return constant(dim, m);
}

ViscosityTensor ViscosityTensor::constant(int dim, const Mat3& value) {
  if (dim != 2 && dim != 3) throw ConfigurationError("viscosity tensor dimension must be 2 or 3");
  ViscosityTensor t;
  t.dim_ = dim;
  t.constant_ = true;
  t.value_ = value;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i >= dim || j >= dim) t.value_[static_cast<std::size_t>(3 * i + j)] = 0.0;
  return t;
}

ViscosityTensor ViscosityTensor::gridded(const TorusGrid& grid, std::vector<double> values) {
  const int d = grid.dim();
  if (values.size() != grid.size() * static_cast<std::size_t>(d * d)) {
    throw ConfigurationError("gridded viscosity tensor needs d*d values per grid point");
  }
  ViscosityTensor t;
  t.dim_ = d;
  t.constant_ = false;
  t.values_ = std::move(values);
  t.grid_ = grid;
  return t;
}

ViscosityTensor ViscosityTensor::plus(const ViscosityTensor& other, double factor) const {
  if (dim_ != other.dim_) throw ConfigurationError("viscosity tensors of different dimension");
  if (constant_ && other.constant_) {
    Mat3 m{};
    for (std::size_t i = 0; i < 9; ++i) m[i] = value_[i] + factor * other.value_[i];
    auto out = constant(dim_, m);
    out.provenance_ = provenance_;
    return out;
  }
  const TorusGrid g = grid_ ? *grid_ : *other.grid_;
  if ((grid_ && *grid_ != g) || (other.grid_ && *other.grid_ != g)) {
    throw ConfigurationError("gridded viscosity tensors live on different grids");
  }
  const int dd = dim_ * dim_;
  std::vector<double> v(g.size() * static_cast<std::size_t>(dd));
  for (std::size_t p = 0; p < g.size(); ++p)
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        v[p * static_cast<std::size_t>(dd) + static_cast<std::size_t>(dim_ * i + j)] =
            entry(p, i, j) + factor * other.entry(p, i, j);
  auto out = gridded(g, std::move(v));
  out.provenance_ = provenance_;
  return out;
}

double ViscosityTensor::min_eigenvalue(const TorusGrid& grid) const {
  auto at_point = [&](std::size_t p) {
    Mat3 m{};
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) m[static_cast<std::size_t>(3 * i + j)] = entry(p, i, j);
    return min_eig(m, dim_);
  };
  if (constant_) return at_point(0);
  if (grid_ && *grid_ != grid) throw ConfigurationError("viscosity tensor sampled on a different grid");
  double m = at_point(0);
  for (std::size_t p = 1; p < grid.size(); ++p) m = std::min(m, at_point(p));
  return m;
}

double ViscosityTensor::asymmetry() const {
  double worst = 0.0;
  const std::size_t points = constant_ ? 1 : grid_->size();
  for (std::size_t p = 0; p < points; ++p)
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) worst = std::max(worst, std::abs(entry(p, i, j) - entry(p, j, i)));
  return worst;
}

ViscosityTensor ito_correction(const NoiseFamily& nf, const TorusGrid& grid) {
  if (nf.time_dependent) {
    throw UnsupportedModeError(
        "the Ito correction 1/2 sum b_n b_n^T requires transport fields independent of (t, omega)");
  }
  const int d = grid.dim();
  if (nf.dim != d) throw ConfigurationError("noise family and grid dimensions differ");
  const std::size_t size = grid.size();
  const int dd = d * d;
  std::vector<double> v(size * static_cast<std::size_t>(dd), 0.0);
  for (int n = 0; n < nf.channels(); ++n) {
    const auto b = nf.evaluate(grid, n);
    for (std::size_t p = 0; p < size; ++p)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          v[p * static_cast<std::size_t>(dd) + static_cast<std::size_t>(d * i + j)] +=
              0.5 * b[static_cast<std::size_t>(i) * size + p] * b[static_cast<std::size_t>(j) * size + p];
  }
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  bool uniform = true;
  for (std::size_t p = 1; p < size && uniform; ++p)
    for (int e = 0; e < dd; ++e)
      if (std::abs(v[p * static_cast<std::size_t>(dd) + static_cast<std::size_t>(e)] - v[static_cast<std::size_t>(e)]) >
          1e-13 * std::max(scale, 1.0)) {
        uniform = false;
        break;
      }
  if (uniform) {
    Mat3 m{};
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m[static_cast<std::size_t>(3 * i + j)] = v[static_cast<std::size_t>(d * i + j)];
    return ViscosityTensor::constant(d, m);
  }
  return ViscosityTensor::gridded(grid, std::move(v));
}

double coercivity_nu(const ViscosityTensor& a, const NoiseFamily& nf, const TorusGrid& grid) {
  if (nf.empty()) return a.min_eigenvalue(grid);
  // time-dependent families are checked on the fields as sampled
  NoiseFamily frozen = nf;
  frozen.time_dependent = false;
  return a.plus(ito_correction(frozen, grid), -1.0).min_eigenvalue(grid);
}

// ---------------------------------------------------------------------------
// nonlinearity presets

std::string to_string(GKind kind) {
  switch (kind) {
    case GKind::zero: return "zero";
    case GKind::linear: return "linear";
    case GKind::quadratic: return "quadratic";
  }
  return "zero";
}

GKind parse_g_kind(const std::string& name) {
  if (name == "zero") return GKind::zero;
  if (name == "linear") return GKind::linear;
  if (name == "quadratic") return GKind::quadratic;
  throw ConfigurationError("unknown nonlinearity preset '" + name + "' (expected zero, linear or quadratic)");
}

double NonlinearityPreset::gamma_l2() const {
  double s = 0.0;
  for (double g : gamma) s += g * g;
  return std::sqrt(s);
}

bool NonlinearityPreset::g_is_zero() const {
  return g_kind == GKind::zero || std::all_of(gamma.begin(), gamma.end(), [](double g) { return g == 0.0; });
}

bool NonlinearityPreset::f_is_zero() const {
  return f0_linear == 0.0 && !f0_forcing && f_beta == Vec3{0, 0, 0};
}

GrowthCertificate growth_certificate(const NonlinearityPreset& preset, int dim) {
  GrowthCertificate c;
  double forcing_sup = 0.0;
  if (preset.f0_forcing) {
    const auto& F = *preset.f0_forcing;
    const auto v = inverse_transform(F);
    const std::size_t size = F.grid().size();
    for (std::size_t i = 0; i < size; ++i) {
      double m2 = 0.0;
      for (int j = 0; j < F.components(); ++j) m2 += v[static_cast<std::size_t>(j) * size + i] * v[static_cast<std::size_t>(j) * size + i];
      forcing_sup = std::max(forcing_sup, std::sqrt(m2));
    }
  }
  double linear = std::abs(preset.f0_linear);
  for (int j = 0; j < dim; ++j) linear += std::abs(preset.f_beta[j]);
  const double gl2 = preset.g_kind == GKind::zero ? 0.0 : preset.gamma_l2();
  if (preset.g_kind == GKind::linear) {
    linear += gl2;
    c.g_lipschitz = gl2;
  } else if (preset.g_kind == GKind::quadratic) {
    c.m2 = gl2;
    c.g_lipschitz = 2.0 * preset.u_cap * gl2;
  }
  c.m1 = std::max(forcing_sup, linear);
  return c;
}

namespace {

Vec3 g_value(const NonlinearityPreset& p, int n, const Vec3& y, int d) {
  Vec3 out{0, 0, 0};
  const double gam = p.gamma_at(n);
  double factor = 0.0;
  if (p.g_kind == GKind::linear) {
    factor = gam;
  } else if (p.g_kind == GKind::quadratic) {
    double m = 0.0;
    for (int j = 0; j < d; ++j) m += y[j] * y[j];
    factor = gam * std::min(std::sqrt(m), p.u_cap);
  }
  for (int j = 0; j < d; ++j) out[j] = factor * y[j];
  return out;
}

}  // namespace

double spot_check_lipschitz(const NonlinearityPreset& preset, int dim, int channels, double radius,
                            int samples, std::uint64_t seed) {
  const double L = growth_certificate(preset, dim).g_lipschitz;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-radius, radius);
  double worst = -1.0;
  for (int s = 0; s < samples; ++s) {
    Vec3 y{0, 0, 0}, z{0, 0, 0};
    for (int j = 0; j < dim; ++j) {
      y[j] = unif(rng);
      z[j] = unif(rng);
    }
    double dy = 0.0;
    for (int j = 0; j < dim; ++j) dy += (y[j] - z[j]) * (y[j] - z[j]);
    dy = std::sqrt(dy);
    if (dy == 0.0) continue;
    double dg = 0.0;
    for (int n = 0; n < channels; ++n) {
      const Vec3 a = g_value(preset, n, y, dim);
      const Vec3 b = g_value(preset, n, z, dim);
      for (int j = 0; j < dim; ++j) dg += (a[j] - b[j]) * (a[j] - b[j]);
    }
    dg = std::sqrt(dg);
    const double viol = L > 0.0 ? dg / (L * dy) - 1.0 : (dg > 0.0 ? std::numeric_limits<double>::infinity() : -1.0);
    worst = std::max(worst, viol);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Brownian drivers

BrownianDriver::BrownianDriver(std::uint64_t seed, double dt, int channels)
    : seed_(seed), channels_(channels), base_dt_(dt), dt_(dt) {
  if (!(dt > 0.0)) throw ConfigurationError(fmt::format("time step dt={} must be positive", dt));
  if (channels < 0) throw ConfigurationError("channel count must be nonnegative");
}

BrownianDriver::Stream::Stream(const BrownianDriver& d, std::uint64_t path)
    : buffer_(static_cast<std::size_t>(d.channels_)),
      channels_(d.channels_),
      aggregate_(d.aggregate_),
      base_sd_(std::sqrt(d.base_dt_)),
      factor_(1.0 / std::sqrt(d.lambda_)) {
  std::seed_seq seq{static_cast<std::uint32_t>(d.seed_), static_cast<std::uint32_t>(d.seed_ >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), 0x6b6e73u};
  rng_.seed(seq);
}

void BrownianDriver::Stream::next(std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (int a = 0; a < aggregate_; ++a)
    for (int c = 0; c < channels_; ++c) out[static_cast<std::size_t>(c)] += base_sd_ * normal_(rng_);
  if (factor_ != 1.0)
    for (auto& x : out) x *= factor_;
}

std::vector<double> BrownianDriver::path_increments(std::uint64_t path, int steps) const {
  std::vector<double> out(static_cast<std::size_t>(steps) * static_cast<std::size_t>(channels_));
  auto s = stream(path);
  for (int k = 0; k < steps; ++k)
    s.next(std::span<double>(out.data() + static_cast<std::size_t>(k) * channels_, static_cast<std::size_t>(channels_)));
  return out;
}

BrownianDriver BrownianDriver::scaled(double lambda, double h) const {
  if (!(lambda > 0.0) || !(h > 0.0)) throw ConfigurationError("scaled driver needs lambda > 0 and h > 0");
  const double ratio = lambda_ * lambda * h / base_dt_;
  const double r = std::round(ratio);
  if (r < 1.0 || std::abs(ratio - r) > 1e-9 * ratio) {
    throw ConfigurationError(
        fmt::format("lambda*h/dt = {} must be a positive integer to aggregate base increments", ratio));
  }
  BrownianDriver out = *this;
  out.lambda_ = lambda_ * lambda;
  out.aggregate_ = static_cast<int>(r);
  out.dt_ = h;
  return out;
}

std::vector<double> sample_increments(const BrownianDriver& driver, int steps, int paths) {
  if (steps < 1 || paths < 1) throw ConfigurationError("sample_increments needs positive steps and paths");
  const std::size_t block = static_cast<std::size_t>(steps) * static_cast<std::size_t>(driver.channels());
  std::vector<double> out(block * static_cast<std::size_t>(paths));
  for (int p = 0; p < paths; ++p) {
    const auto inc = driver.path_increments(static_cast<std::uint64_t>(p), steps);
    std::copy(inc.begin(), inc.end(), out.begin() + static_cast<std::ptrdiff_t>(block * static_cast<std::size_t>(p)));
  }
  return out;
}

}  // namespace kns
