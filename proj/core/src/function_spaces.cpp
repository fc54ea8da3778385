#include "kns/function_spaces.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "kns/error.hpp"
#include "kns/spectral.hpp"

namespace kns {

double grid_lq_norm(const TorusGrid& grid, std::span<const double> values, int components, double q) {
  if (!(q >= 1.0)) throw ConfigurationError(fmt::format("integrability q={} must be >= 1", q));
  const std::size_t n = grid.size();
  if (values.size() != n * static_cast<std::size_t>(components)) {
    throw ConfigurationError("grid_lq_norm: sample count does not match the grid");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double m2 = 0.0;
    for (int c = 0; c < components; ++c) {
      const double v = values[static_cast<std::size_t>(c) * n + i];
      m2 += v * v;
    }
    const double m = std::sqrt(m2);
    if (std::isinf(q)) {
      acc = std::max(acc, m);
    } else {
      acc += std::pow(m, q);
    }
  }
  if (std::isinf(q)) return acc;
  return std::pow(acc * grid.cell_volume(), 1.0 / q);
}

namespace {

double lq_of_field(const SpectralField& f, double q) {
  if (q == 2.0) return l2_norm(f);
  const auto values = inverse_transform(f);
  return grid_lq_norm(f.grid(), values, f.components(), q);
}

}  // namespace

double bessel_norm(const SpectralField& f, double s, double q) {
  if (!(q >= 1.0)) throw ConfigurationError(fmt::format("integrability q={} must be >= 1", q));
  const auto& tab = wavenumbers(f.grid());
  if (q == 2.0) {
    double acc = 0.0;
    for (int c = 0; c < f.components(); ++c) {
      auto comp = f.component(c);
      for (std::size_t i = 0; i < comp.size(); ++i) {
        if (comp[i] == Complex{}) continue;
        acc += std::pow(1.0 + tab.k2[i], s) * std::norm(comp[i]);
      }
    }
    return std::sqrt(acc * f.grid().volume());
  }
  SpectralField g = f;
  for (int c = 0; c < g.components(); ++c) {
    auto comp = g.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i) comp[i] *= std::pow(1.0 + tab.k2[i], 0.5 * s);
  }
  return lq_of_field(g, q);
}

double lp_cutoff(double r) {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double x = std::exp(-1.0 / (2.0 - r));
  const double y = std::exp(-1.0 / (r - 1.0));
  return x / (x + y);
}

double lp_block(int j, double r) {
  if (j < -1) return 0.0;
  if (j == -1) return lp_cutoff(2.0 * r);
  return lp_cutoff(r / std::ldexp(1.0, j)) - lp_cutoff(r / std::ldexp(1.0, j - 1));
}

int lp_max_block(const TorusGrid& grid) {
  const double kmax = std::sqrt(static_cast<double>(grid.dim())) * (grid.n() / 2);
  int j = 0;
  // block j reaches down to 2^{j-1}
  while (std::ldexp(1.0, j) < kmax) ++j;
  return j;
}

SpectralField lp_project(const SpectralField& f, int j) {
  const auto& tab = wavenumbers(f.grid());
  SpectralField out(f.grid(), f.components());
  for (std::size_t i = 0; i < f.modes(); ++i) {
    const double w = lp_block(j, std::sqrt(tab.k2[i]));
    if (w == 0.0) continue;
    for (int c = 0; c < f.components(); ++c) out.at(c, i) = w * f.at(c, i);
  }
  return out;
}

double besov_norm(const SpectralField& f, double s, double q, double p_besov) {
  if (!(q >= 1.0) || !(p_besov >= 1.0)) {
    throw ConfigurationError(fmt::format("Besov integrabilities must be >= 1 (q={}, p={})", q, p_besov));
  }
  const int jmax = lp_max_block(f.grid());
  double acc = 0.0;
  for (int j = -1; j <= jmax; ++j) {
    const SpectralField block = lp_project(f, j);
    if (block.is_zero()) continue;
    const double term = std::pow(2.0, std::max(j, 0) * s) * lq_of_field(block, q);
    if (std::isinf(p_besov)) {
      acc = std::max(acc, term);
    } else {
      acc += std::pow(term, p_besov);
    }
  }
  return std::isinf(p_besov) ? acc : std::pow(acc, 1.0 / p_besov);
}

namespace {

double weight_integral(double a, double kappa, double t0, double t1) {
  return (std::pow(t1 - a, kappa + 1.0) - std::pow(t0 - a, kappa + 1.0)) / (kappa + 1.0);
}

void check_interval(double a, double b, double kappa) {
  if (!(b > a)) throw ConfigurationError(fmt::format("time interval ({}, {}) is empty", a, b));
  if (!(kappa > -1.0)) throw ConfigurationError(fmt::format("weight exponent kappa={} must exceed -1", kappa));
}

}  // namespace

WeightedTimeGrid WeightedTimeGrid::geometric(double a, double b, double kappa, int cells, int levels) {
  check_interval(a, b, kappa);
  if (cells < 1 || levels < 0) throw ConfigurationError("weighted time grid needs cells >= 1 and levels >= 0");
  WeightedTimeGrid g;
  g.a = a;
  g.b = b;
  g.kappa = kappa;
  const double h = (b - a) / cells;
  auto add = [&](double t0, double t1) {
    g.times.push_back(0.5 * (t0 + t1));
    g.weights.push_back(weight_integral(a, kappa, t0, t1));
  };
  std::vector<double> edges{a};
  for (int m = levels; m >= 0; --m) edges.push_back(a + h * std::ldexp(1.0, -m));
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) add(edges[i], edges[i + 1]);
  for (int c = 1; c < cells; ++c) add(a + c * h, c + 1 == cells ? b : a + (c + 1) * h);
  return g;
}

WeightedTimeGrid WeightedTimeGrid::from_nodes(double a, double b, double kappa, std::span<const double> nodes) {
  check_interval(a, b, kappa);
  if (nodes.empty()) throw ConfigurationError("weighted time grid needs at least one node");
  WeightedTimeGrid g;
  g.a = a;
  g.b = b;
  g.kappa = kappa;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] < a || nodes[i] > b || (i > 0 && !(nodes[i] > nodes[i - 1]))) {
      throw ConfigurationError("time nodes must be increasing and inside the interval");
    }
    const double t0 = i == 0 ? a : 0.5 * (nodes[i - 1] + nodes[i]);
    const double t1 = i + 1 == nodes.size() ? b : 0.5 * (nodes[i] + nodes[i + 1]);
    g.times.push_back(nodes[i]);
    g.weights.push_back(weight_integral(a, kappa, t0, t1));
  }
  return g;
}

double WeightedTimeGrid::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

double weighted_time_norm(std::span<const double> series, const WeightedTimeGrid& grid, double p) {
  if (series.size() != grid.times.size()) {
    throw ConfigurationError(fmt::format("series has {} samples but the time grid has {}", series.size(),
                                         grid.times.size()));
  }
  if (!(p >= 1.0)) throw ConfigurationError(fmt::format("time integrability p={} must be >= 1", p));
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : series) m = std::max(m, std::abs(v));
    return m;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) acc += std::pow(std::abs(series[i]), p) * grid.weights[i];
  return std::pow(acc, 1.0 / p);
}

KappaCritical kappa_critical(int d, double p, double q, double delta) {
  KappaCritical out;
  out.value = -1.0 + 0.5 * p * (2.0 + delta - d / q);
  if (p > 2.0) {
    out.in_range = out.value >= -kExponentTolerance && out.value < 0.5 * p - 1.0 - kExponentTolerance;
  } else {
    out.in_range = p == 2.0 && q == 2.0 && std::abs(out.value) <= kExponentTolerance;
  }
  return out;
}

ParameterReport validate_parameters(const ParameterTuple& t) {
  ParameterReport r;
  r.tuple = t;
  r.kappa_c = kappa_critical(t.d, t.p, t.q, t.delta).value;
  r.trace_smoothness = 1.0 + t.delta - 2.0 * (1.0 + t.kappa) / t.p;
  auto fail = [&](std::string msg) { r.violations.push_back(std::move(msg)); };

  if (t.d != 2 && t.d != 3) fail(fmt::format("dimension d={} must be 2 or 3", t.d));
  const bool endpoint = t.p == 2.0 && t.q == 2.0;
  if (endpoint) {
    r.header_ok = t.kappa == 0.0;
    if (!r.header_ok) fail(fmt::format("p = q = 2 requires kappa = 0, got kappa={}", t.kappa));
  } else {
    bool ok = true;
    if (!(t.p > 2.0)) {
      ok = false;
      fail(fmt::format("p={} must exceed 2 (or p = q = 2)", t.p));
    }
    if (!(t.q >= 2.0)) {
      ok = false;
      fail(fmt::format("q={} must be >= 2", t.q));
    }
    const double kmax = 0.5 * t.p - 1.0;
    if (!(t.kappa >= 0.0 && t.kappa < kmax - kExponentTolerance)) {
      ok = false;
      fail(fmt::format("kappa={} violates 0 <= kappa < p/2 - 1 = {}", t.kappa, kmax));
    }
    r.header_ok = ok;
  }

  bool ok = r.header_ok && r.violations.empty();
  if (!(t.delta > -1.0 && t.delta <= 0.0)) {
    ok = false;
    fail(fmt::format("delta={} must lie in (-1, 0]", t.delta));
  }
  const double qlo = t.d / (2.0 + t.delta);
  const double qhi = t.delta < 0.0 ? t.d / (-t.delta) : kInfinity;
  if (!(t.q > qlo && t.q < qhi)) {
    ok = false;
    fail(fmt::format("q={} must lie in (d/(2+delta), d/(-delta)) = ({}, {})", t.q, qlo, qhi));
  }
  const double lhs = 2.0 * (1.0 + t.kappa) / t.p + t.d / t.q;
  const double rhs = 2.0 + t.delta;
  if (lhs > rhs + kExponentTolerance) {
    ok = false;
    fail(fmt::format("2(1+kappa)/p + d/q = {} exceeds 2 + delta = {}", lhs, rhs));
  }
  r.admissible = ok;
  r.critical = std::abs(lhs - rhs) <= kExponentTolerance;
  return r;
}

SerrinPair serrin_exponents(int d, double p0, double q0, double delta0) {
  SerrinPair s;
  s.d = d;
  s.p0 = p0;
  s.q0 = q0;
  s.delta0 = delta0;
  const double sum = 2.0 / p0 + d / q0;
  s.gamma0 = sum - 1.0;
  s.classic = std::abs(sum - 1.0) <= kExponentTolerance;
  if (s.classic) s.gamma0 = 0.0;
  const bool header = (p0 > 2.0 && q0 >= 2.0) || (p0 == 2.0 && q0 == 2.0);
  const bool general = delta0 >= -0.5 && delta0 <= 0.0 && q0 > d / (2.0 + delta0) &&
                       q0 < d / (1.0 + delta0) && sum <= 2.0 + delta0 + kExponentTolerance;
  const bool planar = delta0 == 0.0 && p0 == 2.0 && q0 == 2.0 && d == 2;
  s.in_range = header && (general || planar);
  return s;
}

int scaling_root(double lambda) {
  if (!(lambda >= 1.0) || !std::isfinite(lambda)) {
    throw ConfigurationError(fmt::format("scale lambda={} must be >= 1 with integer square root", lambda));
  }
  const double r = std::round(std::sqrt(lambda));
  if (std::abs(r * r - lambda) > 1e-12 * lambda) {
    throw ConfigurationError(fmt::format("sqrt(lambda) must be an integer, got lambda={}", lambda));
  }
  return static_cast<int>(r);
}

SpectralField scaling_transform(const SpectralField& u, double lambda) {
  const int r = scaling_root(lambda);
  const TorusGrid& src = u.grid();
  TorusGrid dst(src.dim(), src.n() * r);
  SpectralField out(dst, u.components());
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Wavevector s = src.storage_indices(i);
    bool nyquist = false;
    for (int a = 0; a < src.dim(); ++a) nyquist = nyquist || src.is_nyquist(s[a]);
    if (nyquist && r > 1) continue;
    Wavevector k = src.wavevector(i);
    for (int a = 0; a < src.dim(); ++a) k[a] *= r;
    const std::size_t j = dst.flat_index_of_mode(k);
    for (int c = 0; c < u.components(); ++c) out.at(c, j) = static_cast<double>(r) * u.at(c, i);
  }
  out.set_divfree(u.divfree());
  return out;
}

}  // namespace kns
