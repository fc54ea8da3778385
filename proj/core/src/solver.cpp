#include "kns/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "kns/error.hpp"
#include "kns/fft.hpp"
#include "kns/spectral.hpp"

namespace kns {

std::string to_string(Calculus c) { return c == Calculus::ito ? "ito" : "stratonovich"; }
std::string to_string(Scheme s) { return s == Scheme::semi_implicit ? "semi-implicit" : "exponential"; }

Calculus parse_calculus(const std::string& name) {
  if (name == "ito") return Calculus::ito;
  if (name == "stratonovich") return Calculus::stratonovich;
  throw ConfigurationError("unknown calculus '" + name + "' (expected ito or stratonovich)");
}

Scheme parse_scheme(const std::string& name) {
  if (name == "semi-implicit") return Scheme::semi_implicit;
  if (name == "exponential") return Scheme::exponential;
  throw ConfigurationError("unknown scheme '" + name + "' (expected semi-implicit or exponential)");
}

std::string NormSpec::name() const {
  if (kind == Kind::bessel) return fmt::format("bessel_{:g}_{:g}", s, q);
  return fmt::format("besov_{:g}_{:g}_{:g}", s, q, p);
}

double NormSpec::evaluate(const SpectralField& u) const {
  return kind == Kind::bessel ? bessel_norm(u, s, q) : besov_norm(u, s, q, p);
}

int SolverConfig::steps() const { return static_cast<int>(std::llround(T / dt)); }

void SolverConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigurationError(fmt::format("dt={} must be positive", dt));
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigurationError(fmt::format("horizon T={} must be positive", T));
  const int n = steps();
  if (n < 1 || std::abs(n * dt - T) > 1e-9 * T) {
    throw ConfigurationError(fmt::format("horizon T={} is not a whole number of steps dt={}", T, dt));
  }
  if (a.dim() != grid.dim()) throw ConfigurationError("viscosity tensor and grid dimensions differ");
  if (!a.is_constant() && *a.grid() != grid) throw ConfigurationError("gridded viscosity lives on another grid");
  if (a.asymmetry() > 1e-12) throw ConfigurationError("viscosity tensor must be symmetric");
  if (!noise.empty() && noise.dim != grid.dim()) throw ConfigurationError("noise and grid dimensions differ");
  if (noise.has_h() && static_cast<int>(noise.h.size()) != noise.channels()) {
    throw ConfigurationError("h needs one matrix per noise channel");
  }
  if (calculus == Calculus::stratonovich && noise.time_dependent) {
    throw UnsupportedModeError(
        "Stratonovich form needs transport fields independent of (t, omega); run time-dependent noise in Ito form");
  }
  if (nonlinearity.f0_forcing && (nonlinearity.f0_forcing->grid() != grid ||
                                  nonlinearity.f0_forcing->components() != grid.dim())) {
    throw ConfigurationError("f0 forcing must be a d-component field on the solver grid");
  }
  if (nonlinearity.g_kind == GKind::quadratic && !(nonlinearity.u_cap > 0.0)) {
    throw ConfigurationError("quadratic preset needs a positive cap");
  }
  if (norm_every < 1) throw ConfigurationError("norm_every must be >= 1");
  if (snapshot_every < 0) throw ConfigurationError("snapshot_every must be >= 0");
  if (!(blowup_factor > 1.0)) throw ConfigurationError("blow-up factor must exceed 1");
  if (!allow_noncoercive) {
    const double nu = coercivity_nu(a, noise, grid);
    if (!(nu > 0.0)) {
      throw ConfigurationError(fmt::format(
          "coercivity margin nu = {} is not positive: a - 1/2 sum b_n b_n^T must be positive definite", nu));
    }
  }
}

const SpectralField* LinearForcing::f_at(int step) const {
  if (f.empty()) return nullptr;
  return &f[std::min<std::size_t>(static_cast<std::size_t>(step), f.size() - 1)];
}

const std::vector<SpectralField>* LinearForcing::g_at(int step) const {
  if (g.empty()) return nullptr;
  return &g[std::min<std::size_t>(static_cast<std::size_t>(step), g.size() - 1)];
}

const std::vector<double>* TrajectoryRecord::series(const std::string& name) const {
  if (name == "l2") return &l2;
  if (name == "h1") return &h1;
  if (name == "grad_sq") return &grad_sq;
  for (std::size_t i = 0; i < norm_names.size(); ++i)
    if (norm_names[i] == name) return &norms[i];
  return nullptr;
}

// ---------------------------------------------------------------------------

struct Solver::Operators {
  ViscosityTensor a_eff;
  Mat3 implicit{};  // constant part treated implicitly
  std::optional<ViscosityTensor> remainder;
  std::vector<double> factor;
};

namespace {

using Buffer = std::vector<double>;

/// Physical samples of i kd_axis * f_c.
void physical_derivative(const SpectralField& f, int c, int axis, std::vector<Complex>& scratch, double* out) {
  const TorusGrid& grid = f.grid();
  const auto& tab = wavenumbers(grid);
  scratch.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    scratch[i] = Complex(0.0, static_cast<double>(tab.kd[i][axis])) * f.at(c, i);
  }
  FftPlan::get(grid).backward(scratch.data());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = scratch[i].real();
}

void physical_component(const SpectralField& f, int c, std::vector<Complex>& scratch, double* out) {
  const TorusGrid& grid = f.grid();
  auto comp = f.component(c);
  scratch.assign(comp.begin(), comp.end());
  FftPlan::get(grid).backward(scratch.data());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = scratch[i].real();
}

/// gradient[c*d + j] = d_j u^c on the grid
std::vector<Buffer> physical_gradient(const SpectralField& u) {
  const int d = u.grid().dim();
  std::vector<Buffer> out(static_cast<std::size_t>(d * d), Buffer(u.grid().size()));
  std::vector<Complex> scratch;
  for (int c = 0; c < u.components(); ++c)
    for (int j = 0; j < d; ++j) physical_derivative(u, c, j, scratch, out[static_cast<std::size_t>(c * d + j)].data());
  return out;
}

Mat3 isotropic_mat(int d, double nu) {
  Mat3 m{};
  for (int i = 0; i < d; ++i) m[static_cast<std::size_t>(4 * i)] = nu;
  return m;
}

}  // namespace

Solver::Solver(SolverConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const TorusGrid& grid = cfg_.grid;
  const auto& tab = wavenumbers(grid);
  const int d = grid.dim();

  for (int n = 0; n < cfg_.noise.channels(); ++n) {
    b_grid_.push_back(cfg_.noise.evaluate(grid, n));
    b_constant_.push_back(cfg_.noise.modes[static_cast<std::size_t>(n)].k == Wavevector{0, 0, 0});
  }

  auto build = [&](const ViscosityTensor& a_eff) {
    auto ops = std::make_unique<Operators>();
    ops->a_eff = a_eff;
    if (a_eff.is_constant()) {
      ops->implicit = a_eff.constant_value();
    } else {
      const double floor = a_eff.min_eigenvalue(grid);
      ops->implicit = isotropic_mat(d, std::max(floor, 0.0));
      ops->remainder = a_eff.plus(ViscosityTensor::constant(d, ops->implicit), -1.0);
    }
    ops->factor.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double q = 0.0;
      for (int r = 0; r < d; ++r)
        for (int s = 0; s < d; ++s) q += tab.kd[i][r] * ops->implicit[static_cast<std::size_t>(3 * r + s)] * tab.kd[i][s];
      ops->factor[i] = cfg_.scheme == Scheme::semi_implicit ? 1.0 / (1.0 + cfg_.dt * q) : std::exp(-cfg_.dt * q);
    }
    return ops;
  };

  ito_ = build(cfg_.a);
  if (!cfg_.noise.time_dependent) {
    a_b_ = std::make_unique<ViscosityTensor>(ito_correction(cfg_.noise, grid));
    ViscosityTensor corrected = cfg_.a.plus(*a_b_);
    corrected.set_provenance(ViscosityTensor::Provenance::ito_correction_included);
    strat_ = build(corrected);
  }
}

Solver::~Solver() = default;
Solver::Solver(Solver&&) noexcept = default;
Solver& Solver::operator=(Solver&&) noexcept = default;

const ViscosityTensor& Solver::ito_correction_tensor() const {
  if (!a_b_) throw UnsupportedModeError("no Ito correction for time-dependent transport fields");
  return *a_b_;
}

const ViscosityTensor& Solver::effective_tensor() const {
  return cfg_.calculus == Calculus::ito ? ito_->a_eff : strat_->a_eff;
}

SpectralField Solver::viscous_term(const SpectralField& u, const ViscosityTensor& a) const {
  const TorusGrid& grid = u.grid();
  const auto& tab = wavenumbers(grid);
  const int d = grid.dim();
  SpectralField out(grid, u.components());
  if (a.is_constant()) {
    const Mat3& m = a.constant_value();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double q = 0.0;
      for (int r = 0; r < d; ++r)
        for (int s = 0; s < d; ++s) q += tab.kd[i][r] * m[static_cast<std::size_t>(3 * r + s)] * tab.kd[i][s];
      for (int c = 0; c < u.components(); ++c) out.at(c, i) = -q * u.at(c, i);
    }
    return out;
  }
  // sum_ij d_i (a^{ij} d_j u^k), products on the grid
  const auto grad = physical_gradient(u);
  const std::size_t size = grid.size();
  Buffer flux(size);
  std::vector<Complex> coeffs(size);
  for (int k = 0; k < u.components(); ++k) {
    for (int i = 0; i < d; ++i) {
      for (std::size_t p = 0; p < size; ++p) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += a.entry(p, i, j) * grad[static_cast<std::size_t>(k * d + j)][p];
        flux[p] = s;
      }
      forward_component(grid, flux, coeffs);
      for (std::size_t p = 0; p < size; ++p) {
        if (!tab.kept[p]) continue;
        out.at(k, p) += Complex(0.0, static_cast<double>(tab.kd[p][i])) * coeffs[p];
      }
    }
  }
  return out;
}

SpectralField Solver::convective_term(const SpectralField& u) const {
  const TorusGrid& grid = u.grid();
  const auto& tab = wavenumbers(grid);
  const int d = grid.dim();
  const std::size_t size = grid.size();
  std::vector<Buffer> phys(static_cast<std::size_t>(d), Buffer(size));
  std::vector<Complex> scratch;
  for (int c = 0; c < d; ++c) physical_component(u, c, scratch, phys[static_cast<std::size_t>(c)].data());
  SpectralField out(grid, d);
  Buffer prod(size);
  std::vector<Complex> coeffs(size);
  for (int j = 0; j < d; ++j) {
    for (int k = j; k < d; ++k) {
      for (std::size_t p = 0; p < size; ++p) prod[p] = phys[static_cast<std::size_t>(j)][p] * phys[static_cast<std::size_t>(k)][p];
      forward_component(grid, prod, coeffs);
      // div(u (x) u)^k += d_j (u^j u^k), and symmetric counterpart
      for (std::size_t p = 0; p < size; ++p) {
        if (!tab.kept[p]) continue;
        out.at(k, p) += Complex(0.0, static_cast<double>(tab.kd[p][j])) * coeffs[p];
        if (k != j) out.at(j, p) += Complex(0.0, static_cast<double>(tab.kd[p][k])) * coeffs[p];
      }
    }
  }
  return helmholtz_project(out);
}

namespace {

struct NoiseTerms {
  std::vector<SpectralField> raw;  // (b_n . grad) u + g_n(u) (+ forcing g_n), dealiased
};

}  // namespace

static NoiseTerms raw_noise_terms(const SolverConfig& cfg, const std::vector<std::vector<double>>& b_grid,
                                  const std::vector<bool>& b_constant, const SpectralField& u,
                                  const std::vector<SpectralField>* g_forcing) {
  NoiseTerms out;
  const int channels = cfg.noise.channels();
  const int forced = g_forcing ? static_cast<int>(g_forcing->size()) : 0;
  const int total = std::max(channels, forced);
  if (total == 0) return out;
  const TorusGrid& grid = u.grid();
  const auto& tab = wavenumbers(grid);
  const int d = grid.dim();
  const std::size_t size = grid.size();

  bool need_grad = false;
  for (int n = 0; n < channels; ++n) need_grad = need_grad || !b_constant[static_cast<std::size_t>(n)];
  std::vector<Buffer> grad;
  if (need_grad) grad = physical_gradient(u);

  // quadratic shape u min(|u|, cap), shared by all channels
  std::optional<SpectralField> quad;
  const auto& nl = cfg.nonlinearity;
  if (nl.g_kind == GKind::quadratic && !nl.g_is_zero()) {
    std::vector<Buffer> phys(static_cast<std::size_t>(d), Buffer(size));
    std::vector<Complex> scratch;
    for (int c = 0; c < d; ++c) physical_component(u, c, scratch, phys[static_cast<std::size_t>(c)].data());
    std::vector<double> shaped(size * static_cast<std::size_t>(d));
    for (std::size_t p = 0; p < size; ++p) {
      double m2 = 0.0;
      for (int c = 0; c < d; ++c) m2 += phys[static_cast<std::size_t>(c)][p] * phys[static_cast<std::size_t>(c)][p];
      const double f = std::min(std::sqrt(m2), nl.u_cap);
      for (int c = 0; c < d; ++c) shaped[static_cast<std::size_t>(c) * size + p] = f * phys[static_cast<std::size_t>(c)][p];
    }
    quad = dealias(forward_transform(grid, shaped, d));
  }

  Buffer prod(size);
  std::vector<Complex> coeffs(size);
  for (int n = 0; n < total; ++n) {
    SpectralField v(grid, d);
    if (n < channels) {
      const auto& b = b_grid[static_cast<std::size_t>(n)];
      if (b_constant[static_cast<std::size_t>(n)]) {
        for (std::size_t p = 0; p < size; ++p) {
          double bk = 0.0;
          for (int j = 0; j < d; ++j) bk += b[static_cast<std::size_t>(j) * size] * tab.kd[p][j];
          for (int c = 0; c < d; ++c) v.at(c, p) = Complex(0.0, bk) * u.at(c, p);
        }
      } else {
        for (int c = 0; c < d; ++c) {
          for (std::size_t p = 0; p < size; ++p) {
            double s = 0.0;
            for (int j = 0; j < d; ++j) s += b[static_cast<std::size_t>(j) * size + p] * grad[static_cast<std::size_t>(c * d + j)][p];
            prod[p] = s;
          }
          forward_component(grid, prod, coeffs);
          for (std::size_t p = 0; p < size; ++p)
            if (tab.kept[p]) v.at(c, p) = coeffs[p];
        }
      }
      const double gam = nl.gamma_at(n);
      if (gam != 0.0) {
        if (nl.g_kind == GKind::linear) {
          v.axpy(gam, u);
        } else if (nl.g_kind == GKind::quadratic) {
          v.axpy(gam, *quad);
        }
      }
    }
    if (n < forced) v += (*g_forcing)[static_cast<std::size_t>(n)];
    out.raw.push_back(std::move(v));
  }
  return out;
}

SpectralField Solver::turbulent_pressure_term(const SpectralField& u) const {
  SpectralField out(u.grid(), u.grid().dim());
  if (!cfg_.noise.has_h()) return out;
  const auto terms = raw_noise_terms(cfg_, b_grid_, b_constant_, u, nullptr);
  const int d = u.grid().dim();
  for (int n = 0; n < cfg_.noise.channels(); ++n) {
    const auto& raw = terms.raw[static_cast<std::size_t>(n)];
    const SpectralField grad_part = raw - helmholtz_project(raw);
    const Mat3& h = cfg_.noise.h[static_cast<std::size_t>(n)];
    // f~^k = sum_j v^j h^{j,k}
    for (int k = 0; k < d; ++k)
      for (int j = 0; j < d; ++j) {
        const double w = h[static_cast<std::size_t>(3 * j + k)];
        if (w == 0.0) continue;
        for (std::size_t p = 0; p < u.modes(); ++p) out.at(k, p) += w * grad_part.at(j, p);
      }
  }
  return dealias(out);
}

SpectralField Solver::explicit_drift(const SpectralField& u, const Operators& ops, const LinearForcing* forcing,
                                     int step) const {
  const TorusGrid& grid = u.grid();
  const auto& tab = wavenumbers(grid);
  const int d = grid.dim();
  SpectralField acc(grid, d);
  if (ops.remainder) acc += viscous_term(u, *ops.remainder);
  const auto& nl = cfg_.nonlinearity;
  if (nl.f0_linear != 0.0) acc.axpy(nl.f0_linear, u);
  if (nl.f0_forcing) acc += *nl.f0_forcing;
  if (nl.f_beta != Vec3{0, 0, 0}) {
    for (std::size_t p = 0; p < grid.size(); ++p) {
      double bk = 0.0;
      for (int j = 0; j < d; ++j) bk += nl.f_beta[j] * tab.kd[p][j];
      for (int c = 0; c < d; ++c) acc.at(c, p) += Complex(0.0, bk) * u.at(c, p);
    }
  }
  if (cfg_.noise.has_h()) acc += turbulent_pressure_term(u);
  if (forcing) {
    if (const auto* f = forcing->f_at(step)) acc += *f;
  }
  SpectralField out = helmholtz_project(acc);
  if (cfg_.convection) out -= convective_term(u);
  return out;
}

SpectralField Solver::drift(const SpectralField& u) const {
  const Operators& ops = cfg_.calculus == Calculus::ito ? *ito_ : *strat_;
  SpectralField out = explicit_drift(u, ops, nullptr, 0);
  out += helmholtz_project(viscous_term(u, ViscosityTensor::constant(u.grid().dim(), ops.implicit)));
  out.set_divfree(true);
  return out;
}

std::vector<SpectralField> Solver::diffusion(const SpectralField& u) const {
  auto terms = raw_noise_terms(cfg_, b_grid_, b_constant_, u, nullptr);
  std::vector<SpectralField> out;
  out.reserve(terms.raw.size());
  for (auto& v : terms.raw) out.push_back(helmholtz_project(v));
  return out;
}

SpectralField Solver::advance(const SpectralField& u, std::span<const double> increments,
                              const LinearForcing* forcing, int step, const Operators& ops) const {
  SpectralField next = u;
  next.axpy(cfg_.dt, explicit_drift(u, ops, forcing, step));
  const auto* g_forcing = forcing ? forcing->g_at(step) : nullptr;
  auto terms = raw_noise_terms(cfg_, b_grid_, b_constant_, u, g_forcing);
  if (increments.size() < terms.raw.size()) {
    throw ConfigurationError(fmt::format("step needs {} Brownian increments, got {}", terms.raw.size(),
                                         increments.size()));
  }
  for (std::size_t n = 0; n < terms.raw.size(); ++n) {
    if (increments[n] == 0.0) continue;
    next.axpy(increments[n], helmholtz_project(terms.raw[n]));
  }
  const auto& tab = wavenumbers(u.grid());
  for (int c = 0; c < next.components(); ++c) {
    auto comp = next.component(c);
    for (std::size_t p = 0; p < comp.size(); ++p) comp[p] = tab.kept[p] ? comp[p] * ops.factor[p] : Complex{};
  }
  SpectralField out = helmholtz_project(next);
  out.set_divfree(true);
  return out;
}

SpectralField Solver::step_ito(const SpectralField& u, std::span<const double> increments,
                               const LinearForcing* forcing, int step) const {
  return advance(u, increments, forcing, step, *ito_);
}

SpectralField Solver::step_stratonovich(const SpectralField& u, std::span<const double> increments,
                                        const LinearForcing* forcing, int step) const {
  if (!strat_) throw UnsupportedModeError("Stratonovich step needs transport fields independent of (t, omega)");
  return advance(u, increments, forcing, step, *strat_);
}

SpectralField Solver::step(const SpectralField& u, std::span<const double> increments,
                           const LinearForcing* forcing, int step_index) const {
  return cfg_.calculus == Calculus::ito ? step_ito(u, increments, forcing, step_index)
                                        : step_stratonovich(u, increments, forcing, step_index);
}

TrajectoryRecord Solver::run_trajectory(const SpectralField& u0, std::uint64_t path) const {
  return run(u0, nullptr, path, {});
}

TrajectoryRecord Solver::solve_linear_stokes(const LinearForcing& forcing, std::uint64_t path) const {
  if (cfg_.convection || !cfg_.nonlinearity.g_is_zero() || !cfg_.nonlinearity.f_is_zero()) {
    throw ConfigurationError("solve_linear_stokes needs the linear system: convection off, no f0/f/g presets");
  }
  const int channels = cfg_.noise.channels();
  for (const auto& gs : forcing.g)
    if (static_cast<int>(gs.size()) > std::max(channels, 1) && channels > 0) {
      throw ConfigurationError("more g forcing channels than noise channels");
    }
  return run(SpectralField(cfg_.grid, cfg_.grid.dim()), &forcing, path, {});
}

TrajectoryRecord Solver::run_with_increments(const SpectralField& u0, std::span<const double> increments,
                                             const LinearForcing* forcing) const {
  return run(u0, forcing, 0, increments);
}

TrajectoryRecord Solver::run(const SpectralField& u0_in, const LinearForcing* forcing, std::uint64_t path,
                             std::span<const double> fixed) const {
  const TorusGrid& grid = cfg_.grid;
  if (u0_in.grid() != grid || u0_in.components() != grid.dim()) {
    throw ConfigurationError("initial data must be a d-component field on the solver grid");
  }
  const Operators& ops = cfg_.calculus == Calculus::ito ? *ito_ : *strat_;
  int channels = cfg_.noise.channels();
  if (forcing)
    for (const auto& gs : forcing->g) channels = std::max(channels, static_cast<int>(gs.size()));
  const int steps = cfg_.steps();
  if (!fixed.empty() && fixed.size() < static_cast<std::size_t>(steps) * static_cast<std::size_t>(channels)) {
    throw ConfigurationError("explicit increments do not cover every step and channel");
  }

  TrajectoryRecord rec;
  rec.dt = cfg_.dt;
  rec.T = cfg_.T;
  rec.seed = cfg_.seed;
  rec.path = path;
  rec.channels = channels;
  for (const auto& n : cfg_.norms) rec.norm_names.push_back(n.name());
  rec.norms.resize(cfg_.norms.size());

  SpectralField u = dealias(u0_in);
  if (max_divergence_defect(u) > 1e-12) {
    u = helmholtz_project(u);
    rec.auto_projected = true;
  }
  u.set_divfree(true);

  auto sample = [&](double t, const SpectralField& f) {
    rec.times.push_back(t);
    rec.l2.push_back(l2_norm(f));
    rec.h1.push_back(bessel_norm(f, 1.0, 2.0));
    rec.grad_sq.push_back(grad_norm_squared(f));
    for (std::size_t i = 0; i < cfg_.norms.size(); ++i) rec.norms[i].push_back(cfg_.norms[i].evaluate(f));
  };
  auto snap = [&](double t, const SpectralField& f) {
    rec.snapshot_times.push_back(t);
    rec.snapshots.push_back(f);
  };

  const double e0 = inner_product(u, u);
  const double threshold = cfg_.blowup_factor * std::max(e0, cfg_.blowup_reference);
  sample(0.0, u);
  if (cfg_.snapshot_every > 0) snap(0.0, u);

  BrownianDriver driver(cfg_.seed, cfg_.dt, channels);
  auto stream = driver.stream(path);
  std::vector<double> inc(static_cast<std::size_t>(channels));
  if (cfg_.keep_increments) rec.increments.reserve(static_cast<std::size_t>(steps) * inc.size());

  rec.sigma = cfg_.T;
  for (int n = 0; n < steps; ++n) {
    if (fixed.empty()) {
      stream.next(inc);
    } else {
      std::copy_n(fixed.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(n) * inc.size()), inc.size(),
                  inc.begin());
    }
    if (cfg_.keep_increments) rec.increments.insert(rec.increments.end(), inc.begin(), inc.end());
    u = advance(u, inc, forcing, n, ops);
    if (n == cfg_.fault_step) u.data()[0] = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
    rec.steps_taken = n + 1;
    const double t = (n + 1) * cfg_.dt;
    const double e = inner_product(u, u);
    const bool finite = std::isfinite(e) && u.all_finite();
    if (!finite || e > threshold) {
      rec.blown_up = true;
      rec.non_finite = !finite;
      rec.sigma = t;
      sample(t, u);
      if (cfg_.snapshot_every > 0) snap(t, u);
      break;
    }
    const bool last = n + 1 == steps;
    if ((n + 1) % cfg_.norm_every == 0 || last) sample(t, u);
    if (cfg_.snapshot_every > 0 && ((n + 1) % cfg_.snapshot_every == 0 || last)) snap(t, u);
  }
  rec.final_state = std::move(u);
  return rec;
}

}  // namespace kns
