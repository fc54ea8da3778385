#include "kns/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "detail.hpp"
#include "kns/ensemble.hpp"
#include "kns/error.hpp"
#include "kns/fields.hpp"
#include "kns/spectral.hpp"

namespace kns {

std::vector<TrajectoryRecord> run_ensemble(const Solver& solver,
                                           const std::function<SpectralField(std::size_t)>& u0, int paths,
                                           const std::function<void(TrajectoryRecord&)>& post) {
  if (paths < 1) throw ConfigurationError("ensemble needs at least one path");
  return parallel_map<TrajectoryRecord>(static_cast<std::size_t>(paths), [&](std::size_t i) {
    TrajectoryRecord rec = solver.run_trajectory(u0(i), static_cast<std::uint64_t>(i));
    if (post) post(rec);
    return rec;
  });
}

// ---------------------------------------------------------------------------

namespace {

/// <a grad u, grad u>_{L^2}
double dissipation_form(const SpectralField& u, const ViscosityTensor& a) {
  const TorusGrid& grid = u.grid();
  const auto& tab = wavenumbers(grid);
  const int d = grid.dim();
  if (a.is_constant()) {
    const Mat3& m = a.constant_value();
    double s = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      double q = 0.0;
      for (int r = 0; r < d; ++r)
        for (int t = 0; t < d; ++t) q += tab.kd[p][r] * m[static_cast<std::size_t>(3 * r + t)] * tab.kd[p][t];
      for (int c = 0; c < u.components(); ++c) s += q * std::norm(u.at(c, p));
    }
    return s * grid.volume();
  }
  std::vector<std::vector<double>> grad;
  for (int j = 0; j < d; ++j) grad.push_back(inverse_transform(spectral_derivative(u, j)));
  double s = 0.0;
  const std::size_t size = grid.size();
  for (int c = 0; c < u.components(); ++c)
    for (std::size_t p = 0; p < size; ++p) {
      const std::size_t off = static_cast<std::size_t>(c) * size + p;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s += a.entry(p, i, j) * grad[static_cast<std::size_t>(i)][off] * grad[static_cast<std::size_t>(j)][off];
    }
  return s * grid.cell_volume();
}

/// (b_n . grad) u, dealiased.
SpectralField transport(const NoiseFamily& nf, int n, const SpectralField& u) {
  const TorusGrid& grid = u.grid();
  const int d = grid.dim();
  const std::size_t size = grid.size();
  const auto b = nf.evaluate(grid, n);
  std::vector<std::vector<double>> grad;
  for (int j = 0; j < d; ++j) grad.push_back(inverse_transform(spectral_derivative(u, j)));
  std::vector<double> out(size * static_cast<std::size_t>(u.components()));
  for (int c = 0; c < u.components(); ++c)
    for (std::size_t p = 0; p < size; ++p) {
      const std::size_t off = static_cast<std::size_t>(c) * size + p;
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += b[static_cast<std::size_t>(j) * size + p] * grad[static_cast<std::size_t>(j)][off];
      out[off] = s;
    }
  return dealias(forward_transform(grid, out, u.components()));
}

}  // namespace

double convective_cancellation_ratio(const Solver& solver, const SpectralField& u) {
  const double num = std::abs(inner_product(u, solver.convective_term(u)));
  const double den = l2_norm(u) * grad_norm_squared(u);
  return den > 0.0 ? num / den : 0.0;
}

EnergyLedger energy_audit(const TrajectoryRecord& traj, const Solver& solver, const LinearForcing* forcing) {
  EnergyLedger led;
  const SolverConfig& cfg = solver.config();
  const double dt = traj.dt;
  const int channels = traj.channels;
  const bool have_snaps =
      !traj.snapshots.empty() && traj.snapshots.size() == static_cast<std::size_t>(traj.steps_taken) + 1;
  const bool have_incs =
      channels == 0 || traj.increments.size() >= static_cast<std::size_t>(traj.steps_taken) * static_cast<std::size_t>(channels);

  // Gronwall constant from the norm series
  if (!traj.l2.empty()) {
    const double base = 1.0 + traj.l2[0] * traj.l2[0];
    double int_grad = 0.0;
    double int_y = 0.0;
    double prev_y = traj.l2[0] * traj.l2[0];
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      if (i > 0) {
        const double h = traj.times[i] - traj.times[i - 1];
        int_grad += 0.5 * h * (traj.grad_sq[i] + traj.grad_sq[i - 1]);
      }
      const double y = traj.l2[i] * traj.l2[i] + int_grad;
      if (i > 0) int_y += 0.5 * (traj.times[i] - traj.times[i - 1]) * (y + prev_y);
      prev_y = y;
      if (std::isfinite(y)) led.gronwall_constant = std::max(led.gronwall_constant, y / (base + int_y));
    }
  }

  if (!have_snaps || !have_incs) {
    led.complete = false;
    led.warning = !have_snaps ? "partial audit: snapshots are not stored for every step (set snapshot_every = 1)"
                              : "partial audit: Brownian increments were not kept (set keep_increments)";
    for (std::size_t i = 0; i < traj.l2.size(); ++i) {
      EnergyStep s;
      s.t = traj.times[i];
      s.energy = traj.l2[i] * traj.l2[i];
      led.steps.push_back(s);
    }
    return led;
  }

  const ViscosityTensor& a = solver.effective_tensor();
  const int noise_channels = cfg.noise.channels();
  led.min_dissipation = kInfinity;
  led.steps.resize(static_cast<std::size_t>(traj.steps_taken));
  parallel_for(led.steps.size(), [&](std::size_t n) {
    const SpectralField& u = traj.snapshots[n];
    const SpectralField& next = traj.snapshots[n + 1];
    EnergyStep& s = led.steps[n];
    s.t = traj.snapshot_times[n];
    s.energy = inner_product(u, u);
    s.delta = inner_product(next, next) - s.energy;
    const double form = dissipation_form(u, a);
    s.dissipation = 2.0 * dt * form;
    const SpectralField conv = cfg.convection ? solver.convective_term(u) : SpectralField(u.grid(), u.components());
    const double uc = inner_product(u, conv);
    s.convective = 2.0 * dt * uc;
    // <drift, u> = -<a grad u, grad u> + <rest, u> - <conv, u>
    double rest = inner_product(solver.drift(u), u) + form + uc;
    const int step = static_cast<int>(n);
    if (forcing) {
      if (const auto* f = forcing->f_at(step)) rest += inner_product(helmholtz_project(*f), u);
    }
    s.forcing = 2.0 * dt * rest;

    std::vector<SpectralField> diff = solver.diffusion(u);
    const auto* g_forcing = forcing ? forcing->g_at(step) : nullptr;
    if (g_forcing) {
      for (std::size_t m = 0; m < g_forcing->size(); ++m) {
        const SpectralField pg = helmholtz_project((*g_forcing)[m]);
        if (m < diff.size()) {
          diff[m] += pg;
        } else {
          diff.push_back(pg);
        }
      }
    }
    double qv = 0.0;
    double mart = 0.0;
    double mart_b = 0.0;
    for (std::size_t m = 0; m < diff.size(); ++m) {
      const double w = traj.increments[n * static_cast<std::size_t>(channels) + m];
      qv += inner_product(diff[m], diff[m]);
      mart += inner_product(diff[m], u) * w;
      if (static_cast<int>(m) < noise_channels) mart_b += inner_product(transport(cfg.noise, static_cast<int>(m), u), u) * w;
    }
    s.quadratic_variation = dt * qv;
    s.martingale_b = 2.0 * mart_b;
    s.martingale_g = 2.0 * (mart - mart_b);
    s.residual = s.delta - (-s.dissipation + s.forcing + s.quadratic_variation + s.martingale_g + s.martingale_b -
                            s.convective);
  });

  for (const auto& s : led.steps) {
    led.max_abs_residual = std::max(led.max_abs_residual, std::abs(s.residual));
    led.min_dissipation = std::min(led.min_dissipation, s.dissipation);
  }
  if (led.steps.empty()) led.min_dissipation = 0.0;
  led.residual_constant = led.max_abs_residual / (dt * dt);
  if (cfg.convection) {
    for (const auto& u : traj.snapshots)
      led.max_convective_ratio = std::max(led.max_convective_ratio, convective_cancellation_ratio(solver, u));
  }
  return led;
}

// ---------------------------------------------------------------------------

namespace {

struct EnergyMoments {
  double sup = 0.0;
  double diss = 0.0;
  double init = 0.0;
};

EnergyMoments energy_moments(const std::vector<TrajectoryRecord>& ens) {
  EnergyMoments m;
  for (const auto& r : ens) {
    double sup = 0.0;
    for (double v : r.l2) sup = std::max(sup, std::isfinite(v) ? v * v : kInfinity);
    double diss = 0.0;
    for (std::size_t i = 1; i < r.times.size(); ++i)
      diss += 0.5 * (r.times[i] - r.times[i - 1]) * (r.grad_sq[i] + r.grad_sq[i - 1]);
    if (!std::isfinite(diss)) diss = kInfinity;
    m.sup += sup;
    m.diss += diss;
    m.init += r.l2.empty() ? 0.0 : r.l2[0] * r.l2[0];
  }
  const double n = static_cast<double>(ens.size());
  m.sup /= n;
  m.diss /= n;
  m.init /= n;
  return m;
}

}  // namespace

EnergyEstimate energy_estimate_check(const std::vector<TrajectoryRecord>& ensemble, double c_t) {
  EnergyEstimate e;
  e.paths = static_cast<int>(ensemble.size());
  e.c_t = c_t;
  if (ensemble.empty()) throw ConfigurationError("energy estimate needs a nonempty ensemble");
  if (ensemble.front().final_state.grid().dim() != 2) {
    e.applicable = false;
    e.note = "not applicable: the energy estimate is a two-dimensional statement";
    return e;
  }
  const EnergyMoments m = energy_moments(ensemble);
  e.mean_sup_energy = m.sup;
  e.mean_dissipation = m.diss;
  e.lhs = m.sup + m.diss;
  e.mean_initial_energy = m.init;
  e.rhs = c_t * (1.0 + m.init);
  e.ratio = e.lhs / (1.0 + m.init);
  e.pass = std::isfinite(e.lhs) && e.lhs <= e.rhs;
  return e;
}

double calibrate_energy_constant(const std::vector<TrajectoryRecord>& reference, double safety) {
  if (reference.empty()) throw ConfigurationError("calibration needs a nonempty ensemble");
  const EnergyMoments m = energy_moments(reference);
  return safety * (m.sup + m.diss) / (1.0 + m.init);
}

// ---------------------------------------------------------------------------

bool SerrinAccumulator::counterexample() const {
  return blown_up && finite && sigma > epsilon && sigma < horizon;
}

NormSpec serrin_norm(const SerrinPair& pair) {
  NormSpec s;
  s.kind = NormSpec::Kind::bessel;
  s.s = pair.gamma0;
  s.q = pair.q0;
  return s;
}

std::string serrin_series_name(const SerrinPair& pair) {
  if (pair.gamma0 == 1.0 && pair.q0 == 2.0) return "h1";
  return serrin_norm(pair).name();
}

SerrinAccumulator serrin_monitor(const TrajectoryRecord& traj, const SerrinPair& pair, double epsilon) {
  SerrinAccumulator acc;
  acc.pair = pair;
  acc.epsilon = epsilon;
  acc.blown_up = traj.blown_up;
  acc.sigma = traj.sigma;
  acc.horizon = traj.T;
  const auto* series = traj.series(serrin_series_name(pair));
  if (!series) {
    throw ConfigurationError(fmt::format("trajectory has no '{}' series; add the norm to the solver config",
                                         serrin_series_name(pair)));
  }
  double total = 0.0;
  double prev_t = 0.0;
  double prev_v = 0.0;
  bool started = false;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    if (t < epsilon) continue;
    const double x = (*series)[i];
    const double v = std::isfinite(x) ? std::pow(std::abs(x), pair.p0) : kInfinity;
    if (!std::isfinite(v)) acc.finite = false;
    if (started) total += 0.5 * (t - prev_t) * (v + prev_v);
    started = true;
    prev_t = t;
    prev_v = v;
    acc.times.push_back(t);
    acc.running.push_back(acc.finite ? total : kInfinity);
  }
  acc.value = acc.finite ? total : kInfinity;
  return acc;
}

SerrinSummary summarize_serrin(const std::vector<SerrinAccumulator>& acc) {
  SerrinSummary s;
  s.paths = static_cast<int>(acc.size());
  for (const auto& a : acc) {
    if (!a.blown_up) ++s.survived;
    if (a.counterexample()) ++s.counterexamples;
  }
  s.survival_fraction = s.paths ? static_cast<double>(s.survived) / s.paths : 1.0;
  return s;
}

// ---------------------------------------------------------------------------

const char* SmrReport::ratio_name(int i) {
  static const char* names[kRatios] = {"lp_bessel", "sup_besov_trace", "l2_h1", "sup_l2"};
  return names[i];
}

LinearForcing smr_forcing(const SmrSettings& s, std::size_t index) {
  const TorusGrid& grid = s.solver.grid;
  const std::uint64_t base = detail::mix64(s.forcing_seed ^ detail::mix64(static_cast<std::uint64_t>(index) + 1));
  auto level = [&](double nominal, std::uint64_t salt) {
    return nominal * (0.5 + detail::unit_from_hash(detail::mix64(base ^ salt)));
  };
  LinearForcing f;
  if (s.f_level > 0.0) {
    SpectralField fld = random_band_limited(grid, s.forcing_kmax, level(s.f_level, 0x11), detail::mix64(base ^ 0x21));
    fld *= s.theta;
    f.f.push_back(std::move(fld));
  }
  if (s.g_level > 0.0 && s.g_channels > 0) {
    std::vector<SpectralField> gs;
    for (int n = 0; n < s.g_channels; ++n) {
      const auto salt = static_cast<std::uint64_t>(0x100 + n);
      SpectralField g = random_band_limited(grid, s.forcing_kmax, level(s.g_level, salt), detail::mix64(base ^ (salt << 8)));
      g *= s.theta;
      gs.push_back(std::move(g));
    }
    f.g.push_back(std::move(gs));
  }
  return f;
}

namespace {

double bessel_l2_stack(const std::vector<SpectralField>& gs, double s, double q) {
  if (gs.empty()) return 0.0;
  const TorusGrid& grid = gs.front().grid();
  const int d = gs.front().components();
  SpectralField stack(grid, d * static_cast<int>(gs.size()));
  for (std::size_t n = 0; n < gs.size(); ++n)
    for (int c = 0; c < d; ++c) {
      auto src = gs[n].component(c);
      auto dst = stack.component(static_cast<int>(n) * d + c);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  return bessel_norm(stack, s, q);
}

/// ( int_a^b |t-a|^kappa dt )^{1/p}
double time_factor(double T, double kappa, double p) {
  return std::pow(std::pow(T, kappa + 1.0) / (kappa + 1.0), 1.0 / p);
}

}  // namespace

SmrSample smr_sample(const Solver& solver, const SmrSettings& s, const LinearForcing& forcing, std::uint64_t path) {
  SmrSample out;
  const double T = solver.config().T;
  const int steps = solver.config().steps();
  // J for forcing held constant in time, or averaged over the steps otherwise
  double jf = 0.0;
  double jg = 0.0;
  const auto wgrid_forcing = WeightedTimeGrid::geometric(0.0, T, s.kappa, std::max(steps, 1));
  if (!forcing.f.empty()) {
    if (forcing.f.size() == 1) {
      jf = bessel_norm(forcing.f[0], -1.0 + s.delta, s.q) * time_factor(T, s.kappa, s.p);
    } else {
      std::vector<double> series;
      for (double t : wgrid_forcing.times)
        series.push_back(bessel_norm(*forcing.f_at(static_cast<int>(t / solver.config().dt)), -1.0 + s.delta, s.q));
      jf = weighted_time_norm(series, wgrid_forcing, s.p);
    }
  }
  if (!forcing.g.empty()) {
    if (forcing.g.size() == 1) {
      jg = bessel_l2_stack(forcing.g[0], s.delta, s.q) * time_factor(T, s.kappa, s.p);
    } else {
      std::vector<double> series;
      for (double t : wgrid_forcing.times)
        series.push_back(bessel_l2_stack(*forcing.g_at(static_cast<int>(t / solver.config().dt)), s.delta, s.q));
      jg = weighted_time_norm(series, wgrid_forcing, s.p);
    }
  }
  out.j = jf + jg;
  if (!(out.j > 0.0)) return out;

  const TrajectoryRecord rec = solver.solve_linear_stokes(forcing, path);
  NormSpec lp_spec{NormSpec::Kind::bessel, 1.0 + s.delta, s.q, 2.0};
  NormSpec tr_spec{NormSpec::Kind::besov, 1.0 + s.delta - 2.0 * (1.0 + s.kappa) / s.p, s.q, s.p};
  const auto* lp_series = rec.series(lp_spec.name());
  const auto* tr_series = rec.series(tr_spec.name());
  if (!lp_series || !tr_series) {
    throw ConfigurationError("SMR solver config must sample " + lp_spec.name() + " and " + tr_spec.name());
  }
  const auto wg = WeightedTimeGrid::from_nodes(0.0, T, s.kappa, rec.times);
  out.lp_norm = weighted_time_norm(*lp_series, wg, s.p);
  const auto w0 = WeightedTimeGrid::from_nodes(0.0, T, 0.0, rec.times);
  out.l2h1 = weighted_time_norm(rec.h1, w0, 2.0);
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    out.trace_norm = std::max(out.trace_norm, (*tr_series)[i]);
    out.cl2 = std::max(out.cl2, rec.l2[i]);
  }
  out.ratios = {out.lp_norm / out.j, out.trace_norm / out.j, out.l2h1 / out.j, out.cl2 / out.j};
  return out;
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0.0;
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

SolverConfig smr_solver_config(const SmrSettings& s) {
  SolverConfig cfg = s.solver;
  cfg.convection = false;
  NormSpec lp_spec{NormSpec::Kind::bessel, 1.0 + s.delta, s.q, 2.0};
  NormSpec tr_spec{NormSpec::Kind::besov, 1.0 + s.delta - 2.0 * (1.0 + s.kappa) / s.p, s.q, s.p};
  for (const auto& spec : {lp_spec, tr_spec}) {
    bool present = false;
    for (const auto& n : cfg.norms) present = present || n.name() == spec.name();
    if (!present) cfg.norms.push_back(spec);
  }
  return cfg;
}

SmrReport smr_estimate(const SmrSettings& s) {
  const SolverConfig cfg = smr_solver_config(s);
  const Solver solver(cfg);
  SmrSettings local = s;
  local.solver = cfg;
  auto samples = parallel_map<SmrSample>(static_cast<std::size_t>(s.samples), [&](std::size_t i) {
    return smr_sample(solver, local, smr_forcing(local, i), static_cast<std::uint64_t>(i));
  });
  SmrReport rep;
  rep.sup.assign(SmrReport::kRatios, 0.0);
  std::vector<std::vector<double>> cols(SmrReport::kRatios);
  for (auto& smp : samples) {
    if (!(smp.j > 0.0)) {
      ++rep.skipped;
      continue;
    }
    for (int r = 0; r < SmrReport::kRatios; ++r) {
      rep.sup[static_cast<std::size_t>(r)] = std::max(rep.sup[static_cast<std::size_t>(r)], smp.ratios[static_cast<std::size_t>(r)]);
      cols[static_cast<std::size_t>(r)].push_back(smp.ratios[static_cast<std::size_t>(r)]);
    }
    rep.samples.push_back(std::move(smp));
  }
  for (int r = 0; r < SmrReport::kRatios; ++r) {
    rep.median.push_back(quantile(cols[static_cast<std::size_t>(r)], 0.5));
    rep.q90.push_back(quantile(cols[static_cast<std::size_t>(r)], 0.9));
  }
  return rep;
}

double smr_single_mode_ratio(double k2, double T) {
  // int_0^T (1 - e^{-k2 t})^2 dt
  const double e1 = -std::expm1(-k2 * T);
  const double e2 = -std::expm1(-2.0 * k2 * T);
  const double integral = T - 2.0 * e1 / k2 + e2 / (2.0 * k2);
  return (1.0 + k2) / k2 * std::sqrt(integral / T);
}

// ---------------------------------------------------------------------------

ScalingReport scaling_check(const SpectralField& u0, const SolverConfig& cfg, double lambda, std::uint64_t path) {
  const int r = scaling_root(lambda);
  if (!cfg.a.is_constant()) throw ConfigurationError("scaling check needs a constant viscosity tensor");
  if (!cfg.noise.spatially_constant() || cfg.noise.time_dependent) {
    throw ConfigurationError("scaling check needs transport fields constant in x and t");
  }
  const auto& nl = cfg.nonlinearity;
  if (!nl.f_is_zero()) throw ConfigurationError("scaling check needs f0 = 0 and f = 0");
  if (!nl.g_is_zero() && nl.g_kind != GKind::quadratic) {
    throw ConfigurationError("scaling check needs g = 0 or the quadratic preset; linear g breaks the scaling");
  }
  if (cfg.noise.has_h()) throw ConfigurationError("scaling check does not support turbulent pressure coefficients");

  SolverConfig base = cfg;
  base.snapshot_every = 1;
  base.keep_increments = false;
  SolverConfig fine = base;
  fine.grid = TorusGrid(cfg.grid.dim(), cfg.grid.n() * r);
  fine.dt = cfg.dt / lambda;
  fine.T = cfg.T / lambda;
  if (nl.f0_forcing) fine.nonlinearity.f0_forcing.reset();

  const int channels = cfg.noise.channels();
  const int steps = base.steps();
  BrownianDriver driver(cfg.seed, cfg.dt, channels);
  const auto inc = driver.path_increments(path, steps);
  const auto inc_fine = driver.scaled(lambda, fine.dt).path_increments(path, steps);

  const Solver s_base(base);
  const Solver s_fine(fine);
  const TrajectoryRecord a = s_base.run_with_increments(u0, inc);
  const TrajectoryRecord b = s_fine.run_with_increments(scaling_transform(dealias(u0), lambda), inc_fine);

  ScalingReport rep;
  rep.lambda = lambda;
  const std::size_t count = std::min(a.snapshots.size(), b.snapshots.size());
  for (std::size_t i = 0; i < count; ++i) {
    const SpectralField ref = scaling_transform(a.snapshots[i], lambda);
    const double den = l2_norm(ref);
    const double num = l2_norm(b.snapshots[i] - ref);
    const double err = den > 0.0 ? num / den : num;
    rep.times.push_back(a.snapshot_times[i]);
    rep.rel_error.push_back(err);
    rep.max_rel_error = std::max(rep.max_rel_error, std::isfinite(err) ? err : kInfinity);
  }
  return rep;
}

// ---------------------------------------------------------------------------

SurvivalTable small_data_survival(const SolverConfig& cfg, const SpectralField& shape, std::vector<double> levels,
                                  int paths) {
  if (paths < 1) throw ConfigurationError("survival table needs at least one path");
  std::sort(levels.begin(), levels.end(), std::greater<>());
  SolverConfig c = cfg;
  c.snapshot_every = 0;
  c.keep_increments = false;
  const Solver solver(c);
  SurvivalTable table;
  for (double level : levels) {
    const auto ens = run_ensemble(solver, [&](std::size_t) { return level * shape; }, paths);
    SurvivalRow row;
    row.level = level;
    row.paths = paths;
    for (const auto& r : ens) row.survived += r.blown_up ? 0 : 1;
    row.fraction = static_cast<double>(row.survived) / paths;
    row.se = std::sqrt(row.fraction * (1.0 - row.fraction) / paths);
    table.rows.push_back(row);
  }
  survival_monotone(table);
  return table;
}

bool survival_monotone(SurvivalTable& table) {
  table.monotone = true;
  table.notes.clear();
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const auto& hi = table.rows[i - 1];
    const auto& lo = table.rows[i];
    const double se = std::sqrt(hi.fraction * (1.0 - hi.fraction) / hi.paths + lo.fraction * (1.0 - lo.fraction) / lo.paths);
    if (lo.fraction < hi.fraction - 2.0 * se) {
      table.monotone = false;
      table.notes.push_back(fmt::format("survival {} at level {} is below {} at level {} by more than 2 se ({})",
                                        lo.fraction, lo.level, hi.fraction, hi.level, se));
    }
  }
  return table.monotone;
}

// ---------------------------------------------------------------------------

RegularizationTable regularization_monitor(const TrajectoryRecord& traj, const std::vector<double>& s_ladder,
                                           double q) {
  RegularizationTable tab;
  tab.smoothness = s_ladder;
  tab.q = q;
  if (traj.snapshots.empty()) {
    tab.note = "no snapshots stored; set snapshot_every > 0";
    return tab;
  }
  tab.note = fmt::format("norms at fixed resolution n = {}; refinement claims only", traj.snapshots.front().grid().n());
  tab.times = traj.snapshot_times;
  tab.norms.resize(traj.snapshots.size());
  parallel_for(traj.snapshots.size(), [&](std::size_t i) {
    for (double s : s_ladder) tab.norms[i].push_back(bessel_norm(traj.snapshots[i], s, q));
  });
  return tab;
}

}  // namespace kns
