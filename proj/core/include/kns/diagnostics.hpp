#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kns/function_spaces.hpp"
#include "kns/solver.hpp"

namespace kns {

/// Runs `paths` trajectories in parallel; path i starts from u0(i) and uses
/// Brownian stream i. `post` (optional) may reduce a record in place before
/// it is stored, e.g. to drop snapshots.
std::vector<TrajectoryRecord> run_ensemble(const Solver& solver,
                                           const std::function<SpectralField(std::size_t)>& u0, int paths,
                                           const std::function<void(TrajectoryRecord&)>& post = {});

// ---------------------------------------------------------------------------
// energy identity

/// Terms of the discrete Ito energy identity over one step u_n -> u_{n+1},
/// all evaluated at u_n.
struct EnergyStep {
  double t = 0.0;
  double energy = 0.0;       ///< |u_n|^2
  double delta = 0.0;        ///< |u_{n+1}|^2 - |u_n|^2
  double dissipation = 0.0;  ///< 2 dt <a grad u, grad u>
  double forcing = 0.0;      ///< 2 dt <f0(u) + div f(u) + f~(u) + f, u>
  double quadratic_variation = 0.0;  ///< dt sum_n |P[(b_n.grad)u + g_n]|^2
  double martingale_g = 0.0;  ///< 2 sum_n <g_n, u> dW_n
  double martingale_b = 0.0;  ///< 2 sum_n <(b_n.grad)u, u> dW_n
  double convective = 0.0;    ///< 2 dt <u, P div(u (x) u)>
  double residual = 0.0;
};

struct EnergyLedger {
  std::vector<EnergyStep> steps;
  double max_abs_residual = 0.0;
  double residual_constant = 0.0;  ///< max |residual| / dt^2
  double max_convective_ratio = 0.0;  ///< |<u, P div(u (x) u)>| / (|u| |grad u|^2)
  double min_dissipation = 0.0;
  /// smallest C with y(t) <= C (1 + |u0|^2) + C int_0^t y, y = |u|^2 + int |grad u|^2
  double gronwall_constant = 0.0;
  bool complete = true;
  std::string warning;
};

/// Needs every-step snapshots and, with noise, the recorded increments;
/// otherwise returns a partial ledger with a warning.
EnergyLedger energy_audit(const TrajectoryRecord& traj, const Solver& solver,
                          const LinearForcing* forcing = nullptr);

/// |<u, P div(u (x) u)>| / (|u|_{L^2} |grad u|_{L^2}^2).
double convective_cancellation_ratio(const Solver& solver, const SpectralField& u);

// ---------------------------------------------------------------------------
// energy estimate

struct EnergyEstimate {
  bool applicable = true;
  int paths = 0;
  double mean_sup_energy = 0.0;    ///< E sup_t |u|^2
  double mean_dissipation = 0.0;   ///< E int |grad u|^2
  double lhs = 0.0;
  double mean_initial_energy = 0.0;  ///< E |u0|^2
  double c_t = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  ///< lhs / (1 + E|u0|^2)
  bool pass = false;
  std::string note;
};

/// lhs = E sup |u|^2 + E int |grad u|^2 from every-step norm series;
/// pass iff lhs <= c_t (1 + E|u0|^2). Not applicable unless d = 2.
EnergyEstimate energy_estimate_check(const std::vector<TrajectoryRecord>& ensemble, double c_t);

/// Frozen constant: safety * lhs / (1 + E|u0|^2) on a reference ensemble.
double calibrate_energy_constant(const std::vector<TrajectoryRecord>& reference, double safety);

// ---------------------------------------------------------------------------
// Serrin monitor

struct SerrinAccumulator {
  SerrinPair pair;
  double epsilon = 0.0;
  std::vector<double> times;
  std::vector<double> running;  ///< int_eps^t |u|^{p0}_{H^{gamma0,q0}} ds
  double value = 0.0;
  bool finite = true;
  bool blown_up = false;
  double sigma = 0.0;
  double horizon = 0.0;
  /// A blow-up strictly inside (eps, T) together with a finite accumulator.
  bool counterexample() const;
};

/// Name of the trajectory series holding |u|_{H^{gamma0,q0}}.
std::string serrin_series_name(const SerrinPair& pair);
NormSpec serrin_norm(const SerrinPair& pair);
SerrinAccumulator serrin_monitor(const TrajectoryRecord& traj, const SerrinPair& pair, double epsilon);

struct SerrinSummary {
  int paths = 0;
  int survived = 0;        ///< sigma = T
  int counterexamples = 0;
  double survival_fraction = 0.0;
};
SerrinSummary summarize_serrin(const std::vector<SerrinAccumulator>& acc);

// ---------------------------------------------------------------------------
// stochastic maximal regularity

struct SmrSettings {
  SolverConfig solver;  ///< linear system: convection off, no presets
  double p = 2.0;
  double q = 2.0;
  double kappa = 0.0;
  double delta = 0.0;
  int samples = 64;
  double forcing_kmax = 4.0;
  double f_level = 1.0;
  double g_level = 0.5;
  int g_channels = 2;
  std::uint64_t forcing_seed = 1;
  double theta = 1.0;  ///< overall scale of (f, g)
};

struct SmrSample {
  double j = 0.0;  ///< J_{p,q,kappa}(f, g)
  double lp_norm = 0.0;     ///< |u|_{L^p(w_kappa; H^{1+delta,q})}
  double trace_norm = 0.0;  ///< sup_t |u|_{B^{1+delta-2(1+kappa)/p}_{q,p}}
  double l2h1 = 0.0;        ///< |u|_{L^2(H^{1,2})}
  double cl2 = 0.0;         ///< sup_t |u|_{L^2}
  std::vector<double> ratios;  ///< each norm above divided by j
};

struct SmrReport {
  static constexpr int kRatios = 4;
  static const char* ratio_name(int i);
  std::vector<SmrSample> samples;
  std::vector<double> sup;     ///< per ratio
  std::vector<double> median;  ///< per ratio
  std::vector<double> q90;     ///< per ratio
  int skipped = 0;
};

/// s.solver with convection off and the two norm series smr_sample reads.
SolverConfig smr_solver_config(const SmrSettings& s);
/// Forcing of sample `index`: time-constant random band-limited f and g_n.
LinearForcing smr_forcing(const SmrSettings& s, std::size_t index);
SmrSample smr_sample(const Solver& solver, const SmrSettings& s, const LinearForcing& forcing,
                     std::uint64_t path);
SmrReport smr_estimate(const SmrSettings& s);

/// Closed-form L^2(H^1)/J ratio for a time-constant single mode |k| forcing
/// of du = (lap u + f) dt on (0, T), u(0) = 0.
double smr_single_mode_ratio(double k2, double T);

// ---------------------------------------------------------------------------
// scaling

struct ScalingReport {
  double lambda = 1.0;
  std::vector<double> times;  ///< base-clock times
  std::vector<double> rel_error;
  double max_rel_error = 0.0;
};

/// Base run from u0 on (n, dt) against the companion run from (u0)_lambda on
/// (sqrt(lambda) n, dt / lambda) driven by the scaled increments.
ScalingReport scaling_check(const SpectralField& u0, const SolverConfig& cfg, double lambda,
                            std::uint64_t path = 0);

// ---------------------------------------------------------------------------
// small data

struct SurvivalRow {
  double level = 0.0;
  int paths = 0;
  int survived = 0;
  double fraction = 0.0;
  double se = 0.0;
};

struct SurvivalTable {
  std::vector<SurvivalRow> rows;  ///< levels in decreasing order
  bool monotone = true;
  std::vector<std::string> notes;
};

/// u0 = level * shape for each level, shared Brownian paths across levels.
SurvivalTable small_data_survival(const SolverConfig& cfg, const SpectralField& shape, std::vector<double> levels,
                                  int paths);
/// survival(L2) >= survival(L1) - 2 se for consecutive levels L1 > L2, with
/// se the binomial standard error of the difference.
bool survival_monotone(SurvivalTable& table);

// ---------------------------------------------------------------------------
// regularization

struct RegularizationTable {
  std::vector<double> times;
  std::vector<double> smoothness;
  double q = 2.0;
  std::vector<std::vector<double>> norms;  ///< [time][s]
  std::string note;
};

RegularizationTable regularization_monitor(const TrajectoryRecord& traj, const std::vector<double>& s_ladder,
                                           double q = 2.0);

}  // namespace kns
