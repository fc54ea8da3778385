#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kns/function_spaces.hpp"
#include "kns/noise.hpp"
#include "kns/spectral_field.hpp"

namespace kns {

enum class Calculus { ito, stratonovich };
enum class Scheme { semi_implicit, exponential };

std::string to_string(Calculus c);
std::string to_string(Scheme s);
Calculus parse_calculus(const std::string& name);
Scheme parse_scheme(const std::string& name);

/// Extra norm sampled along trajectories.
struct NormSpec {
  enum class Kind { bessel, besov };
  Kind kind = Kind::bessel;
  double s = 0.0;
  double q = 2.0;
  double p = 2.0;  ///< Besov only

  std::string name() const;
  double evaluate(const SpectralField& u) const;
};

struct SolverConfig {
  TorusGrid grid{2, 32};
  double dt = 1e-3;
  double T = 1.0;
  Calculus calculus = Calculus::ito;
  Scheme scheme = Scheme::semi_implicit;
  ViscosityTensor a = ViscosityTensor::isotropic(2, 1.0);
  NoiseFamily noise = NoiseFamily::none(2);
  NonlinearityPreset nonlinearity;
  /// false gives the linear (turbulent Stokes) system.
  bool convection = true;
  /// Blow-up when |u|^2 exceeds factor * max(|u0|^2, reference).
  double blowup_factor = 1e6;
  double blowup_reference = 1.0;
  std::uint64_t seed = 0;
  bool allow_noncoercive = false;
  int norm_every = 1;
  int snapshot_every = 0;  ///< 0 keeps no snapshots
  bool keep_increments = false;
  std::vector<NormSpec> norms;
  int fault_step = -1;  ///< test hook: poison the state after this step

  int steps() const;
  /// Throws ConfigurationError / UnsupportedModeError on invalid settings.
  void validate() const;
};

/// Deterministic forcing of the linear system: f (drift) and g_n (one per
/// channel). A single entry is held constant in time; otherwise entry i is
/// used on step i (the last entry repeats).
struct LinearForcing {
  std::vector<SpectralField> f;
  std::vector<std::vector<SpectralField>> g;

  const SpectralField* f_at(int step) const;
  const std::vector<SpectralField>* g_at(int step) const;
  bool empty() const { return f.empty() && g.empty(); }
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> l2;       ///< ||u||_{L^2}
  std::vector<double> h1;       ///< ||u||_{H^{1,2}}
  std::vector<double> grad_sq;  ///< ||grad u||_{L^2}^2
  std::vector<std::string> norm_names;
  std::vector<std::vector<double>> norms;  ///< one series per configured NormSpec

  std::vector<double> snapshot_times;
  std::vector<SpectralField> snapshots;
  std::vector<double> increments;  ///< steps x channels when kept
  int channels = 0;

  SpectralField final_state;
  double dt = 0.0;
  double T = 0.0;
  int steps_taken = 0;
  bool blown_up = false;
  bool non_finite = false;
  double sigma = 0.0;
  bool auto_projected = false;
  std::uint64_t seed = 0;
  std::uint64_t path = 0;
  std::string config_hash;

  const std::vector<double>* series(const std::string& name) const;
};

/// Time stepper for the projected system. Construction precomputes noise
/// fields, the Ito correction and the implicit multipliers.
class Solver {
 public:
  explicit Solver(SolverConfig cfg);
  ~Solver();
  Solver(Solver&&) noexcept;
  Solver& operator=(Solver&&) noexcept;

  const SolverConfig& config() const { return cfg_; }
  const ViscosityTensor& ito_correction_tensor() const;
  /// a (Ito) or a + a_b (Stratonovich).
  const ViscosityTensor& effective_tensor() const;

  /// P[div(a grad u) - div(u (x) u) + f0(u) + div f(u) + f~(u)] with the tensor
  /// of the configured calculus.
  SpectralField drift(const SpectralField& u) const;
  /// P[(b_n . grad) u + g_n(u)] for every channel.
  std::vector<SpectralField> diffusion(const SpectralField& u) const;
  /// P div(u (x) u), dealiased.
  SpectralField convective_term(const SpectralField& u) const;
  /// f~(u) (not projected).
  SpectralField turbulent_pressure_term(const SpectralField& u) const;

  SpectralField step_ito(const SpectralField& u, std::span<const double> increments,
                         const LinearForcing* forcing = nullptr, int step = 0) const;
  SpectralField step_stratonovich(const SpectralField& u, std::span<const double> increments,
                                  const LinearForcing* forcing = nullptr, int step = 0) const;
  /// Dispatches on the configured calculus.
  SpectralField step(const SpectralField& u, std::span<const double> increments,
                     const LinearForcing* forcing = nullptr, int step = 0) const;

  TrajectoryRecord run_trajectory(const SpectralField& u0, std::uint64_t path = 0) const;
  /// Zero initial data, linear system with forcing (f, g).
  TrajectoryRecord solve_linear_stokes(const LinearForcing& forcing, std::uint64_t path = 0) const;

  /// Run with explicit increments (steps x channels) instead of the seeded driver.
  TrajectoryRecord run_with_increments(const SpectralField& u0, std::span<const double> increments,
                                       const LinearForcing* forcing = nullptr) const;

 private:
  struct Operators;
  TrajectoryRecord run(const SpectralField& u0, const LinearForcing* forcing, std::uint64_t path,
                       std::span<const double> fixed_increments) const;
  SpectralField advance(const SpectralField& u, std::span<const double> increments, const LinearForcing* forcing,
                        int step, const Operators& ops) const;
  SpectralField explicit_drift(const SpectralField& u, const Operators& ops, const LinearForcing* forcing,
                               int step) const;
  SpectralField viscous_term(const SpectralField& u, const ViscosityTensor& a) const;

  SolverConfig cfg_;
  std::unique_ptr<Operators> ito_;
  std::unique_ptr<Operators> strat_;
  std::unique_ptr<ViscosityTensor> a_b_;
  std::vector<std::vector<double>> b_grid_;  ///< per channel, physical samples
  std::vector<bool> b_constant_;
};

}  // namespace kns
