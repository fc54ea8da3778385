#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kns/spectral_field.hpp"

namespace kns {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major, only the leading d x d block is used

/// One transport field b(x) = amplitude * cos(k.x + phase). k = 0 gives a
/// constant field.
struct NoiseMode {
  Wavevector k{0, 0, 0};
  Vec3 amplitude{0, 0, 0};
  double phase = 0.0;
};

/// Finite family of divergence-free transport fields b_n, one per Brownian
/// channel, plus the optional turbulent-pressure coefficients h_n.
struct NoiseFamily {
  int dim = 2;
  std::vector<NoiseMode> modes;
  std::vector<Mat3> h;  ///< empty, or one d x d matrix h_n^{j,k} per channel
  double zeta = 0.0;
  double amplitude = 0.0;
  std::uint64_t seed = 0;
  /// Marks b as depending on (t, omega); only the Ito form accepts this.
  bool time_dependent = false;

  int channels() const { return static_cast<int>(modes.size()); }
  bool empty() const { return modes.empty(); }
  bool has_h() const { return !h.empty(); }
  bool spatially_constant() const;

  /// b_n sampled on the grid, component-major.
  std::vector<double> evaluate(const TorusGrid& grid, int n) const;
  SpectralField spectral(const TorusGrid& grid, int n) const;

  /// Copy with every b_n multiplied by theta.
  NoiseFamily scaled(double theta) const;

  static NoiseFamily none(int dim);
  /// Constant fields b_n = vectors[n].
  static NoiseFamily constant(int dim, const std::vector<Vec3>& vectors);
};

/// Divergence-free family of `channels` polarized plane waves with
/// amplitude A |k|^{-zeta}. Wavevectors are taken shell by shell inside the
/// dealiased band of `grid`; each wavevector contributes a cosine and a sine
/// channel per polarization.
NoiseFamily synthesize_kraichnan(const TorusGrid& grid, int channels, double zeta, double amplitude,
                                 std::uint64_t seed);

/// sup_x ( sum_n |b_n(x)|^2 )^{1/2} on the grid.
double noise_sup_bound(const NoiseFamily& nf, const TorusGrid& grid);
/// ( sum_n ||b_n||_{H^{s,2}}^2 )^{1/2}.
double noise_bessel_norm(const NoiseFamily& nf, const TorusGrid& grid, double s);
/// ( sum_n |h_n|_F^2 )^{1/2}.
double h_bound(const NoiseFamily& nf);
/// Largest max_divergence_defect over the channels.
double noise_divergence_defect(const NoiseFamily& nf, const TorusGrid& grid);

/// Symmetric d x d coefficient field, constant or sampled on a grid.
class ViscosityTensor {
 public:
  enum class Provenance { direct, ito_correction_included };

  ViscosityTensor() = default;
  static ViscosityTensor isotropic(int dim, double nu);
  static ViscosityTensor constant(int dim, const Mat3& value);
  /// values: one row-major d x d block per grid point.
  static ViscosityTensor gridded(const TorusGrid& grid, std::vector<double> values);

  int dim() const { return dim_; }
  bool is_constant() const { return constant_; }
  const Mat3& constant_value() const { return value_; }
  double entry(std::size_t point, int i, int j) const {
    return constant_ ? value_[static_cast<std::size_t>(3 * i + j)]
                     : values_[point * static_cast<std::size_t>(dim_ * dim_) + static_cast<std::size_t>(dim_ * i + j)];
  }
  const std::optional<TorusGrid>& grid() const { return grid_; }
  Provenance provenance() const { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = p; }

  /// Pointwise sum; gridded if either operand is.
  ViscosityTensor plus(const ViscosityTensor& other, double factor = 1.0) const;
  /// Smallest eigenvalue over the grid points.
  double min_eigenvalue(const TorusGrid& grid) const;
  /// Largest symmetric asymmetry |a_ij - a_ji|.
  double asymmetry() const;

 private:
  int dim_ = 2;
  bool constant_ = true;
  Mat3 value_{};
  std::vector<double> values_;
  std::optional<TorusGrid> grid_;
  Provenance provenance_ = Provenance::direct;
};

/// a_b = 1/2 sum_n b_n b_n^T. Collapsed to a constant tensor when uniform on
/// the grid. Throws UnsupportedModeError for time-dependent b.
ViscosityTensor ito_correction(const NoiseFamily& nf, const TorusGrid& grid);

/// min_x lambda_min(a(x) - a_b(x)); may be <= 0.
double coercivity_nu(const ViscosityTensor& a, const NoiseFamily& nf, const TorusGrid& grid);

enum class GKind { zero, linear, quadratic };

std::string to_string(GKind kind);
GKind parse_g_kind(const std::string& name);

/// g_n(u) = gamma_n u (linear) or gamma_n u min(|u|, cap) (quadratic);
/// f_0(x,u) = c0 u + F(x); f_j(u) = beta_j u.
struct NonlinearityPreset {
  GKind g_kind = GKind::zero;
  std::vector<double> gamma;  ///< per channel; missing entries read as 0
  double u_cap = 1.0;
  double f0_linear = 0.0;
  std::optional<SpectralField> f0_forcing;
  Vec3 f_beta{0, 0, 0};

  double gamma_at(int n) const { return n < static_cast<int>(gamma.size()) ? gamma[static_cast<std::size_t>(n)] : 0.0; }
  double gamma_l2() const;
  bool g_is_zero() const;
  bool f_is_zero() const;
};

/// Constants of sum_j |f_j(y)| + |g(y)|_{l^2} <= M1 (1 + |y|) + M2 |y|^2 and the
/// global l^2-Lipschitz constant of g.
struct GrowthCertificate {
  double m1 = 0.0;
  double m2 = 0.0;
  double g_lipschitz = 0.0;
};

GrowthCertificate growth_certificate(const NonlinearityPreset& preset, int dim);

/// Largest relative violation of |g(y) - g(y')| <= L |y - y'| over random
/// pairs with |y|, |y'| <= radius; <= 0 means the certificate held.
double spot_check_lipschitz(const NonlinearityPreset& preset, int dim, int channels, double radius,
                            int samples, std::uint64_t seed);

/// Gaussian increments dW_n ~ N(0, dt) per channel and step, one
/// independent stream per path index.
class BrownianDriver {
 public:
  BrownianDriver(std::uint64_t seed, double dt, int channels);

  std::uint64_t seed() const { return seed_; }
  int channels() const { return channels_; }
  /// Step of this driver.
  double dt() const { return dt_; }
  double base_dt() const { return base_dt_; }
  double lambda() const { return lambda_; }
  int aggregate() const { return aggregate_; }

  class Stream {
   public:
    /// Fills one step of increments (size = channels).
    void next(std::span<double> out);

   private:
    friend class BrownianDriver;
    Stream(const BrownianDriver& d, std::uint64_t path);
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::vector<double> buffer_;
    int channels_;
    int aggregate_;
    double base_sd_;
    double factor_;
  };

  Stream stream(std::uint64_t path) const { return Stream(*this, path); }

  /// Increments of one path, steps x channels, row-major.
  std::vector<double> path_increments(std::uint64_t path, int steps) const;

  /// Driver beta_{t,lambda} = lambda^{-1/2} w_{lambda t} at step h. Each
  /// increment sums lambda*h/base_dt base increments exactly.
  BrownianDriver scaled(double lambda, double h) const;

 private:
  std::uint64_t seed_;
  int channels_;
  double base_dt_;
  double dt_;
  double lambda_ = 1.0;
  int aggregate_ = 1;
};

/// paths x steps x channels increments, row-major.
std::vector<double> sample_increments(const BrownianDriver& driver, int steps, int paths);

}  // namespace kns
