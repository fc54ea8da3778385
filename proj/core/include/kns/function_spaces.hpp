#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kns/spectral_field.hpp"

namespace kns {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// L^q norm of stacked grid samples with the pointwise l^2 norm over
/// components; trapezoid quadrature, q = infinity allowed.
double grid_lq_norm(const TorusGrid& grid, std::span<const double> values, int components, double q);

/// ||(1 - Laplacian)^{s/2} f||_{L^q}. Exact coefficient sum for q = 2.
double bessel_norm(const SpectralField& f, double s, double q);

/// Smooth cutoff: 1 on [0,1], 0 on [2,inf), C-infinity in between.
double lp_cutoff(double r);
/// Littlewood-Paley multiplier of block j >= -1 at radius r.
double lp_block(int j, double r);
/// Largest block index with a nonzero multiplier somewhere on the grid.
int lp_max_block(const TorusGrid& grid);
/// Spectral restriction Delta_j f.
SpectralField lp_project(const SpectralField& f, int j);

/// ( sum_j 2^{j s p} ||Delta_j f||_{L^q}^p )^{1/p}; p_besov may be infinity.
/// Block j = -1 carries weight 1.
double besov_norm(const SpectralField& f, double s, double q, double p_besov);

/// Quadrature nodes for integrals over (a,b) against |t - a|^kappa.
struct WeightedTimeGrid {
  double a = 0.0;
  double b = 1.0;
  double kappa = 0.0;
  std::vector<double> times;
  std::vector<double> weights;  ///< exact integral of |t-a|^kappa over each cell

  /// `cells` uniform cells; the first one is split geometrically `levels`
  /// times toward a. Samples sit at cell midpoints.
  static WeightedTimeGrid geometric(double a, double b, double kappa, int cells, int levels = 30);
  /// Cells bounded by midpoints between consecutive sample times (which must
  /// be increasing and lie in [a,b]); samples sit at the given nodes.
  static WeightedTimeGrid from_nodes(double a, double b, double kappa, std::span<const double> nodes);

  double total_weight() const;
};

/// ( int_a^b |series(t)|^p |t - a|^kappa dt )^{1/p}; p = infinity gives the
/// max over samples.
double weighted_time_norm(std::span<const double> series, const WeightedTimeGrid& grid, double p);

struct ParameterTuple {
  int d = 2;
  double p = 2.0;
  double q = 2.0;
  double delta = 0.0;
  double kappa = 0.0;
};

struct KappaCritical {
  double value = 0.0;
  bool in_range = false;  ///< 0 <= value < p/2 - 1, or the p = q = 2 endpoint case
};

KappaCritical kappa_critical(int d, double p, double q, double delta);

struct ParameterReport {
  ParameterTuple tuple;
  double kappa_c = 0.0;
  bool header_ok = false;  ///< p > 2, q >= 2, 0 <= kappa < p/2 - 1, or p = q = 2, kappa = 0
  bool admissible = false;
  bool critical = false;
  double trace_smoothness = 0.0;  ///< 1 + delta - 2(1 + kappa)/p
  std::vector<std::string> violations;
};

/// Tolerance for the equality tests behind the criticality flags.
inline constexpr double kExponentTolerance = 1e-12;

ParameterReport validate_parameters(const ParameterTuple& t);

struct SerrinPair {
  int d = 2;
  double p0 = 2.0;
  double q0 = 2.0;
  double delta0 = 0.0;
  double gamma0 = 0.0;  ///< 2/p0 + d/q0 - 1
  bool classic = false;  ///< 2/p0 + d/q0 = 1
  bool in_range = false;  ///< exponents inside the range covered by the blow-up criterion
};

SerrinPair serrin_exponents(int d, double p0, double q0, double delta0);

/// u_lambda(x) = sqrt(lambda) u(sqrt(lambda) x) on a grid sqrt(lambda) times
/// finer; the state at time t maps to time t / lambda.
SpectralField scaling_transform(const SpectralField& u, double lambda);
/// Integer sqrt(lambda), or ConfigurationError.
int scaling_root(double lambda);

}  // namespace kns
