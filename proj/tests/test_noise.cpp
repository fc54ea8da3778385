#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "kns/error.hpp"
#include "kns/noise.hpp"
#include "kns/spectral.hpp"

using namespace kns;

TEST(Kraichnan, DivergenceFreeAndOrdered) {
  for (int dim : {2, 3}) {
    TorusGrid g(dim, 16);
    const auto nf = synthesize_kraichnan(g, 24, 1.5, 0.7, 3);
    ASSERT_EQ(nf.channels(), 24);
    EXPECT_LE(noise_divergence_defect(nf, g), 1e-14);
    int prev = 0;
    for (const auto& m : nf.modes) {
      const int k2 = m.k[0] * m.k[0] + m.k[1] * m.k[1] + m.k[2] * m.k[2];
      EXPECT_GE(k2, prev);
      prev = k2;
      double a2 = 0.0;
      for (double a : m.amplitude) a2 += a * a;
      EXPECT_NEAR(std::sqrt(a2), 0.7 * std::pow(k2, -0.75), 1e-14);
      for (int j = 0; j < 3; ++j) EXPECT_LT(3 * std::abs(m.k[j]), g.n());
    }
  }
}

TEST(Kraichnan, CosineSinePairs) {
  TorusGrid g(2, 16);
  const auto nf = synthesize_kraichnan(g, 4, 1.0, 1.0, 0);
  EXPECT_EQ(nf.modes[0].k, nf.modes[1].k);
  EXPECT_EQ(nf.modes[0].phase, 0.0);
  EXPECT_NEAR(nf.modes[1].phase, -0.5 * std::numbers::pi, 1e-15);
  // a cos/sin pair has a constant sum of squares: a_b is uniform
  const auto ab = ito_correction(nf, g);
  EXPECT_TRUE(ab.is_constant());
}

TEST(Kraichnan, CapacityExceeded) {
  TorusGrid g(2, 8);
  // |k_j| <= 2: 12 canonical wavevectors, 2 channels each
  EXPECT_NO_THROW(synthesize_kraichnan(g, 24, 1.0, 1.0, 0));
  EXPECT_THROW(synthesize_kraichnan(g, 25, 1.0, 1.0, 0), ConfigurationError);
  EXPECT_THROW(synthesize_kraichnan(g, 4, 0.0, 1.0, 0), ConfigurationError);
}

TEST(ItoCorrection, ConstantVectors) {
  TorusGrid g(2, 8);
  const auto nf = NoiseFamily::constant(2, {{1.0, 0.0, 0.0}});
  const auto ab = ito_correction(nf, g);
  ASSERT_TRUE(ab.is_constant());
  EXPECT_DOUBLE_EQ(ab.constant_value()[0], 0.5);
  EXPECT_DOUBLE_EQ(ab.constant_value()[4], 0.0);
  // a = I: corrected tensor diag(3/2, 1); minus a_b gives I, margin 1
  const auto a = ViscosityTensor::isotropic(2, 1.0);
  const auto corrected = a.plus(ab);
  EXPECT_DOUBLE_EQ(corrected.constant_value()[0], 1.5);
  EXPECT_DOUBLE_EQ(corrected.constant_value()[4], 1.0);
  EXPECT_DOUBLE_EQ(coercivity_nu(a, nf, g), 0.5);
  EXPECT_DOUBLE_EQ(coercivity_nu(corrected, nf, g), 1.0);
}

TEST(ItoCorrection, SingleCosineIsGridded) {
  TorusGrid g(2, 16);
  NoiseFamily nf;
  nf.dim = 2;
  nf.modes.push_back({{1, 0, 0}, {0.0, 1.0, 0.0}, 0.0});
  const auto ab = ito_correction(nf, g);
  EXPECT_FALSE(ab.is_constant());
  // a_b^{22}(x) = cos^2(x)/2
  for (std::size_t p = 0; p < g.size(); ++p) {
    EXPECT_NEAR(ab.entry(p, 1, 1), 0.5 * std::pow(std::cos(g.coordinate(p, 0)), 2), 1e-15);
  }
  EXPECT_NEAR(coercivity_nu(ViscosityTensor::isotropic(2, 1.0), nf, g), 0.5, 1e-15);
}

TEST(ItoCorrection, TimeDependentRejected) {
  TorusGrid g(2, 8);
  auto nf = NoiseFamily::constant(2, {{1.0, 0.0, 0.0}});
  nf.time_dependent = true;
  EXPECT_THROW(ito_correction(nf, g), UnsupportedModeError);
}

TEST(Growth, Certificates) {
  NonlinearityPreset lin;
  lin.g_kind = GKind::linear;
  lin.gamma = {0.3, 0.4};
  lin.f0_linear = 0.2;
  const auto c = growth_certificate(lin, 2);
  EXPECT_NEAR(c.m1, 0.2 + 0.5, 1e-15);
  EXPECT_EQ(c.m2, 0.0);
  EXPECT_NEAR(c.g_lipschitz, 0.5, 1e-15);
  EXPECT_LE(spot_check_lipschitz(lin, 2, 2, 10.0, 500, 1), 1e-12);

  NonlinearityPreset quad;
  quad.g_kind = GKind::quadratic;
  quad.gamma = {0.6, 0.8};
  quad.u_cap = 2.0;
  const auto q = growth_certificate(quad, 2);
  EXPECT_NEAR(q.m2, 1.0, 1e-15);
  EXPECT_NEAR(q.g_lipschitz, 4.0, 1e-15);
  EXPECT_LE(spot_check_lipschitz(quad, 2, 2, 5.0, 2000, 2), 1e-12);
}

TEST(Brownian, DeterministicAndScaled) {
  BrownianDriver d(42, 0.01, 3);
  const auto a = d.path_increments(7, 100);
  const auto b = d.path_increments(7, 100);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, d.path_increments(8, 100));
  // lambda = 4, h = dt: aggregate 4 base increments, scale 1/2
  const auto s = d.scaled(4.0, 0.01);
  EXPECT_EQ(s.aggregate(), 4);
  const auto inc = s.path_increments(7, 10);
  const auto base = d.path_increments(7, 40);
  for (int k = 0; k < 10; ++k)
    for (int c = 0; c < 3; ++c) {
      double sum = 0.0;
      for (int j = 0; j < 4; ++j) sum += base[static_cast<std::size_t>((4 * k + j) * 3 + c)];
      EXPECT_NEAR(inc[static_cast<std::size_t>(k * 3 + c)], 0.5 * sum, 1e-15);
    }
  EXPECT_THROW(d.scaled(3.0, 0.001), ConfigurationError);
}

TEST(Brownian, Variance) {
  BrownianDriver d(1, 0.25, 1);
  const auto inc = d.path_increments(0, 40000);
  const double mean = std::accumulate(inc.begin(), inc.end(), 0.0) / inc.size();
  double var = 0.0;
  for (double x : inc) var += (x - mean) * (x - mean);
  var /= inc.size() - 1;
  EXPECT_NEAR(mean, 0.0, 4 * 0.5 / 200);
  EXPECT_NEAR(var, 0.25, 0.25 * 4 * std::sqrt(2.0 / 40000));
}

TEST(ItoCorrection, KraichnanTensorIsPsd) {
  for (int dim : {2, 3}) {
    TorusGrid g(dim, dim == 2 ? 32 : 16);
    auto nf = synthesize_kraichnan(g, 15, 0.8, 0.6, 4);
    nf.modes.pop_back();  // break a cos/sin pair so a_b varies in x
    const auto ab = ito_correction(nf, g);
    EXPECT_GE(ab.min_eigenvalue(g), -1e-12);
    EXPECT_LE(ab.asymmetry(), 0.0);
  }
}

TEST(ItoCorrection, CoercivityMonotoneInTheta) {
  TorusGrid g(2, 32);
  const auto nf = synthesize_kraichnan(g, 12, 0.5, 1.0, 8);
  const auto a = ViscosityTensor::isotropic(2, 1.0);
  double prev = coercivity_nu(a, nf.scaled(0.0), g);
  EXPECT_DOUBLE_EQ(prev, 1.0);
  for (double theta = 0.1; theta <= 1.0 + 1e-12; theta += 0.1) {
    const double nu = coercivity_nu(a, nf.scaled(theta), g);
    EXPECT_LE(nu, prev + 1e-15);
    prev = nu;
  }
}
