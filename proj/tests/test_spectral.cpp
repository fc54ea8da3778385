#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kns/fft.hpp"
#include "kns/solver.hpp"
#include "kns/spectral.hpp"
#include "test_util.hpp"

using namespace kns;
using kns::test::max_abs;
using kns::test::max_abs_diff;
using kns::test::random_field;

namespace {

// (1/N) sum_x v(x) exp(-i k.x), straight from the definition
Complex naive_coefficient(const TorusGrid& grid, const std::vector<double>& v, const Wavevector& k) {
  Complex s{};
  for (std::size_t p = 0; p < grid.size(); ++p) {
    double phase = 0.0;
    for (int a = 0; a < grid.dim(); ++a) phase += k[a] * grid.coordinate(p, a);
    s += v[p] * std::exp(Complex(0.0, -phase));
  }
  return s / static_cast<double>(grid.size());
}

}  // namespace

TEST(Grid, WavenumberLayout) {
  TorusGrid g(2, 8);
  EXPECT_EQ(g.size(), 64u);
  EXPECT_EQ(g.wavenumber(3), 3);
  EXPECT_EQ(g.wavenumber(4), -4);
  EXPECT_EQ(g.wavenumber(7), -1);
  EXPECT_EQ(g.derivative_wavenumber(4), 0);
  EXPECT_DOUBLE_EQ(g.volume(), 4.0 * std::numbers::pi * std::numbers::pi);
  const auto& tab = wavenumbers(g);
  // 3|k_j| < n keeps |k_j| <= 2 on n = 8
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& k = tab.k[i];
    const bool keep = 3 * std::abs(k[0]) < 8 && 3 * std::abs(k[1]) < 8;
    EXPECT_EQ(static_cast<bool>(tab.kept[i]), keep);
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto s = g.storage_indices(i);
    if (g.is_nyquist(s[0]) || g.is_nyquist(s[1])) continue;
    const auto& kc = tab.k[g.conjugate_index(i)];
    EXPECT_EQ(kc[0], -tab.k[i][0]);
    EXPECT_EQ(kc[1], -tab.k[i][1]);
  }
}

TEST(Fft, MatchesNaiveDftOn8x8) {
  TorusGrid g(2, 8);
  const auto v = kns::test::random_samples(g, 1, 11);
  const auto f = forward_transform(g, v);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Complex ref = naive_coefficient(g, v, g.wavevector(i));
    EXPECT_NEAR(std::abs(f.coeffs[i] - ref), 0.0, 1e-14);
  }
}

TEST(Fft, MatchesNaiveDftIn3d) {
  TorusGrid g(3, 8);
  const auto v = kns::test::random_samples(g, 1, 5);
  const auto f = forward_transform(g, v);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(std::abs(f.coeffs[i] - naive_coefficient(g, v, g.wavevector(i))), 0.0, 1e-14);
  }
}

TEST(Fft, RoundTrip) {
  TorusGrid g(2, 16);
  const auto v = kns::test::random_samples(g, 2, 3);
  const auto back = inverse_transform(forward_transform(g, v, 2));
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(back[i], v[i], 1e-13);
}

TEST(Spectral, DerivativeOfSine) {
  TorusGrid g(2, 16);
  std::vector<double> v(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) v[p] = std::sin(3 * g.coordinate(p, 1));
  const auto dv = inverse_transform(spectral_derivative(forward_transform(g, v), 1));
  for (std::size_t p = 0; p < g.size(); ++p) EXPECT_NEAR(dv[p], 3 * std::cos(3 * g.coordinate(p, 1)), 1e-12);
}

TEST(Spectral, NyquistDerivativeIsZero) {
  TorusGrid g(2, 8);
  std::vector<double> v(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) v[p] = std::cos(4 * g.coordinate(p, 0));
  const auto d = spectral_derivative(forward_transform(g, v), 0);
  for (const auto& z : d.coeffs) EXPECT_EQ(z, Complex{});
}

TEST(Spectral, HelmholtzProperties) {
  for (int dim : {2, 3}) {
    TorusGrid g(dim, dim == 2 ? 16 : 8);
    const auto f = random_field(g, dim, 17);
    const auto pf = helmholtz_project(f);
    const double scale = max_abs(f);
    EXPECT_LE(max_abs_diff(helmholtz_project(pf), pf), 1e-14 * scale);
    EXPECT_LE(max_divergence_defect(pf), 1e-13);
    const auto q = f - pf;
    EXPECT_LE(std::abs(inner_product(pf, q)), 1e-12 * inner_product(f, f));
    // f - grad psi = P f
    const auto psi = q_solve(f);
    EXPECT_TRUE(psi.mean_zero());
    EXPECT_LE(max_abs_diff(f - gradient(psi), pf), 1e-13 * scale);
    EXPECT_EQ(pf.at(0, 0), f.at(0, 0));
  }
}

TEST(Spectral, GradientIsAnnihilated) {
  TorusGrid g(2, 16);
  ScalarSpectralField psi = forward_transform(g, kns::test::random_samples(g, 1, 2));
  psi.coeffs[0] = 0.0;
  const auto grad = gradient(psi);
  EXPECT_LE(max_abs(helmholtz_project(grad)), 1e-14 * max_abs(grad));
}

TEST(Spectral, DealiasRule) {
  TorusGrid g(2, 12);
  const auto f = dealias(random_field(g, 2, 4));
  const auto& tab = wavenumbers(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const bool keep = 3 * std::abs(tab.k[i][0]) < 12 && 3 * std::abs(tab.k[i][1]) < 12;
    if (!keep) EXPECT_EQ(f.at(0, i), Complex{});
  }
}

TEST(Spectral, ParsevalMatchesQuadrature) {
  TorusGrid g(2, 16);
  const auto v = kns::test::random_samples(g, 2, 8);
  const auto f = forward_transform(g, v, 2);
  EXPECT_NEAR(l2_norm(f), grid_l2_norm(g, v), 1e-12 * l2_norm(f));
}

TEST(Spectral, GradNormOfSingleMode) {
  TorusGrid g(2, 16);
  std::vector<double> v(2 * g.size(), 0.0);
  for (std::size_t p = 0; p < g.size(); ++p) v[g.size() + p] = std::cos(2 * g.coordinate(p, 0));
  const auto f = forward_transform(g, v, 2);
  // |u|^2 = 2 pi^2, |grad u|^2 = 4 |u|^2
  EXPECT_NEAR(inner_product(f, f), 2 * std::numbers::pi * std::numbers::pi, 1e-12);
  EXPECT_NEAR(grad_norm_squared(f), 8 * std::numbers::pi * std::numbers::pi, 1e-12);
}

TEST(Spectral, HermitianSymmetry) {
  TorusGrid g(3, 8);
  const auto f = random_field(g, 3, 1);
  EXPECT_LE(hermitian_defect(f), 1e-15);
  SpectralField h(g, 1);
  h.set_mode(0, {1, 2, 0}, Complex(1.0, 2.0));
  EXPECT_EQ(h.mode(0, {-1, -2, 0}), Complex(1.0, -2.0));
}

TEST(Spectral, RefineKeepsValues) {
  TorusGrid g(2, 8);
  const auto f = dealias(random_field(g, 2, 9));
  const auto r = refine(f, 16);
  EXPECT_NEAR(l2_norm(r), l2_norm(f), 1e-13);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(r.mode(1, g.wavevector(i)), f.at(1, i));
  }
}

TEST(Spectral, ConvectiveProductMatchesDirectConvolution) {
  // u.grad u computed by direct convolution of Fourier series on n = 8
  TorusGrid g(2, 8);
  const auto u = kns::test::random_divfree(g, 21);
  const auto& tab = wavenumbers(g);
  SpectralField conv(g, 2);
  for (std::size_t a = 0; a < g.size(); ++a) {
    for (std::size_t b = 0; b < g.size(); ++b) {
      if (!tab.kept[a] || !tab.kept[b]) continue;
      Wavevector k{tab.k[a][0] + tab.k[b][0], tab.k[a][1] + tab.k[b][1], 0};
      const std::size_t idx = g.flat_index_of_mode(k);
      if (idx >= g.size() || !tab.kept[idx]) continue;
      // div(u (x) u)^c(k) = sum i k_j u^j(a) u^c(b)
      for (int c = 0; c < 2; ++c)
        for (int j = 0; j < 2; ++j)
          conv.at(c, idx) += Complex(0.0, tab.kd[idx][j]) * u.at(j, a) * u.at(c, b);
    }
  }
  SolverConfig cfg;
  cfg.grid = g;
  cfg.dt = 0.1;
  cfg.T = 0.1;
  const Solver solver(cfg);
  const auto ref = helmholtz_project(conv);
  EXPECT_LE(max_abs_diff(solver.convective_term(u), ref), 1e-14 * (1.0 + max_abs(ref)));
}
