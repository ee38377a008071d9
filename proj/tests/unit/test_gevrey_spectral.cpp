#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "wkbnls/analytic_norm.hpp"
#include "wkbnls/invariants.hpp"
#include "wkbnls/spectral_ops.hpp"
#include "wkbnls/wkb_scheme.hpp"

using namespace wkb;

namespace {

double max_diff(const GridField& a, const GridField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

}  // namespace

TEST(SpectralGrid, RejectsBadShapes) {
  EXPECT_THROW(SpectralGrid(3, 64, 1.0), ConfigError);
  EXPECT_THROW(SpectralGrid(1, 63, 1.0), ConfigError);
  EXPECT_THROW(SpectralGrid(1, 64, -1.0), ConfigError);
}

TEST(SpectralGrid, TransformRoundTrip) {
  const SpectralGrid g(1, 128, 5.0);
  const GridField f = sample(g, [](double x, double) { return std::exp(-x * x) * std::cos(3.0 * x); });
  EXPECT_LT(max_diff(inverse_transform(forward_transform(f, g), g, true), f), 1e-14);

  const SpectralGrid g2(2, 32, 4.0);
  const GridField h = sample(g2, [](double x, double y) { return std::exp(-x * x - 0.5 * y * y); });
  EXPECT_LT(max_diff(inverse_transform(forward_transform(h, g2), g2, true), h), 1e-14);
}

TEST(SpectralOps, DerivativeOfLatticeMode) {
  const double L = 4.0;
  const SpectralGrid g(1, 64, L);
  const double k = 5.0 * std::numbers::pi / L;
  const GridField f = sample(g, [&](double x, double) { return std::sin(k * x); });
  const GridField exact = sample(g, [&](double x, double) { return k * std::cos(k * x); });
  EXPECT_LT(max_diff(grad(f, g), exact), 1e-12);
  const GridField lap = laplacian(f, g);
  EXPECT_LT(max_diff(lap, (-k * k) * f), 1e-10);
}

TEST(SpectralOps, DealiasingKeepsLowModes) {
  const SpectralGrid g(1, 64, std::numbers::pi);
  const GridField low = sample(g, [](double x, double) { return std::cos(3.0 * x); });
  const GridField high = sample(g, [](double x, double) { return std::cos(30.0 * x); });
  EXPECT_LT(max_diff(dealiased(low, g), low), 1e-14);
  EXPECT_LT(dealiased(high, g).max_abs(), 1e-13);
}

// For f = cos(kx) on [-L, L], the weighted norm reduces to one lattice pair:
// ||f||^2 = L <k>^{2 ell} e^{2 delta <k>}.
TEST(AnalyticNorm, SingleModeClosedForm) {
  const double L = 6.0;
  const SpectralGrid g(1, 128, L);
  for (int m : {0, 1, 7}) {
    const double k = m * std::numbers::pi / L;
    const GridField f = sample(g, [&](double x, double) { return std::cos(k * x); });
    const double b = std::sqrt(1.0 + k * k);
    for (double ell : {0.0, 1.5, 3.0})
      for (double delta : {0.0, 0.5}) {
        const double want = (m == 0 ? 2.0 * L : L) * std::pow(b, 2.0 * ell) * std::exp(2.0 * delta * b);
        EXPECT_NEAR(analytic_norm_sq(f, {ell, delta}, g) / want, 1.0, 1e-9) << m << " " << ell << " " << delta;
      }
  }
}

TEST(AnalyticNorm, GaussianApproximatesContinuumIntegral) {
  // exp(-x^2/2) has transform sqrt(2 pi) exp(-xi^2/2); at ell = delta = 0 the norm is sqrt(pi).
  const SpectralGrid g(1, 256, 20.0);
  const GridField f = sample(g, [](double x, double) { return std::exp(-0.5 * x * x); });
  EXPECT_NEAR(analytic_norm_sq(f, {0.0, 0.0}, g), std::sqrt(std::numbers::pi), 1e-12);
}

TEST(AnalyticNorm, RejectsNegativeIndices) {
  const SpectralGrid g(1, 32, 1.0);
  const Spectrum s(1, g.size());
  EXPECT_THROW(analytic_norm_sq(s, {-1.0, 0.0}, g), ConfigError);
  EXPECT_THROW(analytic_norm_sq(s, {0.0, -0.1}, g), ConfigError);
}

TEST(AnalyticNorm, DecompositionIdentity) {
  const Check c = check_norm_identity(SpectralGrid(1, 128, 10.0).with_band(8.0), 20, 7);
  EXPECT_TRUE(c.passed) << c.value;
}

TEST(AnalyticNorm, RadiusShrinkDerivativeIsSecondOrder) {
  const Check c = check_radius_derivative(SpectralGrid(1, 128, 10.0).with_band(8.0), 3);
  EXPECT_TRUE(c.passed) << c.value;
}

// Free Schroedinger flow of exp(-x^2/2): (1 + i eps t)^{-1/2} exp(-x^2 / (2 (1 + i eps t))).
TEST(Semigroup, FreeGaussianSpreading) {
  const SpectralGrid g(1, 512, 30.0);
  const double eps = 0.4;
  const GridField f = sample(g, [](double x, double) { return std::exp(-0.5 * x * x); });
  for (double t : {0.5, 2.0, 5.0}) {
    const GridField u = inverse_transform(schrodinger_semigroup(forward_transform(f, g), t, eps, g), g);
    const std::complex<double> a(1.0, eps * t);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.x(i);
      err = std::max(err, std::abs(u.values[i] - std::exp(-x * x / (2.0 * a)) / std::sqrt(a)));
    }
    EXPECT_LT(err, 1e-12) << t;
  }
}

TEST(Semigroup, IsometryAndGroupLaw) {
  const Check c = check_semigroup(SpectralGrid(1, 128, 10.0), 11);
  EXPECT_TRUE(c.passed) << c.value;
}

TEST(Semigroup, TrivialAtZeroEps) {
  const SpectralGrid g(1, 32, 2.0);
  std::mt19937_64 rng(5);
  const Spectrum s = forward_transform(random_band_limited(g, 1, false, rng), g);
  const Spectrum t = schrodinger_semigroup(s, 3.0, 0.0, g);
  for (std::size_t k = 0; k < s.coeffs.size(); ++k) EXPECT_EQ(s.coeffs[k], t.coeffs[k]);
}
