#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "wkbnls/invariants.hpp"
#include "wkbnls/lognls.hpp"

using namespace wkb;

namespace {

WaveField gaussian_wave(const SpectralGrid& g, double eps) {
  return wave_from_profiles(gaussian_profile(0.5), gaussian_profile(0.5), eps, g);
}

double gap(const WaveField& a, const WaveField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.u.values.size(); ++i) m = std::max(m, std::abs(a.u.values[i] - b.u.values[i]));
  return m;
}

}  // namespace

TEST(LogNls, UniformSolutionIsExact) {
  const SpectralGrid g(1, 64, 10.0);
  const Check c = check_uniform_solution(g, 0.3, 1.0, 0.5, 0.2, 50);
  EXPECT_TRUE(c.passed) << c.value;
}

TEST(LogNls, MassConserved) {
  const SpectralGrid g(1, 256, 20.0);
  const Evolution ev = evolve(gaussian_wave(g, 0.25), {1.0, 0.25}, g, 0.5, 100, 10);
  EXPECT_LT(ev.max_mass_drift(), 1e-12);
  EXPECT_FALSE(ev.vacuum_touched());
  EXPECT_EQ(ev.states.size(), 11u);
}

TEST(LogNls, StrangSplittingIsSecondOrder) {
  const SpectralGrid g(1, 256, 20.0);
  const WaveField u0 = gaussian_wave(g, 0.5);
  const LogNlsParams p{1.0, 0.5};
  const auto end = [&](int n) { return evolve(u0, p, g, 0.2, n, n).states.back(); };
  const WaveField ref = end(512);
  const double r = gap(end(8), ref) / gap(end(16), ref);
  EXPECT_NEAR(r, 4.0, 0.4);
}

TEST(LogNls, KineticSubstepSpreadsFreeGaussian) {
  const SpectralGrid g(1, 512, 30.0);
  WaveField u;
  u.eps = 0.3;
  u.u = sample(g, [](double x, double) { return std::exp(-0.5 * x * x); }, false);
  kinetic_substep(u, 2.0, g);
  const cplx a(1.0, 0.3 * 2.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    EXPECT_LT(std::abs(u.u.values[i] - std::exp(-g.x(i) * g.x(i) / (2.0 * a)) / std::sqrt(a)), 1e-12);
}

TEST(LogNls, VacuumFloorReported) {
  const SpectralGrid g(1, 16, 1.0);
  WaveField u;
  u.eps = 0.5;
  u.u = GridField(1, g.size(), false);
  u.u.values[3] = 1.0;
  EXPECT_TRUE(nonlinear_substep(u, 0.1, {1.0, 0.5}));
  for (const auto& z : u.u.values) EXPECT_TRUE(std::isfinite(z.real()));
}

TEST(LogNls, PlaneWaveObservables) {
  const double L = 5.0, eps = 0.2;
  const SpectralGrid g(1, 64, L);
  const double k = 3.0 * std::numbers::pi / L * eps;
  const WaveField u = wave_from_profiles(constant_profile(std::log(2.0)),
                                         [&] {
                                           Profile p;
                                           p.value = [=](double x, double) { return k * x; };
                                           return p;
                                         }(),
                                         eps, g);
  const Observables o = observables(u, g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(o.rho.values[i].real(), 2.0, 1e-13);
    EXPECT_NEAR(o.momentum.values[i].real(), 2.0 * k, 1e-11);
  }
}

TEST(LogNls, RejectsMismatchedEps) {
  const SpectralGrid g(1, 16, 1.0);
  const WaveField u = gaussian_wave(g, 0.5);
  EXPECT_THROW(evolve(u, {1.0, 0.25}, g, 0.1, 2), ConfigError);
  EXPECT_THROW(wave_from_profiles(constant_profile(0.0), constant_profile(0.0), 0.0, g), ConfigError);
}
