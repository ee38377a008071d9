#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "wkbnls/setup.hpp"
#include "wkbnls/wkb_scheme.hpp"

using namespace wkb;

namespace {

Params base_params(double eps, double T) {
  Params p;
  p.eps = eps;
  p.T = T;
  p.M = 0.0;
  p.K_ell = 1.0;
  return p;
}

double field_gap(const GridField& a, const GridField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

}  // namespace

TEST(DirectIntegrate, ZeroDataStaysZero) {
  const SpectralGrid g(1, 64, 10.0);
  const HydroState zero{GridField(1, g.size(), true), GridField(1, g.size(), true)};
  const Trajectory tr = direct_integrate(zero, base_params(0.5, 0.1), g, 8);
  ASSERT_EQ(tr.size(), 9u);
  EXPECT_EQ(tr.states.back().zeta.max_abs(), 0.0);
  EXPECT_EQ(tr.states.back().v.max_abs(), 0.0);
}

// Small-amplitude data on one lattice mode follow the linearisation about rest.
// With zeta = (a + i b) cos kx and v = c cos kx:
//   a' = k^2 c + (eps k^2 / 2) b,  b' = -(eps k^2 / 2) a,  c' = -lambda a.
TEST(DirectIntegrate, SmallAmplitudeModeMatchesMatrixExponential) {
  const double L = 5.0, amp = 1e-7, eps = 0.6, lambda = 1.3, T = 0.4;
  const SpectralGrid g(1, 64, L);
  const double k = 2.0 * std::numbers::pi / L;
  const HydroState data{sample(g, [&](double x, double) { return amp * std::cos(k * x); }),
                        sample(g, [&](double x, double) { return -0.5 * amp * std::cos(k * x); })};
  Params p = base_params(eps, T);
  p.lambda = lambda;
  const Trajectory tr = direct_integrate(data, p, g, 40);

  Eigen::Matrix3d A;
  const double k2 = k * k, s = 0.5 * eps * k2;
  A << 0.0, s, k2, -s, 0.0, 0.0, -lambda, 0.0, 0.0;
  const Eigen::Vector3d y = (A * T).exp() * Eigen::Vector3d(amp, 0.0, -0.5 * amp);
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double c = std::cos(k * g.x(i));
    err = std::max(err, std::abs(tr.states.back().zeta.values[i] - cplx(y(0), y(1)) * c));
    err = std::max(err, std::abs(tr.states.back().v.values[i] - y(2) * c));
  }
  EXPECT_LT(err / amp, 1e-6);
}

TEST(DirectIntegrate, FourthOrderInTime) {
  const SpectralGrid full(1, 256, 20.0);
  const Profile bump = gaussian_profile(0.5);
  const HydroState data = hydro_data(bump, bump, full);
  const SpectralGrid g = full.with_band(12.0);
  const Params p = base_params(0.5, 0.2);
  const auto end = [&](int n) { return direct_integrate(data, p, g, n).states.back(); };
  const HydroState ref = end(256), a = end(8), b = end(16);
  const double ea = field_gap(a.zeta, ref.zeta) + field_gap(a.v, ref.v);
  const double eb = field_gap(b.zeta, ref.zeta) + field_gap(b.v, ref.v);
  EXPECT_NEAR(std::log2(ea / eb), 4.0, 0.5);
}

TEST(DirectIntegrate, RejectsCflViolation) {
  const SpectralGrid g(1, 128, 5.0);
  const Profile steep = gaussian_profile(50.0, 0.0, 0.3);
  const HydroState data = hydro_data(constant_profile(0.0), steep, g);
  EXPECT_THROW(direct_integrate(data, base_params(0.0, 0.5), g, 1), NumericalError);
}

TEST(DeriveConstants, FormulaAndBinding) {
  const SpectralGrid g(1, 256, 20.0);
  const Profile bump = gaussian_profile(0.5);
  const HydroState data = hydro_data(bump, bump, g);
  Params p = base_params(0.0, 0.0);
  p.K_ell = 0.1;
  const DerivedConstants c = derive_constants(data, p, g);
  EXPECT_NEAR(c.M1, 0.1 * (std::sqrt(2.0 * c.omega_in) + 2.0 * c.omega_in) + 1.5, 1e-12);
  EXPECT_NEAR(c.M, c.M1 + 2.0 * (1.0 + 0.1), 1e-12);
  EXPECT_NEAR(c.T, std::min(0.5 / c.M, 0.9 * 0.05), 1e-15);
  const DerivedConstants capped = derive_constants(data, p, g, 1e-4);
  EXPECT_EQ(capped.binding, "cap");
  p.K_ell = 0.0;
  EXPECT_THROW(derive_constants(data, p, g), ConfigError);
}

TEST(Scheme, ContractsAndMatchesDirectIntegration) {
  ParamSpec ps;
  ps.K_ell = 0.1;
  const SpectralGrid full(1, 256, 20.0);
  const Profile bump = gaussian_profile(0.5);
  const HydroState data = hydro_data(bump, bump, full);
  const wkb::Setup s = prepare_setup({1, 256, 20.0}, ps, {data}, {0.5}, 1);
  const Params p = s.at(0.5);
  const SchemeResult r = iterate_scheme(data, p, s.c, s.g, s.steps, 1e-11, 40);
  ASSERT_TRUE(r.diagnostics.converged);
  const auto& I = r.diagnostics.contraction_sequence;
  ASSERT_GE(I.size(), 3u);
  EXPECT_LT(I[2] / I[1], 0.6);
  const Trajectory d = direct_integrate(data, p, s.g, s.steps);
  const double gap = field_gap(r.trajectory.states.back().zeta, d.states.back().zeta) +
                     field_gap(r.trajectory.states.back().v, d.states.back().v);
  EXPECT_LT(gap, 1e-6);
}

TEST(EnergyMonitor, SolutionEnergyNearInitial) {
  ParamSpec ps;
  ps.K_ell = 0.1;
  const SpectralGrid full(1, 256, 20.0);
  const Profile bump = gaussian_profile(0.5);
  const HydroState data = hydro_data(bump, bump, full);
  const wkb::Setup s = prepare_setup({1, 256, 20.0}, ps, {data}, {1.0}, 1);
  const Trajectory tr = direct_integrate(data, s.at(1.0), s.g, s.steps);
  const EnergyReport e = energy_monitor(tr, s.c.omega_in, s.g);
  EXPECT_LE(e.max_ratio(), 1.05);
  EXPECT_GT(e.max_ratio(), 0.5);
}
