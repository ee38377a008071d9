#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "wkbnls/invariants.hpp"
#include "wkbnls/reconstruction.hpp"
#include "wkbnls/setup.hpp"

using namespace wkb;

TEST(Trapezoid, ExactForLinearIntegrands) {
  std::vector<GridField> f;
  for (int n = 0; n <= 4; ++n) {
    GridField x(1, 3, true);
    for (auto& z : x.values) z = 2.0 * (0.25 * n) + 1.0;
    f.push_back(x);
  }
  const auto F = detail::cumulative_trapezoid(f, 0.25);
  ASSERT_EQ(F.size(), 5u);
  EXPECT_EQ(F[0].values[0], cplx(0.0));
  EXPECT_NEAR(F[4].values[1].real(), 1.0 + 1.0, 1e-15);
}

// Constant psi_in = 2 kappa with zero phase gives u = exp(kappa - 2 i lambda kappa t / eps).
TEST(Reconstruction, UniformStateAssemblesToExactSolution) {
  const SpectralGrid g(1, 32, 4.0);
  const double kappa = 0.3, lambda = 1.5, eps = 0.25, T = 0.7;
  Params p;
  p.lambda = lambda;
  p.eps = eps;
  p.T = T;
  const HydroState zero{GridField(1, g.size(), true), GridField(1, g.size(), true)};
  const Trajectory tr = direct_integrate(zero, p, g, 7);
  const PhaseSeries ph = reconstruct_phases(tr, constant_profile(2.0 * kappa), constant_profile(0.0), g);
  const WaveField u = assemble_wavefunction(ph.back(), eps, g);
  const cplx exact = std::exp(cplx(kappa, -2.0 * lambda * kappa * T / eps));
  for (const auto& z : u.u.values) EXPECT_LT(std::abs(z - exact), 1e-13);
  EXPECT_TRUE(check_uniform_assembly(g, kappa, lambda, eps, T).passed);
}

TEST(Reconstruction, PhaseCsvHasOneRowPerNode) {
  const SpectralGrid g(1, 16, 2.0);
  Params p;
  p.eps = 0.5;
  p.T = 0.1;
  const HydroState zero{GridField(1, g.size(), true), GridField(1, g.size(), true)};
  const Trajectory tr = direct_integrate(zero, p, g, 2);
  const PhaseSeries ph = reconstruct_phases(tr, constant_profile(1.0), constant_profile(0.0), g);
  std::ostringstream os;
  write_phase_csv(os, ph.back(), p.eps, g);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,psi_re,psi_im,phi_re,phi_im,u_re,u_im");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 16);
}

TEST(Reconstruction, RejectsZeroEpsAssembly) {
  const SpectralGrid g(1, 16, 1.0);
  PhaseState ph;
  ph.psi_increment = GridField(1, g.size(), false);
  ph.phi_increment = GridField(1, g.size(), true);
  EXPECT_THROW(assemble_wavefunction(ph, 0.0, g), ConfigError);
}

TEST(Reconstruction, GradientOfPhasesMatchesFlow) {
  ParamSpec ps;
  ps.K_ell = 0.1;
  const SpectralGrid full(1, 256, 20.0);
  const Profile bump = gaussian_profile(0.5);
  const HydroState data = hydro_data(bump, bump, full);
  const wkb::Setup s = prepare_setup({1, 256, 20.0}, ps, {data}, {0.5}, 1);
  const Trajectory tr = direct_integrate(data, s.at(0.5), s.g, 4 * s.steps);
  const PhaseSeries ph = reconstruct_phases(tr, bump, bump, s.g);
  const ConsistencyReport r = consistency_residuals(tr, ph, s.g);
  EXPECT_LT(r.max_psi_l2(), 1e-6);
  EXPECT_LT(r.max_phi_l2(), 1e-6);
}
