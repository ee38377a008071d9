#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "wkbnls/fields_state.hpp"

using namespace wkb;

TEST(Params, Validation) {
  Params p;
  p.ell = 3.0;
  EXPECT_NO_THROW(p.validate());
  Params bad = p;
  bad.lambda = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = p;
  bad.ell = 0.4;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = p;
  bad.M = 1.0;
  bad.T = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = p;
  bad.eps = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Profile, GaussianGradientMatchesSpectralDerivative) {
  const SpectralGrid g(1, 256, 15.0);
  const Profile p = gaussian_profile(0.7, 0.5, 1.3);
  const GridField exact = sample_gradient(p, g);
  const GridField spectral = grad(sample_profile(p, g), g);
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(exact.values[i] - spectral.values[i]));
  EXPECT_LT(err, 1e-12);
  EXPECT_EQ(p.limit_minus, 0.0);
  EXPECT_EQ(p.limit_plus, 0.0);
}

TEST(Profile, SumAndScaling) {
  const Profile a = gaussian_profile(1.0), b = constant_profile(2.0);
  const Profile c = a + scaled(b, -0.5);
  EXPECT_DOUBLE_EQ(c.value(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(c.limit_plus, -1.0);
}

TEST(HydroState, GradientsAreIrrotationalIn2D) {
  const SpectralGrid g(2, 64, 10.0);
  const Profile p = gaussian_profile(0.5, 0.3, 1.0);
  const GridField v = sample_gradient(p, g);
  ASSERT_EQ(v.components, 2);
  EXPECT_LT(curl_residual(v, g), 1e-12);
  EXPECT_LT(gradient_structure_residual(v, g), 1e-12);

  GridField rot = v;
  for (std::size_t i = 0; i < g.size(); ++i) {
    rot(0, i) = -g.y(i) * std::exp(-g.x(i) * g.x(i) - g.y(i) * g.y(i));
    rot(1, i) = g.x(i) * std::exp(-g.x(i) * g.x(i) - g.y(i) * g.y(i));
  }
  EXPECT_GT(curl_residual(rot, g), 0.1);
}

TEST(HydroState, PeriodizationErrorOfDecayingData) {
  const SpectralGrid g(1, 256, 20.0);
  EXPECT_LT(periodization_error(gaussian_profile(0.5), g), 1e-80);
  EXPECT_DOUBLE_EQ(periodization_error(constant_profile(1.0), g), 1.0);
}

TEST(Trajectory, UniformTimesAndSchedule) {
  const auto t = uniform_times(2.0, 4);
  ASSERT_EQ(t.size(), 5u);
  EXPECT_DOUBLE_EQ(t[2], 1.0);
  EXPECT_DOUBLE_EQ(t.back(), 2.0);

  Trajectory tr;
  tr.params.delta_in = 0.5;
  tr.params.M = 0.2;
  tr.times = t;
  tr.attach_schedule();
  EXPECT_NEAR(tr.delta_of_t.back(), 0.1, 1e-15);
  tr.params.M = 1.0;
  EXPECT_THROW(tr.attach_schedule(), DomainError);
}

TEST(PhaseState, BackgroundTracksLinearDrift) {
  const SpectralGrid g(1, 64, 5.0);
  PhaseState ph;
  ph.psi_in = gaussian_profile(1.0);
  ph.phi_in = constant_profile(0.25);
  ph.lambda = 2.0;
  ph.t = 0.5;
  ph.psi_increment = GridField(1, g.size(), false);
  ph.phi_increment = GridField(1, g.size(), true);
  const GridField phi = ph.phi(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    EXPECT_NEAR(phi.values[i].real(), 0.25 - std::exp(-0.5 * g.x(i) * g.x(i)), 1e-15);
}

TEST(Snapshot, HeaderAndRowCount) {
  const SpectralGrid g(1, 8, 1.0);
  Trajectory tr;
  tr.times = {0.0, 0.1};
  tr.states = {{GridField(1, 8, true), GridField(1, 8, true)}, {GridField(1, 8, true), GridField(1, 8, true)}};
  std::ostringstream os;
  write_snapshot(os, tr, g);
  std::istringstream is(os.str());
  std::string line;
  int n = 0;
  std::getline(is, line);
  EXPECT_EQ(line.rfind("d=1,n=8,L=1", 0), 0u);
  while (std::getline(is, line)) ++n;
  EXPECT_EQ(n, 4);
}
