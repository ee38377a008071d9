#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "wkbnls/corrector.hpp"
#include "wkbnls/setup.hpp"

using namespace wkb;

namespace {

Trajectory rest_base(const SpectralGrid& g, double lambda, double T, int steps) {
  Params p;
  p.lambda = lambda;
  p.eps = 0.0;
  p.T = T;
  const HydroState zero{GridField(1, g.size(), true), GridField(1, g.size(), true)};
  return direct_integrate(zero, p, g, steps);
}

}  // namespace

// About the rest state the corrector decouples per mode: with zeta1 = a cos kx and
// v1 = c cos kx, a' = k^2 c and c' = -lambda a, a rotation at frequency k sqrt(lambda).
TEST(Corrector, PerModeOscillationAboutRest) {
  const double L = 4.0, lambda = 2.0, T = 1.0, a0 = 0.3, c0 = -0.2;
  const SpectralGrid g(1, 32, L);
  const double k = 3.0 * std::numbers::pi / L, w = k * std::sqrt(lambda);
  const Trajectory base = rest_base(g, lambda, T, 200);
  const HydroState init{sample(g, [&](double x, double) { return a0 * std::cos(k * x); }),
                        sample(g, [&](double x, double) { return c0 * std::cos(k * x); })};
  const CorrectorState c = solve_corrector(base, init, base.params, g);
  ASSERT_EQ(c.zeta1.size(), base.size());
  double err = 0.0;
  for (std::size_t n = 0; n < base.size(); n += 20) {
    const double t = base.times[n];
    const double a = a0 * std::cos(w * t) + k * k * c0 / w * std::sin(w * t);
    const double v = c0 * std::cos(w * t) - lambda * a0 / w * std::sin(w * t);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double cs = std::cos(k * g.x(i));
      err = std::max(err, std::abs(c.zeta1[n].values[i] - a * cs));
      err = std::max(err, std::abs(c.v1[n].values[i] - v * cs));
    }
  }
  EXPECT_LT(err, 1e-8);
}

TEST(Corrector, RequiresZeroEpsBase) {
  const SpectralGrid g(1, 32, 4.0);
  Params p;
  p.eps = 0.5;
  p.T = 0.1;
  const HydroState zero{GridField(1, g.size(), true), GridField(1, g.size(), true)};
  const Trajectory run = direct_integrate(zero, p, g, 4);
  EXPECT_THROW(solve_corrector(run, zero, p, g), ConfigError);
}

class Triviality : public ::testing::Test {
 protected:
  void SetUp() override {
    ParamSpec ps;
    ps.K_ell = 0.1;
    const SpectralGrid full(1, 256, 20.0);
    const Profile bump = gaussian_profile(0.5);
    const HydroState data = hydro_data(bump, bump, full);
    s = std::make_unique<wkb::Setup>(prepare_setup({1, 256, 20.0}, ps, {data}, {0.0}, 1));
    base = direct_integrate(data, s->at(0.0), s->g, s->steps);
  }
  std::unique_ptr<wkb::Setup> s;
  Trajectory base;
};

TEST_F(Triviality, ZeroDataGivesTrivialPhase) {
  const TrivialityReport r =
      check_phi1_triviality(constant_profile(0.0), constant_profile(0.0), base, s->at(0.0), s->g);
  EXPECT_TRUE(r.trivial);
  EXPECT_EQ(r.data_scale, 0.0);
}

TEST_F(Triviality, NonzeroDataGiveNontrivialPhase) {
  for (const auto& [a, b] : {std::pair{gaussian_profile(0.3, 0.5), constant_profile(0.0)},
                             std::pair{constant_profile(0.0), gaussian_profile(0.2, -0.5)}}) {
    const TrivialityReport r = check_phi1_triviality(a, b, base, s->at(0.0), s->g);
    EXPECT_FALSE(r.trivial);
    EXPECT_GT(r.sup_phi1, 1e3 * r.threshold);
  }
}

TEST_F(Triviality, ImaginarySourceDrivesZetaEvenForZeroData) {
  const HydroState zero{GridField(1, s->g.size(), true), GridField(1, s->g.size(), true)};
  const CorrectorState c = solve_corrector(base, zero, s->at(0.0), s->g);
  double re = 0.0, im = 0.0, v = 0.0;
  for (const auto& z : c.zeta1.back().values) {
    re = std::max(re, std::abs(z.real()));
    im = std::max(im, std::abs(z.imag()));
  }
  v = c.v1.back().max_abs();
  EXPECT_GT(im, 1e-6);
  EXPECT_LT(re, 1e-14);
  EXPECT_LT(v, 1e-14);
}
