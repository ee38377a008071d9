#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "wkbnls/invariants.hpp"
#include "wkbnls/profiles.hpp"

using namespace wkb;

TEST(Profiles, G1LimitsAndSymmetry) {
  EXPECT_DOUBLE_EQ(lemma::g1(-40.0), 0.0);
  EXPECT_DOUBLE_EQ(lemma::g1(40.0), 1.0);
  EXPECT_DOUBLE_EQ(lemma::g1(0.0), 0.5);
  for (double x : {0.3, 1.7, 4.0}) EXPECT_NEAR(lemma::g1(x) + lemma::g1(-x), 1.0, 1e-15);
}

TEST(Profiles, G2IsPositiveWithSlowDecay) {
  for (double x : {-6.0, -1.0, 0.0, 2.0, 10.0}) EXPECT_GT(lemma::g2(x), 0.0);
  // h2 convolved with a unit-mass kernel behaves like 1/x far to the right.
  EXPECT_NEAR(lemma::g2(200.0) * 201.0, 1.0, 1e-3);
  EXPECT_LT(lemma::g2(-10.0), 1e-15);
}

TEST(Profiles, F2IsAPrimitiveOfG2) {
  const double h = 1e-3;
  for (double x : {-2.0, 0.5, 3.0}) {
    const double fd = (lemma::f2(x + h) - lemma::f2(x - h)) / (2.0 * h);
    EXPECT_NEAR(fd, lemma::g2(x), 1e-6);
  }
}

TEST(Profiles, ConstructionChecksPass) {
  for (const Check& c : check_profiles(SpectralGrid(1, 1024, 20.0))) EXPECT_TRUE(c.passed) << c.name << " " << c.value;
}

TEST(Profiles, ErfProfileLimits) {
  const Profile p = erf_profile(-1.0, 2.0);
  EXPECT_EQ(p.limit_minus, -1.0);
  EXPECT_EQ(p.limit_plus, 2.0);
  EXPECT_NEAR(p.value(30.0, 0.0), 2.0, 1e-15);
  EXPECT_THROW(erf_profile(0.0, std::numeric_limits<double>::infinity()), ConfigError);
}

TEST(Profiles, LogTailLimitsAndWindowGuard) {
  const Profile p = two_limit_profile(0.0, std::numeric_limits<double>::infinity());
  EXPECT_EQ(p.limit_plus, std::numeric_limits<double>::infinity());
  EXPECT_EQ(p.limit_minus, 0.0);
  EXPECT_GT(p.value(50.0, 0.0), p.value(10.0, 0.0));
  EXPECT_THROW(log_tail_profile(1, 0, 0.0, 3.0), DomainError);
}

TEST(Profiles, SpecValidation) {
  EXPECT_THROW(make_profile(ProfileSpec{.kind = "square"}), ConfigError);
  EXPECT_NO_THROW(make_profile(ProfileSpec{.kind = "zero"}));
}

TEST(Family, EpsIndependentDataHaveNoDataError) {
  const SpectralGrid g(1, 256, 20.0);
  FamilySpec spec;
  spec.psi0 = {.kind = "gaussian_bump", .amplitude = 0.5};
  spec.phi0 = spec.psi0;
  const FamilyMember m = build_family(spec, 0.125, 3.0, 2.5, 0.5, g);
  EXPECT_EQ(m.D, 0.0);
  EXPECT_EQ(m.D_tilde, 0.0);
  EXPECT_EQ(m.r, 0.0);
}

TEST(Family, AffineDataScaleLinearlyWithZeroRemainder) {
  const SpectralGrid g(1, 256, 20.0);
  FamilySpec spec;
  spec.psi0 = {.kind = "gaussian_bump", .amplitude = 0.5};
  spec.phi0 = spec.psi0;
  spec.psi1 = {.kind = "gaussian_bump", .amplitude = 0.3, .center = 0.5};
  const FamilyMember a = build_family(spec, 0.1, 3.0, 2.5, 0.5, g);
  const FamilyMember b = build_family(spec, 0.05, 3.0, 2.5, 0.5, g);
  EXPECT_NEAR(a.D / b.D, 2.0, 1e-10);
  EXPECT_LT(a.r, 1e-8 * a.D);
  EXPECT_LT(a.r_tilde, 1e-8 * a.D_tilde);

  spec.psi_rem = {.kind = "gaussian_bump", .amplitude = 1.0};
  const FamilyMember c = build_family(spec, 0.1, 3.0, 2.5, 0.5, g);
  const FamilyMember d = build_family(spec, 0.05, 3.0, 2.5, 0.5, g);
  EXPECT_NEAR(c.r / d.r, 4.0, 1e-8);
}
