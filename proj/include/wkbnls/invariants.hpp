#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "analytic_norm.hpp"
#include "fields.hpp"
#include "fields_state.hpp"
#include "lognls.hpp"
#include "product_constant.hpp"
#include "profiles.hpp"
#include "reconstruction.hpp"
#include "setup.hpp"
#include "spectral_grid.hpp"
#include "spectral_ops.hpp"
#include "toolbox.hpp"
#include "wkb_scheme.hpp"

namespace wkb {

/// A measured quantity against its acceptance threshold.
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string detail;
};

inline Check upper_check(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value, threshold, std::isfinite(value) && value <= threshold, std::move(detail)};
}

inline Check band_check(std::string name, double value, double target, double tol, std::string detail = {}) {
  const bool ok = std::isfinite(value) && std::abs(value - target) <= tol;
  return {std::move(name), value, tol, ok, std::move(detail)};
}

namespace detail {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  LineFit f;
  const double den = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  const double ss_tot = syy - sy * sy / n;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

}  // namespace detail

/// ||f||^2_{ell+1,delta} = ||f||^2_{ell,delta} + ||grad f||^2_{ell,delta}, with the
/// gradient taken on the lattice; worst relative defect over random fields.
inline Check check_norm_identity(const SpectralGrid& g, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const GridField f = random_band_limited(g, 1, t % 2 == 0, rng);
    const Spectrum s = forward_transform(f, g);
    const Spectrum ds = spectral_derivative(s, DerivOp::grad, g);
    for (double ell : {0.0, 1.0, 2.0, 3.0})
      for (double delta : {0.0, 0.25, 0.5}) {
        const double lhs = analytic_norm_sq(s, {ell + 1.0, delta}, g);
        const double rhs = analytic_norm_sq(s, {ell, delta}, g) + analytic_norm_sq(ds, {ell, delta}, g);
        worst = std::max(worst, std::abs(lhs - rhs) / lhs);
      }
  }
  return upper_check("norm_identity", worst, 1e-12, std::to_string(trials) + " fields");
}

/// Centred difference of t -> ||f||^2_{ell, delta_in - M t} against -2M ||f||^2_{ell+1/2}
/// for a frozen field; returns the log-log slope of the defect in the step.
inline Check check_radius_derivative(const SpectralGrid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const GridField f = random_band_limited(g, 1, true, rng);
  const Spectrum s = forward_transform(f, g);
  const double ell = 1.0, delta_in = 0.5, M = 1.0, t0 = 0.2;
  const auto E = [&](double t) { return analytic_norm_sq(s, {ell, delta_in - M * t}, g); };
  const double exact = -2.0 * M * analytic_norm_sq(s, {ell + 0.5, delta_in - M * t0}, g);
  std::vector<double> lx, ly;
  for (double h = 0.04; h > 0.004; h *= 0.5) {
    const double fd = (E(t0 + h) - E(t0 - h)) / (2.0 * h);
    lx.push_back(std::log(h));
    ly.push_back(std::log(std::abs(fd - exact)));
  }
  const auto fit = detail::least_squares(lx, ly);
  return band_check("radius_derivative_slope", fit.slope, 2.0, 0.1);
}

/// Isometry of the Schroedinger multiplier in every (ell, delta) and its group law.
inline Check check_semigroup(const SpectralGrid& g, std::uint64_t seed, double eps = 0.7) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < 8; ++t) {
    const Spectrum s = forward_transform(random_band_limited(g, 1, false, rng), g);
    const double tau1 = 0.013 * (t + 1), tau2 = 0.029 * (t + 1);
    const Spectrum a = schrodinger_semigroup(s, tau1, eps, g);
    for (double ell : {0.0, 1.0, 2.0, 3.0})
      for (double delta : {0.0, 0.25, 0.5}) {
        const double n0 = analytic_norm(s, {ell, delta}, g);
        worst = std::max(worst, std::abs(analytic_norm(a, {ell, delta}, g) - n0) / n0);
      }
    Spectrum two = schrodinger_semigroup(a, tau2, eps, g);
    two -= schrodinger_semigroup(s, tau1 + tau2, eps, g);
    double top = 0.0, err = 0.0;
    for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
      top = std::max(top, std::abs(s.coeffs[k]));
      err = std::max(err, std::abs(two.coeffs[k]));
    }
    worst = std::max(worst, err / top);
  }
  return upper_check("semigroup_isometry_group_law", worst, 1e-12);
}

/// Count of violated toolbox inequalities over random paths, per item.
inline std::vector<Check> check_toolbox(const SpectralGrid& g, int trials, std::uint64_t seed, int calib_trials = 64) {
  const ToolboxConstants K = calibrate_toolbox_constants(1.0, g, calib_trials, seed);
  const Toolbox tb(g, K, {0.5, 1.0}, 0.1);
  std::mt19937_64 rng(seed + 17);
  std::vector<int> violations;
  std::vector<double> worst;
  std::vector<std::string> names;
  for (int t = 0; t < trials; ++t) {
    const bool real = t % 2 == 0;
    const FieldPath F1 = random_path(g, 1, real, 5, 0.1, rng);
    const FieldPath F2 = random_path(g, 1, real, 5, 0.1, rng);
    const auto res = tb.evaluate(F1, F2, 1.3, cplx(0.2, 0.5));
    if (names.empty()) {
      for (const auto& r : res) names.push_back(r.name);
      violations.assign(res.size(), 0);
      worst.assign(res.size(), 0.0);
    }
    for (std::size_t i = 0; i < res.size(); ++i) {
      if (!res[i].holds()) ++violations[i];
      worst[i] = std::max(worst[i], res[i].rhs > 0.0 ? res[i].lhs / res[i].rhs : 0.0);
    }
  }
  std::vector<Check> out;
  for (std::size_t i = 0; i < names.size(); ++i)
    out.push_back({"toolbox:" + names[i], static_cast<double>(violations[i]), 0.0, violations[i] == 0,
                   "worst lhs/rhs " + std::to_string(worst[i])});
  return out;
}

/// Split-step run of the uniform state e^kappa against e^{kappa - 2 i t lambda kappa / eps}.
inline Check check_uniform_solution(const SpectralGrid& g, double kappa, double lambda, double eps, double T,
                                    int steps) {
  WaveField u;
  u.eps = eps;
  u.u = GridField(1, g.size(), false);
  for (auto& z : u.u.values) z = std::exp(kappa);
  const Evolution ev = evolve(u, {lambda, eps}, g, T, steps);
  double worst = 0.0;
  for (const auto& w : ev.states) {
    const cplx exact = std::exp(cplx(kappa, -2.0 * w.t * lambda * kappa / eps));
    for (const auto& z : w.u.values) worst = std::max(worst, std::abs(z - exact));
  }
  return upper_check("uniform_solution", worst, 1e-10);
}

/// Adding 2 kappa to psi_in leaves (zeta, v) unchanged and shifts phi by -2 lambda kappa t.
inline Check check_scaling_covariance(const Trajectory& traj, const Profile& psi_in, const Profile& phi_in,
                                      double kappa, const SpectralGrid& g) {
  const PhaseSeries a = reconstruct_phases(traj, psi_in, phi_in, g);
  const PhaseSeries b = reconstruct_phases(traj, psi_in + constant_profile(2.0 * kappa), phi_in, g);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const GridField pa = a[i].phi(g), pb = b[i].phi(g);
    const GridField sa = a[i].psi(g), sb = b[i].psi(g);
    const double shift = -2.0 * traj.params.lambda * kappa * a[i].t;
    for (std::size_t k = 0; k < g.size(); ++k) {
      worst = std::max(worst, std::abs(pb.values[k].real() - pa.values[k].real() - shift));
      worst = std::max(worst, std::abs(sb.values[k] - sa.values[k] - 2.0 * kappa));
    }
  }
  return upper_check("scaling_covariance", worst, 1e-12);
}

/// Assembled wave function of the uniform state psi = 2 kappa, phi = -2 lambda kappa t.
inline Check check_uniform_assembly(const SpectralGrid& g, double kappa, double lambda, double eps, double t) {
  PhaseState ph;
  ph.psi_in = constant_profile(2.0 * kappa);
  ph.phi_in = constant_profile(0.0);
  ph.lambda = lambda;
  ph.t = t;
  ph.psi_increment = GridField(1, g.size(), false);
  ph.phi_increment = GridField(1, g.size(), true);
  const WaveField w = assemble_wavefunction(ph, eps, g);
  const cplx exact = std::exp(cplx(kappa, -2.0 * t * lambda * kappa / eps));
  double worst = 0.0;
  for (const auto& z : w.u.values) worst = std::max(worst, std::abs(z - exact) / std::abs(exact));
  return upper_check("uniform_assembly", worst, 1e-12);
}

/// Shift by c0 t on the lattice: multiplier e^{-i xi c0 t}.
inline GridField galilean_shift(const GridField& f, double c0t, const SpectralGrid& g) {
  Spectrum s = forward_transform(f, g);
  apply_multiplier(s, g, [&](std::size_t k) { return std::polar(1.0, -g.xi(k, 0) * c0t); });
  return inverse_transform(s, g, f.real);
}

/// (zeta(x), v(x) + c0) evolves into (zeta, v + c0)(t, x - c0 t), d = 1.
inline Check check_galilean(const HydroState& data, const Params& p, const SpectralGrid& g, int steps, double c0) {
  detail::require(g.dim() == 1, "check_galilean: one-dimensional grid expected");
  const Trajectory a = direct_integrate(data, p, g, steps);
  HydroState moved = data;
  for (auto& z : moved.v.values) z += c0;
  const Trajectory b = direct_integrate(moved, p, g, steps);
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a.times[i];
    GridField vz = galilean_shift(a.states[i].v, c0 * t, g);
    for (auto& z : vz.values) z += c0;
    const GridField zz = galilean_shift(a.states[i].zeta, c0 * t, g);
    worst = std::max({worst, (zz - b.states[i].zeta).max_abs(), (vz - b.states[i].v).max_abs()});
    scale = std::max({scale, a.states[i].zeta.max_abs(), a.states[i].v.max_abs()});
  }
  return upper_check("galilean_covariance", worst / scale, 1e-10);
}

/// Relative mass drift of a split-step run of e^{psi/2 + i phi/eps}.
inline Check check_mass(const Profile& psi, const Profile& phi, double lambda, double eps, const SpectralGrid& g,
                        double T, int steps) {
  const Evolution ev = evolve(wave_from_profiles(psi, phi, eps, g), {lambda, eps}, g, T, steps);
  return upper_check("mass_conservation", ev.max_mass_drift(), 1e-10);
}

/// Share of sum (1 + xi^2)^ell e^{2 delta |xi|} mag^2 carried by the outer quarter of the
/// band where mag stays above `rel_noise` times its maximum.
inline double weighted_tail_fraction(const std::vector<double>& xi, const std::vector<double>& mag, double ell,
                                     double delta, double rel_noise = 1e-13) {
  double top = 0.0, edge = 0.0;
  for (double m : mag) top = std::max(top, m);
  for (std::size_t i = 0; i < xi.size(); ++i)
    if (mag[i] > rel_noise * top) edge = std::max(edge, std::abs(xi[i]));
  double total = 0.0, outer = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const double a = std::abs(xi[i]);
    if (a > edge) continue;
    const double w = std::exp(ell * std::log1p(a * a) + 2.0 * delta * a + 2.0 * std::log(mag[i]));
    total += w;
    if (a > 0.75 * edge) outer += w;
  }
  return total > 0.0 ? outer / total : 0.0;
}

/// Profile constructions g1, g2, f2, h1 on the 1-d grid `g` and a wide grid for the spectrum of g2.
inline std::vector<Check> check_profiles(const SpectralGrid& g) {
  std::vector<Check> out;
  const Profile f1 = erf_profile(0.0, 1.0);
  const double lim = std::max({std::abs(f1.value(0.0, 0.0) - 0.5), std::abs(f1.value(g.L(), 0) - 1.0),
                               std::abs(f1.value(-g.L(), 0) - 0.0)});
  out.push_back(upper_check("g1_limits", lim, 1e-12));

  double mono = 0.0, neg = 0.0;
  for (int j = 1; j < g.n(); ++j) {
    mono = std::max(mono, lemma::g1(g.node(j - 1)) - lemma::g1(g.node(j)));
    neg = std::max(neg, -lemma::g2(g.node(j)));
  }
  out.push_back(upper_check("g1_monotone", mono, 0.0));
  out.push_back(upper_check("g2_nonnegative", neg, 0.0));

  const auto f2q = f2_by_quadrature(g);
  const double oracle = lemma::log_moment();
  out.push_back(upper_check("f2_at_origin", std::abs(f2q[g.n() / 2] - oracle), 1e-8,
                            "log moment " + std::to_string(oracle)));
  double direct = 0.0;
  for (int j = 0; j < g.n(); j += 8) direct = std::max(direct, std::abs(f2q[j] - lemma::f2(g.node(j))));
  out.push_back(upper_check("f2_quadrature_vs_direct", direct, 1e-8));

  const Spectrum h = forward_transform(sample(g, [](double x, double) { return lemma::h1(x); }), g);
  std::vector<double> xs, ms;
  for (std::size_t k = 1; k < g.size() / 2; ++k) {
    xs.push_back(g.xi(k, 0));
    ms.push_back(std::abs(h(0, k)));
  }
  const double sh = gaussian_envelope_fit(xs, ms, 1.0, 6.0).slope;
  out.push_back(band_check("h1_envelope_slope", sh, -0.5, 0.005));

  const SpectralGrid wide(1, 4096, 256.0);
  const auto [xi, mag] = g2_spectrum(wide);
  out.push_back(band_check("g2_envelope_slope", gaussian_envelope_fit(xi, mag, 4.5, 6.5).slope, -0.5, 0.025));

  double tail = 0.0;
  for (double ell : {0.0, 2.0, 4.0})
    for (double delta : {0.0, 0.5, 1.0}) {
      const auto r = finite_norm_check(h, {ell, delta}, g);
      tail = std::max(tail, r.finite() ? r.tail_fraction : std::numeric_limits<double>::infinity());
      tail = std::max(tail, weighted_tail_fraction(xi, mag, ell, delta));
    }
  out.push_back(upper_check("derivative_profiles_finite_norm", tail, 1e-6, "largest tail fraction"));

  const Profile up = two_limit_profile(0.0, std::numeric_limits<double>::infinity());
  const double e1 = up.value(g.L(), 0.0), e2 = up.value(4.0 * g.L(), 0.0);
  out.push_back({"infinite_limit_growth", e2 - e1, 0.0, e2 > e1 && e1 > 1.0, "f2 at L and 4L"});
  return out;
}

}  // namespace wkb
