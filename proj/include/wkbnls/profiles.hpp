#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "analytic_norm.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "fields_state.hpp"
#include "spectral_grid.hpp"
#include "spectral_ops.hpp"

namespace wkb {

namespace lemma {

inline constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343818684758586311649;

/// Standard Gaussian density h1 and its first and fourth derivatives.
inline double h1(double x) { return inv_sqrt_2pi * std::exp(-0.5 * x * x); }
inline double h1_prime(double x) { return -x * h1(x); }
inline double h1_fourth(double x) {
  const double x2 = x * x;
  return (x2 * x2 - 6.0 * x2 + 3.0) * h1(x);
}
/// g1(x) = int_{-inf}^x h1.
inline double g1(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// h2(x) = 1/(1+x) on x > 0, zero otherwise.
inline double h2(double x) { return x > 0.0 ? 1.0 / (1.0 + x) : 0.0; }

/// int_0^inf k(x - y) / (1 + y) dy for a kernel k negligible outside [-w, w].
template <class Kernel>
double convolve_h2(Kernel&& k, double x, double w) {
  using boost::math::quadrature::gauss_kronrod;
  const double a = std::max(0.0, x - w);
  const double b = std::max(0.0, x + w);
  if (b <= a) return 0.0;
  const auto f = [&](double y) { return k(x - y) / (1.0 + y); };
  double acc = 0.0;
  const double pieces = std::ceil((b - a) / 2.0);
  const double h = (b - a) / pieces;
  for (int i = 0; i < static_cast<int>(pieces); ++i)
    acc += gauss_kronrod<double, 31>::integrate(f, a + i * h, a + (i + 1) * h, 8, 1e-14);
  return acc;
}

/// Upper bound on what the window [x - w, x + w] drops from h1 * h2.
inline double window_truncation_bound(double w) { return 2.0 * g1(-w); }

/// g2 = h1 * h2, g2' = h1' * h2 and h1'''' * h2, with a kernel window w.
inline double g2(double x, double w = 12.0) { return convolve_h2(h1, x, w); }
inline double g2_prime(double x, double w = 12.0) { return convolve_h2(h1_prime, x, w); }
inline double g2_fourth(double x, double w = 12.0) { return convolve_h2(h1_fourth, x, w); }

/// f2 = int_{-inf}^x g2 = g1 * h2. For y <= x - w, g1(x - y) = 1 up to the
/// window bound, which contributes ln(1 + max(0, x - w)) in closed form.
inline double f2(double x, double w = 12.0) {
  using boost::math::quadrature::gauss_kronrod;
  const double a = std::max(0.0, x - w);
  const double b = std::max(0.0, x + w);
  double acc = std::log1p(a);
  if (b <= a) return acc;
  const auto f = [&](double y) { return g1(x - y) / (1.0 + y); };
  const double pieces = std::ceil((b - a) / 2.0);
  const double h = (b - a) / pieces;
  for (int i = 0; i < static_cast<int>(pieces); ++i)
    acc += gauss_kronrod<double, 31>::integrate(f, a + i * h, a + (i + 1) * h, 8, 1e-14);
  return acc;
}

/// int_{-inf}^0 h1(y) ln(1 - y) dy by tanh-sinh quadrature.
inline double log_moment() {
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate([](double y) { return h1(y) * std::log1p(-y); },
                      -std::numeric_limits<double>::infinity(), 0.0);
}

}  // namespace lemma

struct ProfileSpec {
  /// gaussian_bump, erf_profile, log_tail, two_limit or zero.
  std::string kind = "gaussian_bump";
  double amplitude = 1.0;
  double center = 0.0;
  double width = 1.0;
  double a_minus = 0.0;
  double a_plus = 1.0;
  /// log_tail: f3(x) = sign_plus f2(x) + sign_minus f2(-x); a zero sign drops the term.
  int sign_plus = 1;
  int sign_minus = 0;
  /// Half-width of the convolution window for the log-tail profiles.
  double window = 12.0;

  void validate() const {
    detail::require(width > 0.0, "ProfileSpec: width must be positive");
    detail::require(window > 0.0, "ProfileSpec: window must be positive");
    detail::require(kind == "gaussian_bump" || kind == "erf_profile" || kind == "log_tail" ||
                        kind == "two_limit" || kind == "zero",
                    "ProfileSpec: unknown kind '" + kind + "'");
  }
};

/// f1 = a_- + (a_+ - a_-) g1 with derivative (a_+ - a_-) h1.
inline Profile erf_profile(double a_minus, double a_plus) {
  detail::require(std::isfinite(a_minus) && std::isfinite(a_plus), "erf_profile: limits must be finite");
  Profile p;
  p.name = "erf_profile";
  const double jump = a_plus - a_minus;
  p.value = [=](double x, double) { return a_minus + jump * lemma::g1(x); };
  p.gradient = [=](double x, double) { return std::array<double, 2>{jump * lemma::h1(x), 0.0}; };
  p.limit_minus = a_minus;
  p.limit_plus = a_plus;
  return p;
}

/// sign_plus f2(x) + sign_minus f2(-x) plus a constant offset. Throws when the
/// convolution window would truncate more than 1e-8.
inline Profile log_tail_profile(int sign_plus, int sign_minus, double offset = 0.0, double window = 12.0) {
  detail::require(std::abs(sign_plus) <= 1 && std::abs(sign_minus) <= 1, "log_tail_profile: signs in {-1, 0, 1}");
  if (lemma::window_truncation_bound(window) > 1e-8) {
    double need = window;
    while (lemma::window_truncation_bound(need) > 1e-8) need += 0.5;
    throw DomainError("log_tail_profile: convolution window too small, extend to >= " + std::to_string(need));
  }
  Profile p;
  p.name = "log_tail";
  const double sp = sign_plus, sm = sign_minus, w = window;
  p.value = [=](double x, double) {
    double v = offset;
    if (sp != 0.0) v += sp * lemma::f2(x, w);
    if (sm != 0.0) v += sm * lemma::f2(-x, w);
    return v;
  };
  p.gradient = [=](double x, double) {
    double d = 0.0;
    if (sp != 0.0) d += sp * lemma::g2(x, w);
    if (sm != 0.0) d -= sm * lemma::g2(-x, w);
    return std::array<double, 2>{d, 0.0};
  };
  const double inf = std::numeric_limits<double>::infinity();
  const auto lim = [&](double s) { return s == 0.0 ? 0.0 : s * inf; };
  p.limit_plus = offset + lim(sp);
  p.limit_minus = offset + lim(sm);
  return p;
}

/// Profile with prescribed limits at -inf and +inf, any of them possibly infinite.
inline Profile two_limit_profile(double a_minus, double a_plus, double window = 12.0) {
  const bool fm = std::isfinite(a_minus), fp = std::isfinite(a_plus);
  if (fm && fp) return erf_profile(a_minus, a_plus);
  const auto sgn = [](double a) { return a > 0.0 ? 1 : -1; };
  if (fm) return log_tail_profile(sgn(a_plus), 0, a_minus, window);
  if (fp) return log_tail_profile(0, sgn(a_minus), a_plus, window);
  return log_tail_profile(sgn(a_plus), sgn(a_minus), 0.0, window);
}

inline Profile make_profile(const ProfileSpec& s) {
  s.validate();
  if (s.kind == "zero") return constant_profile(0.0);
  if (s.kind == "gaussian_bump") return gaussian_profile(s.amplitude, s.center, s.width);
  if (s.kind == "erf_profile") return erf_profile(s.a_minus, s.a_plus);
  if (s.kind == "log_tail") return log_tail_profile(s.sign_plus, s.sign_minus, 0.0, s.window);
  return two_limit_profile(s.a_minus, s.a_plus, s.window);
}

/// Data family psi_in = psi0 + eps psi1 + eps^p psi_r (likewise phi).
struct FamilySpec {
  ProfileSpec psi0{};
  ProfileSpec phi0{};
  ProfileSpec psi1{.kind = "zero"};
  ProfileSpec phi1{.kind = "zero"};
  ProfileSpec psi_rem{.kind = "zero"};
  ProfileSpec phi_rem{.kind = "zero"};
  double remainder_exponent = 2.0;

  void validate() const {
    detail::require(remainder_exponent > 1.0, "FamilySpec: remainder exponent must exceed 1");
  }
};

struct FamilyMember {
  double eps = 0.0;
  Profile psi_in;
  Profile phi_in;
  double D = 0.0;        // D^eps_k: gradient differences at (k, k+1)
  double D_tilde = 0.0;  // potential differences at (k, k+1)
  double r = 0.0;        // r^eps_{ell-2}
  double r_tilde = 0.0;  // r~^eps_{ell-1}
};

inline Profile affine_combination(const Profile& a, const Profile& b, double sb, const Profile& c, double sc) {
  Profile out = a;
  if (sb != 0.0) out = out + scaled(b, sb);
  if (sc != 0.0) out = out + scaled(c, sc);
  out.name = a.name;
  return out;
}

/// Member of the family at eps with the data-convergence quantities attached:
/// D and D~ at index `k`, r at ell - 2 and r~ at ell - 1, all at radius delta_in.
inline FamilyMember build_family(const FamilySpec& spec, double eps, double ell, double k, double delta_in,
                                 const SpectralGrid& g) {
  spec.validate();
  const Profile psi0 = make_profile(spec.psi0), phi0 = make_profile(spec.phi0);
  const Profile psi1 = make_profile(spec.psi1), phi1 = make_profile(spec.phi1);
  const Profile psir = make_profile(spec.psi_rem), phir = make_profile(spec.phi_rem);
  const double ep = eps > 0.0 ? std::pow(eps, spec.remainder_exponent) : 0.0;

  FamilyMember m;
  m.eps = eps;
  m.psi_in = affine_combination(psi0, psi1, eps, psir, ep);
  m.phi_in = affine_combination(phi0, phi1, eps, phir, ep);

  const auto pair_norm = [&](const GridField& a, double la, const GridField& b, double lb) {
    return std::sqrt(analytic_norm_sq(a, {la, delta_in}, g) + analytic_norm_sq(b, {lb, delta_in}, g));
  };
  GridField dpsi = sample_profile(m.psi_in, g) - sample_profile(psi0, g);
  GridField dphi = sample_profile(m.phi_in, g) - sample_profile(phi0, g);
  GridField dgpsi = sample_gradient(m.psi_in, g) - sample_gradient(psi0, g);
  GridField dgphi = sample_gradient(m.phi_in, g) - sample_gradient(phi0, g);
  m.D = pair_norm(dgpsi, k, dgphi, k + 1.0);
  m.D_tilde = pair_norm(dpsi, k, dphi, k + 1.0);

  GridField rpsi = dpsi, rphi = dphi, rgpsi = dgpsi, rgphi = dgphi;
  rpsi.axpy(-eps, sample_profile(psi1, g));
  rphi.axpy(-eps, sample_profile(phi1, g));
  rgpsi.axpy(-eps, sample_gradient(psi1, g));
  rgphi.axpy(-eps, sample_gradient(phi1, g));
  m.r = analytic_norm(rgpsi, {ell - 2.0, delta_in}, g) + analytic_norm(rgphi, {ell - 1.0, delta_in}, g);
  m.r_tilde = analytic_norm(rpsi, {ell - 1.0, delta_in}, g) + analytic_norm(rphi, {ell, delta_in}, g);
  return m;
}

/// Largest |xi| at which |f^| exceeds `rel_noise` times its maximum.
inline double spectral_noise_edge(const Spectrum& s, const SpectralGrid& g, double rel_noise = 1e-13) {
  double top = 0.0;
  for (const auto& z : s.coeffs) top = std::max(top, std::abs(z));
  double edge = 0.0;
  for (int c = 0; c < s.components; ++c)
    for (std::size_t k = 0; k < g.size(); ++k)
      if (std::abs(s(c, k)) > rel_noise * top) edge = std::max(edge, std::sqrt(g.xi_sq(k)));
  return edge;
}

struct FiniteNormReport {
  double norm = 0.0;
  double edge = 0.0;           // noise edge of the spectrum
  double tail_fraction = 0.0;  // weighted mass beyond 3/4 of the edge over the total
  bool finite() const { return std::isfinite(norm) && tail_fraction < 1e-6; }
};

/// ||f||_{ell, delta} from a sampled spectrum restricted to the modes above the
/// noise floor, together with the fraction of weighted mass in the outer quarter
/// of that band; a summable weighted spectrum leaves a negligible tail.
inline FiniteNormReport finite_norm_check(const Spectrum& s, const WeightParams& w, const SpectralGrid& g,
                                          double rel_noise = 1e-13) {
  FiniteNormReport r;
  r.edge = spectral_noise_edge(s, g, rel_noise);
  const SpectralGrid banded = g.with_band(std::max(r.edge, g.dxi()));
  r.norm = analytic_norm(s, w, banded);
  const SpectralGrid inner = g.with_band(std::max(0.75 * r.edge, g.dxi()));
  const double total = analytic_norm_sq(s, w, banded);
  const double core = analytic_norm_sq(s, w, inner);
  r.tail_fraction = total > 0.0 ? std::max(0.0, total - core) / total : 0.0;
  return r;
}

struct SpectralFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points = 0;
};

/// Least-squares slope of log|f^(xi)| against xi^2 over xi_lo <= xi <= xi_hi (d = 1).
inline SpectralFit gaussian_envelope_fit(const std::vector<double>& xi, const std::vector<double>& mag,
                                         double xi_lo, double xi_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    if (xi[i] < xi_lo || xi[i] > xi_hi || !(mag[i] > 0.0)) continue;
    const double X = xi[i] * xi[i], Y = std::log(mag[i]);
    sx += X;
    sy += Y;
    sxx += X * X;
    sxy += X * Y;
    ++n;
  }
  detail::require(n >= 3, "gaussian_envelope_fit: fewer than 3 points in the window");
  SpectralFit f;
  f.points = n;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

/// |g2^(xi)| on the positive lattice of a 1-d grid, obtained from the decaying
/// fourth derivative: g2^ = FT(h1'''' * h2) / xi^4. Returns (xi, |g2^|).
inline std::pair<std::vector<double>, std::vector<double>> g2_spectrum(const SpectralGrid& g, double window = 12.0) {
  detail::require(g.dim() == 1, "g2_spectrum: one-dimensional grid expected");
  const GridField q = sample(g, [&](double x, double) { return lemma::g2_fourth(x, window); }, true);
  const Spectrum s = forward_transform(q, g);
  std::vector<double> xi, mag;
  for (std::size_t k = 1; k < g.size() / 2; ++k) {
    const double x = g.xi(k, 0);
    xi.push_back(x);
    mag.push_back(std::abs(s(0, k)) / std::pow(x, 4));
  }
  return {xi, mag};
}

/// Cumulative trapezoid of nodal g2 values from the left box edge with the
/// Euler-Maclaurin end correction -dx^2/12 (g2'(x) - g2'(x_0)); approximates f2
/// on the grid (d = 1).
inline std::vector<double> f2_by_quadrature(const SpectralGrid& g, double window = 12.0) {
  detail::require(g.dim() == 1, "f2_by_quadrature: one-dimensional grid expected");
  const int n = g.n();
  const double dx = g.dx();
  std::vector<double> out(n);
  const double x0 = g.node(0);
  const double start = lemma::f2(x0, window);
  const double d0 = lemma::g2_prime(x0, window);
  double acc = 0.0;
  double prev = lemma::g2(x0, window);
  out[0] = start;
  for (int j = 1; j < n; ++j) {
    const double x = g.node(j);
    const double cur = lemma::g2(x, window);
    acc += 0.5 * dx * (prev + cur);
    out[j] = start + acc - dx * dx / 12.0 * (lemma::g2_prime(x, window) - d0);
    prev = cur;
  }
  return out;
}

}  // namespace wkb
