#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fields.hpp"
#include "spectral_grid.hpp"
#include "spectral_ops.hpp"

namespace wkb {

struct WeightParams {
  double ell = 0.0;
  double delta = 0.0;
};

/// Norm value together with a finiteness diagnostic.
struct NormReport {
  double value = 0.0;
  bool finite = true;
  std::string diagnostic;
};

namespace detail {

inline double lattice_measure(const SpectralGrid& g) {
  return std::pow(g.dxi() / (2.0 * std::numbers::pi), g.dim());
}

inline double log_weight_sq(const SpectralGrid& g, std::size_t k, const WeightParams& w) {
  const double b = g.bracket(k);
  return 2.0 * w.ell * std::log(b) + 2.0 * w.delta * b;
}

}  // namespace detail

/// Squared weighted norm sum_k <xi>^{2 ell} e^{2 delta <xi>} |f^_k|^2 (dxi / 2pi)^d,
/// accumulated as max-shifted exponentials over the resolved modes.
inline NormReport analytic_norm_sq_report(const Spectrum& s, const WeightParams& w,
                                          const SpectralGrid& g) {
  detail::require(w.ell >= 0.0 && w.delta >= 0.0, "analytic_norm: ell and delta must be >= 0");
  detail::require(s.bins() == g.size(), "analytic_norm: spectrum does not match grid");
  double top = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < s.components; ++c)
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!g.resolved(k)) continue;
      const double a = std::norm(s(c, k));
      if (a > 0.0) top = std::max(top, detail::log_weight_sq(g, k, w) + std::log(a));
    }
  NormReport r;
  if (top == -std::numeric_limits<double>::infinity()) return r;
  double acc = 0.0;
  for (int c = 0; c < s.components; ++c)
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!g.resolved(k)) continue;
      const double a = std::norm(s(c, k));
      if (a > 0.0) acc += std::exp(detail::log_weight_sq(g, k, w) + std::log(a) - top);
    }
  const double logv = top + std::log(acc) + std::log(detail::lattice_measure(g));
  if (!std::isfinite(logv) || logv > std::log(std::numeric_limits<double>::max())) {
    r.value = std::numeric_limits<double>::infinity();
    r.finite = false;
    r.diagnostic = "norm not finite at radius delta = " + std::to_string(w.delta);
    return r;
  }
  r.value = std::exp(logv);
  return r;
}

inline double analytic_norm_sq(const Spectrum& s, const WeightParams& w, const SpectralGrid& g) {
  return analytic_norm_sq_report(s, w, g).value;
}
inline double analytic_norm(const Spectrum& s, const WeightParams& w, const SpectralGrid& g) {
  return std::sqrt(analytic_norm_sq(s, w, g));
}
inline double analytic_norm(const GridField& f, const WeightParams& w, const SpectralGrid& g) {
  return analytic_norm(forward_transform(f, g), w, g);
}
inline double analytic_norm_sq(const GridField& f, const WeightParams& w, const SpectralGrid& g) {
  return analytic_norm_sq(forward_transform(f, g), w, g);
}

/// Weighted inner product, linear in the first slot and antilinear in the second.
inline cplx analytic_inner(const Spectrum& a, const Spectrum& b, const WeightParams& w,
                           const SpectralGrid& g) {
  detail::require(a.components == b.components && a.bins() == b.bins() && a.bins() == g.size(),
                  "analytic_inner: shape mismatch");
  double top = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < a.components; ++c)
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!g.resolved(k)) continue;
      const double m = std::abs(a(c, k)) * std::abs(b(c, k));
      if (m > 0.0) top = std::max(top, detail::log_weight_sq(g, k, w) + std::log(m));
    }
  if (top == -std::numeric_limits<double>::infinity()) return {0.0, 0.0};
  cplx acc{0.0, 0.0};
  for (int c = 0; c < a.components; ++c)
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!g.resolved(k)) continue;
      const cplx p = a(c, k) * std::conj(b(c, k));
      if (p == cplx{0.0, 0.0}) continue;
      acc += std::exp(detail::log_weight_sq(g, k, w) - top) * p;
    }
  return acc * std::exp(top) * detail::lattice_measure(g);
}

inline cplx analytic_inner(const GridField& a, const GridField& b, const WeightParams& w,
                           const SpectralGrid& g) {
  return analytic_inner(forward_transform(a, g), forward_transform(b, g), w, g);
}

/// Grid-exact constant C in max|f| <= C ||f||_{ell,0}, valid for ell >= 0 on this lattice.
inline double sobolev_constant(double ell, const SpectralGrid& g) {
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.resolved(k)) s += std::pow(g.bracket(k), -2.0 * ell);
  return std::sqrt(s * detail::lattice_measure(g));
}

/// Time-indexed samples f(t_i), t_i = i dt.
struct TimeSeries {
  double dt = 0.0;
  std::vector<Spectrum> samples;
};

/// Radius schedule delta(t) = delta_in - rate t.
struct RadiusSchedule {
  double delta_in = 0.0;
  double rate = 0.0;
  double at(double t) const { return delta_in - rate * t; }
};

/// Energy functional values at every node:
///   ||f(t)||^2_{ell, delta(t)} + 2 M int_0^t ||f||^2_{ell + shift, delta(tau)} dtau
/// with trapezoid quadrature in time.
inline std::vector<double> energy_functional_series(const TimeSeries& traj, double M, double ell,
                                                    const RadiusSchedule& sched,
                                                    const SpectralGrid& g,
                                                    double integral_shift = 0.5) {
  std::vector<double> out(traj.samples.size());
  double integral = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const double t = traj.dt * static_cast<double>(i);
    const double delta = sched.at(t);
    if (delta < -1e-14) throw DomainError("analytic radius exhausted at t = " + std::to_string(t));
    const double dd = std::max(delta, 0.0);
    const double cur = analytic_norm_sq(traj.samples[i], {ell + integral_shift, dd}, g);
    if (i > 0) integral += 0.5 * traj.dt * (prev + cur);
    prev = cur;
    out[i] = analytic_norm_sq(traj.samples[i], {ell, dd}, g) + 2.0 * M * integral;
  }
  return out;
}

/// Single evaluation at time t, which must be a node of the time grid.
inline double energy_functional(const TimeSeries& traj, double M, const WeightParams& w,
                                double delta_in, double t, const SpectralGrid& g,
                                double integral_shift = 0.5) {
  detail::require(traj.dt > 0.0 || traj.samples.size() == 1, "energy_functional: dt must be > 0");
  const double pos = traj.dt > 0.0 ? t / traj.dt : 0.0;
  const auto idx = static_cast<std::size_t>(std::llround(pos));
  detail::require(std::abs(pos - static_cast<double>(idx)) < 1e-9 && idx < traj.samples.size(),
                  "energy_functional: t is not a node of the time grid");
  if (delta_in - M * t < -1e-14) throw DomainError("analytic radius exhausted");
  TimeSeries head{traj.dt, {traj.samples.begin(), traj.samples.begin() + idx + 1}};
  return energy_functional_series(head, M, w.ell, {delta_in, M}, g, integral_shift).back();
}

/// Sup over nodes of ||f(t_i)||_{ell, delta(t_i)}.
inline double sup_norm_in_time(const TimeSeries& traj, double ell, const RadiusSchedule& sched,
                               const SpectralGrid& g) {
  double m = 0.0;
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const double dd = std::max(sched.at(traj.dt * static_cast<double>(i)), 0.0);
    m = std::max(m, analytic_norm(traj.samples[i], {ell, dd}, g));
  }
  return m;
}

/// (int_0^T ||f||^2_{ell, delta(t)} dt)^{1/2}, trapezoid rule.
inline double l2_norm_in_time(const TimeSeries& traj, double ell, const RadiusSchedule& sched,
                              const SpectralGrid& g) {
  double acc = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const double dd = std::max(sched.at(traj.dt * static_cast<double>(i)), 0.0);
    const double cur = analytic_norm_sq(traj.samples[i], {ell, dd}, g);
    if (i > 0) acc += 0.5 * traj.dt * (prev + cur);
    prev = cur;
  }
  return std::sqrt(acc);
}

}  // namespace wkb
