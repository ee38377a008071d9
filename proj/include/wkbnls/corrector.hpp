#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "analytic_norm.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "fields_state.hpp"
#include "reconstruction.hpp"
#include "spectral_grid.hpp"
#include "spectral_ops.hpp"
#include "wkb_scheme.hpp"

namespace wkb {

/// First-order terms of the expansion in eps, sampled on the base time grid.
/// psi1 and phi1 are full grid fields; the first-order data are assumed to decay.
struct CorrectorState {
  std::vector<double> times;
  std::vector<GridField> zeta1;
  std::vector<GridField> v1;
  std::vector<GridField> psi1;
  std::vector<GridField> phi1;
};

namespace detail {

inline std::vector<GridField> zeta_nodes(const Trajectory& t) {
  std::vector<GridField> out;
  out.reserve(t.size());
  for (const auto& s : t.states) out.push_back(s.zeta);
  return out;
}

inline std::vector<GridField> v_nodes(const Trajectory& t) {
  std::vector<GridField> out;
  out.reserve(t.size());
  for (const auto& s : t.states) out.push_back(s.v);
  return out;
}

/// div zeta0 + q zeta0 . zeta0, dealiased.
inline GridField dispersive_source(const GridField& z0, double q, const SpectralGrid& g) {
  GridField s = div(z0, g);
  s.axpy(q, dealiased(dot(z0, z0), g));
  return s;
}

}  // namespace detail

/// Linearisation about an eps = 0 base flow (zeta0, v0):
///   dv1/dt    = -grad(v0.v1) - lambda Re zeta1
///   dzeta1/dt = -grad(v0.zeta1 + v1.zeta0 + div v1) + (i/2) grad(div zeta0 + q zeta0.zeta0)
/// integrated by RK4 with the base interpolated in time. With `with_source`
/// false the imaginary forcing is dropped, leaving the real subsystem.
inline CorrectorState solve_corrector(const Trajectory& base, const HydroState& init1, const Params& p,
                                      const SpectralGrid& g, bool with_source = true) {
  if (!(p.ell - 1.0 > 0.5 * (g.dim() - 1)))
    throw ConfigError("solve_corrector: requires ell - 1 > (d - 1)/2");
  if (base.params.eps != 0.0) throw ConfigError("solve_corrector: base run must have eps = 0");
  detail::require(base.size() >= 2, "solve_corrector: base trajectory too short");
  detail::require(init1.zeta.components == g.dim() && init1.v.components == g.dim(),
                  "solve_corrector: d-vector data expected");

  const double dt = base.dt();
  const auto z0n = detail::zeta_nodes(base);
  const auto v0n = detail::v_nodes(base);
  detail::require_cfl(dt, detail::max_abs_over(v0n), g, "solve_corrector");
  const TimeInterpolant zi(z0n, dt), vi(v0n, dt);

  struct Pair {
    GridField z, v;
  };
  const auto rhs = [&](double t, const Pair& s) {
    const GridField z0 = zi.at(t);
    const GridField v0 = vi.at(t);
    GridField fv = grad(dealiased(dot(v0, s.v), g), g);
    fv.axpy(p.lambda, real_part(s.z));
    fv *= -1.0;
    fv = dealiased(fv, g);
    fv.make_real();

    GridField G = dot(v0, s.z);
    G += dot(s.v, z0);
    G = dealiased(G, g);
    G += div(s.v, g);
    GridField fz = grad(G, g);
    fz *= -1.0;
    if (with_source) fz.axpy(cplx(0.0, 0.5), grad(detail::dispersive_source(z0, p.quadratic_weight, g), g));
    fz = dealiased(fz, g);
    fz.real = !with_source && s.z.real;
    return Pair{std::move(fz), std::move(fv)};
  };

  CorrectorState c;
  c.times = base.times;
  Pair u{dealiased(init1.zeta, g), dealiased(init1.v, g)};
  u.v.make_real();
  if (with_source) u.z.real = false;
  c.zeta1.push_back(u.z);
  c.v1.push_back(u.v);
  for (std::size_t n = 0; n + 1 < base.size(); ++n) {
    const double t = base.times[n];
    const Pair k1 = rhs(t, u);
    Pair a{u.z, u.v};
    a.z.axpy(0.5 * dt, k1.z);
    a.v.axpy(0.5 * dt, k1.v);
    const Pair k2 = rhs(t + 0.5 * dt, a);
    a = Pair{u.z, u.v};
    a.z.axpy(0.5 * dt, k2.z);
    a.v.axpy(0.5 * dt, k2.v);
    const Pair k3 = rhs(t + 0.5 * dt, a);
    a = Pair{u.z, u.v};
    a.z.axpy(dt, k3.z);
    a.v.axpy(dt, k3.v);
    const Pair k4 = rhs(t + dt, a);
    for (const auto& [w, k] : {std::pair{dt / 6.0, &k1}, {dt / 3.0, &k2}, {dt / 3.0, &k3}, {dt / 6.0, &k4}}) {
      u.z.axpy(w, k->z);
      u.v.axpy(w, k->v);
    }
    u.v.make_real();
    detail::check_finite(u.z, "solve_corrector", static_cast<int>(n));
    detail::check_finite(u.v, "solve_corrector", static_cast<int>(n));
    c.zeta1.push_back(u.z);
    c.v1.push_back(u.v);
  }
  return c;
}

/// psi1 = psi_in1 + int [(i/2)(div zeta0 + q zeta0.zeta0) - v0.zeta1 - v1.zeta0 - div v1],
/// phi1 = phi_in1 - int (v0.v1 + lambda Re psi1), trapezoid on the base grid.
inline CorrectorState reconstruct_corrector_phases(CorrectorState c, const Trajectory& base,
                                                   const Profile& psi_in1, const Profile& phi_in1,
                                                   const SpectralGrid& g) {
  detail::require(c.zeta1.size() == base.size(), "reconstruct_corrector_phases: length mismatch");
  const double dt = base.dt();
  const double lambda = base.params.lambda;

  std::vector<GridField> fpsi;
  fpsi.reserve(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto& z0 = base.states[i].zeta;
    const auto& v0 = base.states[i].v;
    GridField f = detail::dispersive_source(z0, base.params.quadratic_weight, g);
    f *= cplx(0.0, 0.5);
    GridField lin = dot(v0, c.zeta1[i]);
    lin += dot(c.v1[i], z0);
    f -= dealiased(lin, g);
    f -= div(c.v1[i], g);
    fpsi.push_back(std::move(f));
  }
  const auto Ipsi = detail::cumulative_trapezoid(fpsi, dt);
  const GridField psi0 = sample_profile(psi_in1, g);
  const GridField phi0 = sample_profile(phi_in1, g);
  c.psi1.clear();
  for (const auto& inc : Ipsi) c.psi1.push_back(psi0 + inc);

  std::vector<GridField> fphi;
  fphi.reserve(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    GridField f = dealiased(dot(base.states[i].v, c.v1[i]), g);
    f.axpy(lambda, real_part(c.psi1[i]));
    f *= -1.0;
    f.make_real();
    fphi.push_back(std::move(f));
  }
  const auto Iphi = detail::cumulative_trapezoid(fphi, dt);
  c.phi1.clear();
  for (const auto& inc : Iphi) {
    GridField f = phi0 + inc;
    f.make_real();
    c.phi1.push_back(std::move(f));
  }
  return c;
}

/// Corrector and phases from first-order profiles (psi_in1, phi_in1).
inline CorrectorState corrector_from_profiles(const Trajectory& base, const Profile& psi_in1,
                                              const Profile& phi_in1, const Params& p,
                                              const SpectralGrid& g) {
  const HydroState init1{sample_gradient(psi_in1, g), sample_gradient(phi_in1, g)};
  return reconstruct_corrector_phases(solve_corrector(base, init1, p, g), base, psi_in1, phi_in1, g);
}

struct TrivialityReport {
  bool trivial = false;
  double sup_phi1 = 0.0;
  double data_scale = 0.0;
  double threshold = 0.0;
};

/// phi1 is declared trivial when sup_t ||phi1||_{L2} <= 1e-10 (1 + data scale).
inline TrivialityReport check_phi1_triviality(const Profile& psi_in1, const Profile& phi_in1,
                                              const Trajectory& base, const Params& p,
                                              const SpectralGrid& g) {
  const CorrectorState c = corrector_from_profiles(base, psi_in1, phi_in1, p, g);
  TrivialityReport r;
  r.data_scale = l2_norm(sample_profile(psi_in1, g), g) + l2_norm(sample_profile(phi_in1, g), g);
  for (const auto& f : c.phi1) r.sup_phi1 = std::max(r.sup_phi1, l2_norm(f, g));
  r.threshold = 1e-10 * (1.0 + r.data_scale);
  r.trivial = r.sup_phi1 <= r.threshold;
  return r;
}

struct ExpansionResidual {
  double eps = 0.0;
  double zeta = 0.0;  // sup_t || zeta^eps - zeta0 - eps zeta1 ||_{ell-2, delta(t)}
  double v = 0.0;     // sup_t || v^eps - v0 - eps v1 ||_{ell-1, delta(t)}
  double psi = 0.0;   // sup_t || psi^eps - psi0 - eps psi1 ||_{ell-1, delta(t)}
  double phi = 0.0;   // sup_t || phi^eps - phi0 - eps phi1 ||_{ell, delta(t)}
  double wave = 0.0;  // max |u^eps - e^{psi0/2 + i phi1 + i phi0/eps}|
};

/// Residuals of the first-order expansion. The base run and phases are at
/// eps = 0 and share the time grid of the eps run.
inline ExpansionResidual expansion_residual(const Trajectory& run, const PhaseSeries& phases,
                                            const Trajectory& base, const PhaseSeries& base_phases,
                                            const CorrectorState& c, double eps, const SpectralGrid& g) {
  detail::require(run.size() == base.size() && c.zeta1.size() == base.size() &&
                      phases.size() == run.size() && base_phases.size() == base.size(),
                  "expansion_residual: mismatched time grids");
  detail::require(std::abs(run.dt() - base.dt()) <= 1e-12 * base.dt(),
                  "expansion_residual: mismatched time steps");
  ExpansionResidual r;
  r.eps = eps;
  if (eps == 0.0) return r;
  const Params& p = base.params;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double delta = std::max(0.0, p.delta_in - p.M * base.times[i]);
    GridField Z = run.states[i].zeta - base.states[i].zeta;
    Z.axpy(-eps, c.zeta1[i]);
    GridField V = run.states[i].v - base.states[i].v;
    V.axpy(-eps, c.v1[i]);
    const GridField psi_e = phases[i].psi(g);
    const GridField psi_0 = base_phases[i].psi(g);
    const GridField phi_e = phases[i].phi(g);
    const GridField phi_0 = base_phases[i].phi(g);
    GridField P = psi_e - psi_0;
    GridField Q = phi_e - phi_0;
    GridField Pr = P;
    Pr.axpy(-eps, c.psi1[i]);
    GridField Qr = Q;
    Qr.axpy(-eps, c.phi1[i]);
    r.zeta = std::max(r.zeta, analytic_norm(Z, {p.ell - 2.0, delta}, g));
    r.v = std::max(r.v, analytic_norm(V, {p.ell - 1.0, delta}, g));
    r.psi = std::max(r.psi, analytic_norm(Pr, {p.ell - 1.0, delta}, g));
    r.phi = std::max(r.phi, analytic_norm(Qr, {p.ell, delta}, g));
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double amp = std::exp(0.5 * psi_0.values[k].real());
      const cplx a = std::exp(0.5 * P.values[k] + cplx(0.0, Q.values[k].real() / eps));
      const cplx b = std::polar(1.0, c.phi1[i].values[k].real());
      r.wave = std::max(r.wave, amp * std::abs(a - b));
    }
  }
  return r;
}

}  // namespace wkb
