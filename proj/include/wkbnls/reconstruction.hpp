#pragma once

#include <cmath>
#include <complex>
#include <iomanip>
#include <ostream>
#include <vector>

#include "analytic_norm.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "fields_state.hpp"
#include "spectral_grid.hpp"
#include "spectral_ops.hpp"

namespace wkb {

using PhaseSeries = std::vector<PhaseState>;

struct WaveField {
  GridField u;
  double eps = 0.0;
  double t = 0.0;
};

namespace detail {

/// Cumulative trapezoid: out[0] = 0, out[n] = out[n-1] + dt/2 (f[n-1] + f[n]).
inline std::vector<GridField> cumulative_trapezoid(const std::vector<GridField>& f, double dt) {
  std::vector<GridField> out;
  out.reserve(f.size());
  GridField acc(f.front().components, f.front().nodes(), f.front().real);
  out.push_back(acc);
  for (std::size_t n = 1; n < f.size(); ++n) {
    acc.axpy(0.5 * dt, f[n - 1]);
    acc.axpy(0.5 * dt, f[n]);
    out.push_back(acc);
  }
  return out;
}

}  // namespace detail

/// psi(t) = psi_in - int_0^t [v.zeta + div v - i(eps/2)(div zeta + q zeta.zeta)] ds,
/// with psi_in kept as the closed-form background and the integral as Psi.
inline PhaseSeries reconstruct_psi(const Trajectory& traj, const Profile& psi_in, const Profile& phi_in,
                                   const SpectralGrid& g) {
  const Params& p = traj.params;
  const bool real = p.eps == 0.0;
  std::vector<GridField> integrand;
  integrand.reserve(traj.size());
  for (const auto& st : traj.states) {
    GridField G = dot(st.v, st.zeta);
    G += div(st.v, g);
    GridField disp = div(st.zeta, g);
    disp.axpy(p.quadratic_weight, dot(st.zeta, st.zeta));
    G.axpy(cplx(0.0, -0.5 * p.eps), disp);
    G = dealiased(G, g);
    G *= -1.0;
    if (real) G.make_real();
    integrand.push_back(std::move(G));
  }
  const auto Psi = detail::cumulative_trapezoid(integrand, traj.dt());
  PhaseSeries out(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out[i].psi_in = psi_in;
    out[i].phi_in = phi_in;
    out[i].lambda = p.lambda;
    out[i].t = traj.times[i];
    out[i].psi_increment = Psi[i];
    out[i].phi_increment = GridField(1, g.size(), true);
  }
  return out;
}

/// phi(t) = phi_in - lambda t psi_in + Phi(t), Phi(t) = -int_0^t (|v|^2/2 + lambda Re Psi) ds.
inline PhaseSeries reconstruct_phi(const Trajectory& traj, PhaseSeries psi_series, const SpectralGrid& g) {
  detail::require(psi_series.size() == traj.size(), "reconstruct_phi: series length mismatch");
  const Params& p = traj.params;
  std::vector<GridField> integrand;
  integrand.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    GridField G = dealiased(dot(traj.states[i].v, traj.states[i].v), g);
    G *= 0.5;
    G.axpy(p.lambda, real_part(psi_series[i].psi_increment));
    G *= -1.0;
    G.make_real();
    integrand.push_back(std::move(G));
  }
  const auto Phi = detail::cumulative_trapezoid(integrand, traj.dt());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    psi_series[i].phi_increment = Phi[i];
    psi_series[i].phi_increment.make_real();
  }
  return psi_series;
}

inline PhaseSeries reconstruct_phases(const Trajectory& traj, const Profile& psi_in, const Profile& phi_in,
                                      const SpectralGrid& g) {
  return reconstruct_phi(traj, reconstruct_psi(traj, psi_in, phi_in, g), g);
}

/// u = exp(psi/2 + i phi/eps) evaluated pointwise.
inline WaveField assemble_wavefunction(const PhaseState& ph, double eps, const SpectralGrid& g) {
  if (!(eps > 0.0)) throw ConfigError("assemble_wavefunction: eps must be positive");
  const GridField psi = ph.psi(g);
  const GridField phi = ph.phi(g);
  WaveField w;
  w.eps = eps;
  w.t = ph.t;
  w.u = GridField(1, g.size(), false);
  for (std::size_t i = 0; i < g.size(); ++i)
    w.u.values[i] = std::exp(0.5 * psi.values[i] + cplx(0.0, phi.values[i].real() / eps));
  return w;
}

struct ConsistencyReport {
  std::vector<double> times;
  std::vector<double> psi_l2, phi_l2;          // ||grad psi - zeta||, ||grad phi - v|| in L2
  std::vector<double> psi_weighted, phi_weighted;  // same at (ell - 1/2, delta(t))
  std::vector<double> curl;
  std::vector<double> dt_psi_norm;             // ||d_t psi||_{ell-1/2, delta(t)} by differences
  double max_psi_l2() const { return *std::max_element(psi_l2.begin(), psi_l2.end()); }
  double max_phi_l2() const { return *std::max_element(phi_l2.begin(), phi_l2.end()); }
};

inline ConsistencyReport consistency_residuals(const Trajectory& traj, const PhaseSeries& phases,
                                               const SpectralGrid& g) {
  detail::require(phases.size() == traj.size(), "consistency_residuals: series length mismatch");
  const Params& p = traj.params;
  ConsistencyReport r;
  r.times = traj.times;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double delta = std::max(0.0, p.delta_in - p.M * traj.times[i]);
    GridField ep = phases[i].grad_psi(g) - traj.states[i].zeta;
    GridField ev = phases[i].grad_phi(g) - traj.states[i].v;
    r.psi_l2.push_back(l2_norm(ep, g));
    r.phi_l2.push_back(l2_norm(ev, g));
    r.psi_weighted.push_back(analytic_norm(ep, {p.ell - 0.5, delta}, g));
    r.phi_weighted.push_back(analytic_norm(ev, {p.ell - 0.5, delta}, g));
    r.curl.push_back(curl_residual(traj.states[i].v, g));
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 < traj.size() ? i + 1 : i;
    if (b > a) {
      GridField d = phases[b].psi_increment - phases[a].psi_increment;
      d *= 1.0 / (traj.times[b] - traj.times[a]);
      r.dt_psi_norm.push_back(analytic_norm(d, {p.ell - 0.5, delta}, g));
    } else {
      r.dt_psi_norm.push_back(0.0);
    }
  }
  return r;
}

/// One CSV table for a single time node: coordinates, then psi, phi and u as
/// real/imaginary pairs. u columns are zero when eps is 0.
inline void write_phase_csv(std::ostream& os, const PhaseState& ph, double eps, const SpectralGrid& g) {
  const GridField psi = ph.psi(g);
  const GridField phi = ph.phi(g);
  const bool has_u = eps > 0.0;
  const GridField u = has_u ? assemble_wavefunction(ph, eps, g).u : GridField(1, g.size(), false);
  os << std::setprecision(17);
  os << (g.dim() == 2 ? "x,y," : "x,") << "psi_re,psi_im,phi_re,phi_im,u_re,u_im\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    os << g.x(i) << ',';
    if (g.dim() == 2) os << g.y(i) << ',';
    os << psi.values[i].real() << ',' << psi.values[i].imag() << ',' << phi.values[i].real() << ','
       << phi.values[i].imag() << ',' << u.values[i].real() << ',' << u.values[i].imag() << "\n";
  }
}

}  // namespace wkb
