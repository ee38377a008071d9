#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "analytic_norm.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "fields_state.hpp"
#include "spectral_grid.hpp"
#include "spectral_ops.hpp"

namespace wkb {

struct DerivedConstants {
  double omega_in = 0.0;
  double M1 = 0.0;
  double M2 = 0.0;
  double M = 0.0;
  double T = 0.0;
  /// Which constraint fixed T: "radius", "cap" or "product_constant".
  std::string binding;
};

/// Rate constants and horizon from the initial energy. C_ell is p.K_ell.
inline DerivedConstants derive_constants(const HydroState& data, const Params& p,
                                         const SpectralGrid& g, double T_cap = 1.0,
                                         double margin = 0.1) {
  detail::require(p.K_ell > 0.0, "derive_constants: K_ell must be positive");
  detail::require(margin >= 0.0 && margin < 1.0, "derive_constants: margin must lie in [0, 1)");
  const NormReport z = analytic_norm_sq_report(forward_transform(data.zeta, g), {p.ell, p.delta_in}, g);
  const NormReport v = analytic_norm_sq_report(forward_transform(data.v, g), {p.ell + 1.0, p.delta_in}, g);
  if (!z.finite || !v.finite) throw DomainError("data not analytic at requested radius");
  DerivedConstants c;
  c.omega_in = z.value + v.value;
  const double C = p.K_ell;
  const double lam = std::abs(p.lambda);
  c.M1 = C * (std::sqrt(2.0 * c.omega_in) + 2.0 * c.omega_in) + lam + 0.5;
  c.M2 = lam + C;
  c.M = c.M1 + 2.0 * c.M2;
  const double t_radius = p.delta_in / c.M;
  const double t_product = (1.0 - margin) * p.K_ell / 2.0;
  c.T = t_radius;
  c.binding = "radius";
  if (T_cap < c.T) {
    c.T = T_cap;
    c.binding = "cap";
  }
  if (t_product < c.T) {
    c.T = t_product;
    c.binding = "product_constant";
  }
  return c;
}

/// Free Schroedinger propagator e^{i (eps/2) tau Laplacian} as the multiplier
/// e^{-i (eps/2) tau |xi|^2}.
inline Spectrum schrodinger_semigroup(Spectrum s, double tau, double eps, const SpectralGrid& g) {
  if (eps == 0.0 || tau == 0.0) return s;
  apply_multiplier(s, g, [&](std::size_t k) { return std::polar(1.0, -0.5 * eps * tau * g.xi_sq(k)); });
  return s;
}

/// Piecewise-cubic Lagrange interpolation in time of nodal fields.
class TimeInterpolant {
 public:
  TimeInterpolant(const std::vector<GridField>& nodes, double dt) : nodes_(nodes), dt_(dt) {}

  GridField at(double t) const {
    const int n = static_cast<int>(nodes_.size());
    if (n == 1 || dt_ <= 0.0) return nodes_.front();
    const double pos = t / dt_;
    const int near = static_cast<int>(std::llround(pos));
    if (std::abs(pos - near) < 1e-12 && near >= 0 && near < n) return nodes_[near];
    const int pts = std::min(4, n);
    int i0 = static_cast<int>(std::floor(pos)) - (pts / 2 - 1);
    i0 = std::clamp(i0, 0, n - pts);
    GridField out(nodes_[0].components, nodes_[0].nodes(), nodes_[0].real);
    for (int a = 0; a < pts; ++a) {
      double w = 1.0;
      for (int b = 0; b < pts; ++b)
        if (b != a) w *= (pos - (i0 + b)) / static_cast<double>(a - b);
      out.axpy(w, nodes_[i0 + a]);
    }
    out.real = nodes_[0].real;
    return out;
  }

 private:
  const std::vector<GridField>& nodes_;
  double dt_;
};

namespace detail {

inline void check_finite(const GridField& f, const char* who, int step) {
  for (const auto& z : f.values)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw NumericalError(std::string(who) + ": non-finite value at step " + std::to_string(step));
}

inline double max_abs_over(const std::vector<GridField>& fs) {
  double m = 0.0;
  for (const auto& f : fs) m = std::max(m, f.max_abs());
  return m;
}

inline void require_cfl(double dt, double vmax, const SpectralGrid& g, const char* who) {
  if (vmax <= 0.0) return;
  const double limit = 0.5 * g.dx() / vmax;
  if (dt > limit * (1.0 + 1e-12))
    throw NumericalError(std::string(who) + ": CFL violated, dt must be <= " + std::to_string(limit));
}

}  // namespace detail

/// Step count for the horizon T: CFL 0.5 dx / max|v|, an explicit-stability
/// bound for the resolved band, and a floor of `min_steps`.
inline int choose_steps(const HydroState& data, const Params& p, const SpectralGrid& g, double T,
                        int min_steps = 32) {
  const double xi = std::min(g.band(), g.xi_max());
  const double vmax = std::max(data.v.max_abs(), 1e-300);
  const double zmax = data.zeta.max_abs();
  const double rate = std::sqrt(std::abs(p.lambda)) * xi + 2.0 * vmax * xi + 2.0 * p.eps * zmax * xi;
  double dt = std::min(0.5 * g.dx() / vmax, rate > 0.0 ? 1.5 / rate : T);
  if (p.dt > 0.0) dt = std::min(dt, p.dt);
  return std::max(min_steps, static_cast<int>(std::ceil(T / dt - 1e-9)));
}

/// v_{k+1} from  dv/dt + (v_k . grad) v + lambda Re zeta_k = 0  by classical RK4,
/// with v_k and zeta_k interpolated in time between nodes.
inline std::vector<GridField> solve_transport(const std::vector<GridField>& vk,
                                              const std::vector<GridField>& zk,
                                              const GridField& v_init, const Params& p,
                                              const SpectralGrid& g, double dt) {
  detail::require(vk.size() == zk.size() && !vk.empty(), "solve_transport: trajectory mismatch");
  detail::require(v_init.components == g.dim(), "solve_transport: v_init must be a d-vector");
  detail::require_cfl(dt, detail::max_abs_over(vk), g, "solve_transport");
  const TimeInterpolant vi(vk, dt), zi(zk, dt);
  const auto rhs = [&](double t, const GridField& v) {
    GridField r = advect(vi.at(t), v, g);
    r *= -1.0;
    GridField src = real_part(zi.at(t));
    r.axpy(-p.lambda, dealiased(src, g));
    r.real = true;
    return r;
  };
  std::vector<GridField> out;
  out.reserve(vk.size());
  GridField v = dealiased(v_init, g);
  v.make_real();
  out.push_back(v);
  for (std::size_t n = 0; n + 1 < vk.size(); ++n) {
    const double t = dt * static_cast<double>(n);
    const GridField k1 = rhs(t, v);
    GridField a = v;
    a.axpy(0.5 * dt, k1);
    const GridField k2 = rhs(t + 0.5 * dt, a);
    a = v;
    a.axpy(0.5 * dt, k2);
    const GridField k3 = rhs(t + 0.5 * dt, a);
    a = v;
    a.axpy(dt, k3);
    const GridField k4 = rhs(t + dt, a);
    v.axpy(dt / 6.0, k1);
    v.axpy(dt / 3.0, k2);
    v.axpy(dt / 3.0, k3);
    v.axpy(dt / 6.0, k4);
    v.make_real();
    detail::check_finite(v, "solve_transport", static_cast<int>(n));
    out.push_back(v);
  }
  return out;
}

/// zeta_{k+1}(t) = S(t) zeta_in - int_0^t S(t - s) grad G(s) ds with
/// G = v_k . zeta_k + div v_{k+1} - i (eps/2) q zeta_k . zeta_k, trapezoid in s.
inline std::vector<GridField> duhamel_zeta(const std::vector<GridField>& v_next,
                                           const std::vector<GridField>& vk,
                                           const std::vector<GridField>& zk,
                                           const GridField& zeta_in, const Params& p,
                                           const SpectralGrid& g, double dt) {
  detail::require(v_next.size() == vk.size() && vk.size() == zk.size() && !vk.empty(),
                  "duhamel_zeta: trajectory mismatch");
  detail::require(zeta_in.components == g.dim(), "duhamel_zeta: zeta_in must be a d-vector");
  const bool real = p.eps == 0.0 && zeta_in.real;
  const auto grad_source = [&](std::size_t n) {
    GridField G = dot(vk[n], zk[n]);
    G += div(v_next[n], g);
    G.axpy(cplx(0.0, -0.5 * p.eps * p.quadratic_weight), dot(zk[n], zk[n]));
    G.real = real;
    Spectrum s = spectral_derivative(forward_transform(G, g), DerivOp::grad, g);
    dealias(s, g);
    return s;
  };
  Spectrum zin = forward_transform(zeta_in, g);
  dealias(zin, g);
  std::vector<GridField> out;
  out.reserve(vk.size());
  out.push_back(inverse_transform(zin, g, real));
  Spectrum acc(g.dim(), g.size());
  Spectrum prev = grad_source(0);
  for (std::size_t n = 1; n < vk.size(); ++n) {
    const Spectrum cur = grad_source(n);
    acc = schrodinger_semigroup(acc, dt, p.eps, g);
    acc.axpy(0.5 * dt, schrodinger_semigroup(prev, dt, p.eps, g));
    acc.axpy(0.5 * dt, cur);
    Spectrum z = schrodinger_semigroup(zin, dt * static_cast<double>(n), p.eps, g);
    z -= acc;
    GridField zf = inverse_transform(z, g, real);
    detail::check_finite(zf, "duhamel_zeta", static_cast<int>(n));
    out.push_back(std::move(zf));
    prev = cur;
  }
  return out;
}

struct SchemeDiagnostics {
  int iteration_count = 0;
  /// I_k for k = 1, 2, ...: sup over nodes of E_{2 M2, ell-1/2}(Z_k) + E_{2 M2, ell+1/2}(V_k).
  std::vector<double> contraction_sequence;
  /// sup over nodes of E_{2 M2, ell}(zeta_k) + E_{2 M2, ell+1}(v_k), k = 0, 1, ...
  std::vector<double> iterate_energy;
  /// sup-in-time (ell-1/2, ell+1/2) increment norm per iteration.
  std::vector<double> increment_norms;
  double omega_in = 0.0;
  double M1 = 0.0, M2 = 0.0, M = 0.0;
  bool converged = false;
};

namespace detail {

inline TimeSeries series_of(const std::vector<GridField>& fs, double dt, const SpectralGrid& g) {
  TimeSeries s{dt, {}};
  s.samples.reserve(fs.size());
  for (const auto& f : fs) s.samples.push_back(forward_transform(f, g));
  return s;
}

inline std::vector<GridField> difference(const std::vector<GridField>& a, const std::vector<GridField>& b) {
  std::vector<GridField> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(a[i] - b[i]);
  return out;
}

inline double sup_of_sum(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, a[i] + b[i]);
  return m;
}

}  // namespace detail

struct SchemeResult {
  Trajectory trajectory;
  SchemeDiagnostics diagnostics;
};

/// Picard iteration starting from the frozen iterate (grad psi_in, grad phi_in),
/// alternating solve_transport and duhamel_zeta on a fixed time grid.
/// `p.M` and `p.T` must already hold the derived constants.
inline SchemeResult iterate_scheme(const HydroState& data, const Params& p, const DerivedConstants& c,
                                   const SpectralGrid& g, int steps, double tol = 1e-10,
                                   int k_max = 40) {
  p.validate();
  detail::require(steps >= 1, "iterate_scheme: steps must be >= 1");
  detail::require(p.T <= p.delta_in / p.M * (1.0 + 1e-12), "iterate_scheme: T exceeds delta_in / M");
  const double dt = p.T / steps;
  const RadiusSchedule sched = p.schedule();
  const double E = 2.0 * c.M2;

  SchemeResult res;
  auto& diag = res.diagnostics;
  diag.omega_in = c.omega_in;
  diag.M1 = c.M1;
  diag.M2 = c.M2;
  diag.M = c.M;

  std::vector<GridField> vk(steps + 1, dealiased(data.v, g));
  std::vector<GridField> zk(steps + 1, dealiased(data.zeta, g));
  for (auto& v : vk) v.make_real();
  const auto iterate_energy = [&](const std::vector<GridField>& z, const std::vector<GridField>& v) {
    return detail::sup_of_sum(
        energy_functional_series(detail::series_of(z, dt, g), E, p.ell, sched, g),
        energy_functional_series(detail::series_of(v, dt, g), E, p.ell + 1.0, sched, g));
  };
  diag.iterate_energy.push_back(iterate_energy(zk, vk));

  int rising = 0;
  for (int k = 0; k < k_max; ++k) {
    std::vector<GridField> v_next = solve_transport(vk, zk, data.v, p, g, dt);
    std::vector<GridField> z_next = duhamel_zeta(v_next, vk, zk, data.zeta, p, g, dt);
    const TimeSeries Z = detail::series_of(detail::difference(z_next, zk), dt, g);
    const TimeSeries V = detail::series_of(detail::difference(v_next, vk), dt, g);
    const double Ik = detail::sup_of_sum(energy_functional_series(Z, E, p.ell - 0.5, sched, g),
                                         energy_functional_series(V, E, p.ell + 0.5, sched, g));
    const double inc = sup_norm_in_time(Z, p.ell - 0.5, sched, g) + sup_norm_in_time(V, p.ell + 0.5, sched, g);
    if (!diag.contraction_sequence.empty() && Ik > diag.contraction_sequence.back())
      ++rising;
    else
      rising = 0;
    diag.contraction_sequence.push_back(Ik);
    diag.increment_norms.push_back(inc);
    vk = std::move(v_next);
    zk = std::move(z_next);
    diag.iterate_energy.push_back(iterate_energy(zk, vk));
    diag.iteration_count = k + 1;
    if (inc < tol) {
      diag.converged = true;
      break;
    }
    if (rising >= 3) throw NumericalError("scheme divergence: T or M too aggressive");
  }

  auto& tr = res.trajectory;
  tr.params = p;
  tr.times = uniform_times(p.T, steps);
  tr.states.resize(vk.size());
  for (std::size_t i = 0; i < vk.size(); ++i) tr.states[i] = {zk[i], vk[i]};
  tr.attach_schedule();
  return res;
}

namespace detail {

struct SpecState {
  Spectrum zeta;
  Spectrum v;
};

/// Nonlinear and transport part of the (zeta, v) system in spectral form; the
/// dispersive term i (eps/2) grad div zeta is left to the integrating factor.
inline SpecState hydro_rhs(const SpecState& s, const Params& p, const SpectralGrid& g, bool zeta_real) {
  const GridField z = inverse_transform(s.zeta, g, zeta_real);
  const GridField v = inverse_transform(s.v, g, true);
  GridField G = dot(v, z);
  G.axpy(cplx(0.0, -0.5 * p.eps * p.quadratic_weight), dot(z, z));
  G.real = zeta_real;
  Spectrum gz = spectral_derivative(forward_transform(G, g), DerivOp::grad, g);
  gz += spectral_derivative(s.v, DerivOp::grad_div, g);
  gz *= -1.0;
  dealias(gz, g);
  GridField fv = advect(v, v, g);
  fv *= -1.0;
  fv.axpy(-p.lambda, real_part(z));
  fv.real = true;
  Spectrum sv = forward_transform(fv, g);
  dealias(sv, g);
  return {std::move(gz), std::move(sv)};
}

}  // namespace detail

/// Method-of-lines integration of the full (zeta, v) system: Lawson RK4 with
/// the exact Schroedinger factor on zeta and plain RK4 on v.
inline Trajectory direct_integrate(const HydroState& data, const Params& p, const SpectralGrid& g,
                                   int steps) {
  p.validate();
  detail::require(steps >= 1, "direct_integrate: steps must be >= 1");
  detail::require(data.zeta.components == g.dim() && data.v.components == g.dim(),
                  "direct_integrate: d-vector data expected");
  const double h = p.T / steps;
  const bool zreal = p.eps == 0.0 && data.zeta.real;
  const auto E = [&](const Spectrum& s, double tau) { return schrodinger_semigroup(s, tau, p.eps, g); };

  detail::SpecState u{forward_transform(data.zeta, g), forward_transform(data.v, g)};
  dealias(u.zeta, g);
  dealias(u.v, g);

  Trajectory tr;
  tr.params = p;
  tr.times = uniform_times(p.T, steps);
  const auto store = [&](const detail::SpecState& s) {
    tr.states.push_back({inverse_transform(s.zeta, g, zreal), inverse_transform(s.v, g, true)});
  };
  store(u);
  for (int n = 0; n < steps; ++n) {
    detail::require_cfl(h, tr.states.back().v.max_abs(), g, "direct_integrate");
    const detail::SpecState k1 = detail::hydro_rhs(u, p, g, zreal);
    detail::SpecState a{E(u.zeta, 0.5 * h), u.v};
    a.zeta.axpy(0.5 * h, E(k1.zeta, 0.5 * h));
    a.v.axpy(0.5 * h, k1.v);
    const detail::SpecState k2 = detail::hydro_rhs(a, p, g, zreal);
    detail::SpecState b{E(u.zeta, 0.5 * h), u.v};
    b.zeta.axpy(0.5 * h, k2.zeta);
    b.v.axpy(0.5 * h, k2.v);
    const detail::SpecState k3 = detail::hydro_rhs(b, p, g, zreal);
    detail::SpecState c{E(u.zeta, h), u.v};
    c.zeta.axpy(h, E(k3.zeta, 0.5 * h));
    c.v.axpy(h, k3.v);
    const detail::SpecState k4 = detail::hydro_rhs(c, p, g, zreal);

    Spectrum zn = E(u.zeta, h);
    zn.axpy(h / 6.0, E(k1.zeta, h));
    Spectrum mid = k2.zeta;
    mid += k3.zeta;
    zn.axpy(h / 3.0, E(mid, 0.5 * h));
    zn.axpy(h / 6.0, k4.zeta);
    u.v.axpy(h / 6.0, k1.v);
    u.v.axpy(h / 3.0, k2.v);
    u.v.axpy(h / 3.0, k3.v);
    u.v.axpy(h / 6.0, k4.v);
    u.zeta = std::move(zn);
    store(u);
    detail::check_finite(tr.states.back().zeta, "direct_integrate", n);
    detail::check_finite(tr.states.back().v, "direct_integrate", n);
  }
  tr.attach_schedule();
  return tr;
}

struct EnergyReport {
  std::vector<double> times;
  /// E_{|lambda|, ell}(zeta) + E_{|lambda|, ell+1}(v) per node.
  std::vector<double> solution_energy;
  double omega_in = 0.0;
  double slack = 0.05;
  std::vector<bool> exceeds;
  bool any_exceedance() const {
    return std::any_of(exceeds.begin(), exceeds.end(), [](bool b) { return b; });
  }
  double max_ratio() const {
    double m = 0.0;
    for (double e : solution_energy) m = std::max(m, omega_in > 0.0 ? e / omega_in : 0.0);
    return m;
  }
};

inline EnergyReport energy_monitor(const Trajectory& traj, double omega_in, const SpectralGrid& g,
                                   double slack = 0.05) {
  const Params& p = traj.params;
  const RadiusSchedule sched = p.schedule();
  const double lam = std::abs(p.lambda);
  const auto ez = energy_functional_series(traj.zeta_series(g), lam, p.ell, sched, g);
  const auto ev = energy_functional_series(traj.v_series(g), lam, p.ell + 1.0, sched, g);
  EnergyReport r;
  r.times = traj.times;
  r.omega_in = omega_in;
  r.slack = slack;
  for (std::size_t i = 0; i < ez.size(); ++i) {
    r.solution_energy.push_back(ez[i] + ev[i]);
    r.exceeds.push_back(ez[i] + ev[i] > omega_in * (1.0 + slack) + 1e-300);
  }
  return r;
}

}  // namespace wkb
