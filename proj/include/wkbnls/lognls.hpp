#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fields.hpp"
#include "reconstruction.hpp"
#include "spectral_grid.hpp"
#include "spectral_ops.hpp"

namespace wkb {

struct LogNlsParams {
  double lambda = 1.0;
  double eps = 0.5;
  /// Vacuum floor for ln|u|^2, relative to max|u|^2.
  double floor_rel = 1e-300;
};

inline double mass(const WaveField& u, const SpectralGrid& g) {
  const double n = l2_norm(u.u, g);
  return n * n;
}

inline void kinetic_substep(WaveField& u, double tau, const SpectralGrid& g) {
  Spectrum s = forward_transform(u.u, g);
  apply_multiplier(s, g, [&](std::size_t k) { return std::polar(1.0, -0.5 * u.eps * tau * g.xi_sq(k)); });
  u.u = inverse_transform(s, g, false);
}

/// u <- u exp(-i tau (lambda/eps) ln max(|u|^2, floor)); returns true when the floor binds.
inline bool nonlinear_substep(WaveField& u, double tau, const LogNlsParams& p) {
  double top = 0.0;
  for (const auto& z : u.u.values) top = std::max(top, std::norm(z));
  const double floor = std::max(p.floor_rel * top, std::numeric_limits<double>::min());
  bool vacuum = false;
  for (auto& z : u.u.values) {
    double r2 = std::norm(z);
    if (r2 < floor) {
      vacuum = true;
      r2 = floor;
    }
    z *= std::polar(1.0, -tau * (p.lambda / u.eps) * std::log(r2));
  }
  return vacuum;
}

/// Strang splitting: half kinetic, full nonlinear phase rotation, half kinetic.
inline WaveField strang_step(WaveField u, double dt, const LogNlsParams& p, const SpectralGrid& g,
                             bool* vacuum = nullptr) {
  detail::require(u.eps > 0.0, "strang_step: eps must be positive");
  detail::require(dt > 0.0, "strang_step: dt must be positive");
  kinetic_substep(u, 0.5 * dt, g);
  const bool v = nonlinear_substep(u, dt, p);
  kinetic_substep(u, 0.5 * dt, g);
  u.t += dt;
  if (vacuum) *vacuum = v;
  return u;
}

struct Evolution {
  std::vector<WaveField> states;
  std::vector<double> mass_drift;  // relative to the initial mass, per recorded step
  std::vector<bool> vacuum;
  double max_mass_drift() const {
    double m = 0.0;
    for (double d : mass_drift) m = std::max(m, d);
    return m;
  }
  bool vacuum_touched() const { return std::any_of(vacuum.begin(), vacuum.end(), [](bool b) { return b; }); }
};

/// `steps` Strang steps of size T/steps, keeping every `record_every`-th state.
inline Evolution evolve(const WaveField& u_in, const LogNlsParams& p, const SpectralGrid& g, double T,
                        int steps, int record_every = 1) {
  detail::require(u_in.eps == p.eps, "evolve: eps of the wave field and the parameters differ");
  detail::require(steps >= 1 && record_every >= 1, "evolve: steps and record_every must be >= 1");
  const double dt = T / steps;
  const double m0 = mass(u_in, g);
  Evolution ev;
  ev.states.push_back(u_in);
  ev.mass_drift.push_back(0.0);
  ev.vacuum.push_back(false);
  WaveField u = u_in;
  for (int n = 1; n <= steps; ++n) {
    bool vac = false;
    u = strang_step(std::move(u), dt, p, g, &vac);
    u.t = u_in.t + n * dt;
    for (const auto& z : u.u.values)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw NumericalError("evolve: non-finite value at step " + std::to_string(n));
    if (n % record_every == 0 || n == steps) {
      ev.states.push_back(u);
      ev.mass_drift.push_back(m0 > 0.0 ? std::abs(mass(u, g) - m0) / m0 : 0.0);
      ev.vacuum.push_back(vac);
    } else if (vac) {
      ev.vacuum.back() = true;
    }
  }
  return ev;
}

struct Observables {
  GridField rho;       // |u|^2
  GridField momentum;  // Im(eps conj(u) grad u)
};

inline Observables observables(const WaveField& u, const SpectralGrid& g) {
  Observables o;
  o.rho = GridField(1, g.size(), true);
  for (std::size_t i = 0; i < g.size(); ++i) o.rho.values[i] = std::norm(u.u.values[i]);
  const GridField gu = grad(u.u, g);
  o.momentum = GridField(g.dim(), g.size(), true);
  for (int a = 0; a < g.dim(); ++a)
    for (std::size_t i = 0; i < g.size(); ++i)
      o.momentum(a, i) = u.eps * (std::conj(u.u.values[i]) * gu(a, i)).imag();
  return o;
}

/// Wave field e^{psi/2 + i phi/eps} from real profiles sampled on the grid.
inline WaveField wave_from_profiles(const Profile& psi, const Profile& phi, double eps, const SpectralGrid& g) {
  detail::require(eps > 0.0, "wave_from_profiles: eps must be positive");
  WaveField w;
  w.eps = eps;
  w.u = GridField(1, g.size(), false);
  for (std::size_t i = 0; i < g.size(); ++i)
    w.u.values[i] = std::exp(cplx(0.5 * psi.value(g.x(i), g.y(i)), phi.value(g.x(i), g.y(i)) / eps));
  return w;
}

}  // namespace wkb
