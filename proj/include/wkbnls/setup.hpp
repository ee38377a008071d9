#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "fields_state.hpp"
#include "product_constant.hpp"
#include "profiles.hpp"
#include "spectral_grid.hpp"
#include "spectral_ops.hpp"
#include "wkb_scheme.hpp"

namespace wkb {

struct GridSpec {
  int d = 1;
  int n = 1024;
  double L = 20.0;
};

struct ParamSpec {
  double lambda = 1.0;
  double delta_in = 0.5;
  double ell = 3.0;
  /// Upper bound on the time step; 0 lets the CFL/stability rule decide.
  double dt = 0.0;
  double T_cap = 1.0;
  double margin = 0.1;
  std::optional<double> K_ell;
  int K_trials = 64;
  double quadratic_weight = 0.5;
  int min_steps = 32;
};

/// Grid, constants and time grid shared by every run of one experiment.
struct Setup {
  SpectralGrid full;
  SpectralGrid g;
  Params p;  // eps = 0; K_ell, M, T, dt filled in
  DerivedConstants c;
  int steps = 0;

  Params at(double eps) const {
    Params q = p;
    q.eps = eps;
    return q;
  }
};

inline HydroState hydro_data(const Profile& psi, const Profile& phi, const SpectralGrid& g) {
  return {sample_gradient(psi, g), sample_gradient(phi, g)};
}

/// Resolved band from all data, K_ell (measured unless overridden), then the
/// constants from the member with the largest initial energy, and a step count
/// valid for every member and every eps in `eps_values`.
inline Setup prepare_setup(const GridSpec& gs, const ParamSpec& ps, const std::vector<HydroState>& members,
                           const std::vector<double>& eps_values, std::uint64_t seed) {
  detail::require(!members.empty(), "prepare_setup: no data");
  Setup s{SpectralGrid(gs.d, gs.n, gs.L), SpectralGrid(gs.d, gs.n, gs.L), {}, {}, 0};
  std::vector<GridField> fields;
  for (const auto& m : members) {
    fields.push_back(m.zeta);
    fields.push_back(m.v);
  }
  s.g = s.full.with_band(estimate_resolved_band(fields, s.full));

  Params& p = s.p;
  p.d = gs.d;
  p.lambda = ps.lambda;
  p.eps = 0.0;
  p.delta_in = ps.delta_in;
  p.ell = ps.ell;
  p.quadratic_weight = ps.quadratic_weight;
  p.dt = ps.dt;
  p.K_ell = ps.K_ell ? *ps.K_ell : estimate_product_constant(ps.ell, ps.ell, s.g, ps.K_trials, seed);
  p.validate();

  double best = -1.0;
  for (const auto& m : members) {
    const DerivedConstants c = derive_constants(m, p, s.g, ps.T_cap, ps.margin);
    if (c.omega_in > best) {
      best = c.omega_in;
      s.c = c;
    }
  }
  p.M = s.c.M;
  p.T = s.c.T;
  const double eps_max = eps_values.empty() ? 0.0 : *std::max_element(eps_values.begin(), eps_values.end());
  for (const auto& m : members)
    s.steps = std::max(s.steps, choose_steps(m, s.at(eps_max), s.g, p.T, ps.min_steps));
  p.dt = p.T / s.steps;
  p.validate();
  return s;
}

}  // namespace wkb
