#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "analytic_norm.hpp"
#include "fields.hpp"
#include "product_constant.hpp"
#include "spectral_grid.hpp"
#include "spectral_ops.hpp"

namespace wkb {

/// Product constants entering the eleven toolbox inequalities at base level m.
struct ToolboxConstants {
  double m = 1.0;
  double K_half = 0.0;        // K^{m+1/2}
  double K_three_half = 0.0;  // K^{m+3/2}
  double K_one = 0.0;         // K^{m+1}
  double K_half_m = 0.0;      // K^{m+1/2, m}
};

/// Sampled sup of each product ratio, inflated by `safety` so that the constants
/// bound pairs outside the calibration sample as well.
inline ToolboxConstants calibrate_toolbox_constants(double m, const SpectralGrid& g, int trials,
                                                    std::uint64_t seed, double safety = 1.5) {
  detail::require(safety >= 1.0, "calibrate_toolbox_constants: safety factor must be >= 1");
  ToolboxConstants c;
  c.m = m;
  c.K_half = safety * estimate_product_constant(m + 0.5, m + 0.5, g, trials, seed);
  c.K_three_half = safety * estimate_product_constant(m + 1.5, m + 1.5, g, trials, seed + 1);
  c.K_one = safety * estimate_product_constant(m + 1.0, m + 1.0, g, trials, seed + 2);
  c.K_half_m = safety * estimate_product_constant(m + 0.5, m, g, trials, seed + 3);
  return c;
}

/// One evaluated instance of an inequality lhs <= rhs.
struct InequalityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds(double rel_slack = 1e-12) const { return lhs <= rhs * (1.0 + rel_slack) + 1e-300; }
};

/// Time-dependent fields on a uniform time grid, stored nodewise.
using FieldPath = std::vector<GridField>;

namespace detail {

inline TimeSeries to_series(const FieldPath& p, double dt, const SpectralGrid& g) {
  TimeSeries s{dt, {}};
  s.samples.reserve(p.size());
  for (const auto& f : p) s.samples.push_back(forward_transform(f, g));
  return s;
}

template <class Op>
FieldPath map_path(const FieldPath& a, Op&& op) {
  FieldPath out;
  out.reserve(a.size());
  for (const auto& f : a) out.push_back(op(f));
  return out;
}

template <class Op>
FieldPath zip_path(const FieldPath& a, const FieldPath& b, Op&& op) {
  FieldPath out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(op(a[i], b[i]));
  return out;
}

}  // namespace detail

/// Evaluates the toolbox inequalities for time-dependent random inputs.
///
/// `F1`, `F2` are d-vector paths; `theta_real` and `theta_cplx` are the
/// coefficients of the items that carry one. Norms are |||.|||_{p,t,s} over the
/// nodes, with the radius schedule `sched`.
class Toolbox {
 public:
  Toolbox(const SpectralGrid& g, const ToolboxConstants& k, RadiusSchedule sched, double dt)
      : g_(g), k_(k), sched_(sched), dt_(dt) {}

  double sup(const FieldPath& p, double s) const {
    return sup_norm_in_time(detail::to_series(p, dt_, g_), s, sched_, g_);
  }
  double l2(const FieldPath& p, double s) const {
    return l2_norm_in_time(detail::to_series(p, dt_, g_), s, sched_, g_);
  }

  std::vector<InequalityCheck> evaluate(const FieldPath& F1, const FieldPath& F2,
                                        double theta_real, cplx theta_cplx) const {
    const double m = k_.m;
    const auto prod = [&](const GridField& a, const GridField& b) { return dealiased(dot(a, b), g_); };
    const auto gradprod = [&](const GridField& a, const GridField& b) {
      return grad(dealiased(dot(a, b), g_), g_);
    };
    const auto adv = [&](const GridField& a, const GridField& b) { return advect(a, b, g_); };
    std::vector<InequalityCheck> out;

    const FieldPath dotF = detail::zip_path(F1, F2, prod);
    out.push_back({"product_into_half", l2(dotF, m + 0.5),
                   k_.K_half * sup(F1, m + 0.5) * l2(F2, m + 1.5)});

    const FieldPath advF = detail::zip_path(F1, F2, adv);
    out.push_back({"advection_sup_first", l2(advF, m + 0.5),
                   k_.K_half * sup(F1, m + 0.5) * l2(F2, m + 1.5)});
    out.push_back({"advection_sup_second", l2(advF, m + 0.5),
                   k_.K_half * l2(F1, m + 0.5) * sup(F2, m + 1.5)});

    const FieldPath reF = detail::map_path(F1, [&](const GridField& f) {
      GridField r = real_part(f);
      r *= theta_real;
      return r;
    });
    out.push_back({"real_part_source", l2(reF, m + 0.5), 2.0 * std::abs(theta_real) * sup(F1, m + 0.5)});

    const FieldPath gF = detail::zip_path(F1, F2, gradprod);
    out.push_back({"gradient_of_product_high", l2(gF, m + 0.5),
                   k_.K_three_half * sup(F1, m + 1.5) * l2(F2, m + 1.5)});
    out.push_back({"gradient_of_product_low", l2(gF, m - 0.5),
                   k_.K_half * sup(F1, m + 0.5) * l2(F2, m + 0.5)});

    const FieldPath DF = detail::map_path(F1, [&](const GridField& f) {
      GridField r = grad_div(f, g_);
      r *= theta_cplx;
      return r;
    });
    out.push_back({"second_order_operator", l2(DF, m - 0.5), std::abs(theta_cplx) * l2(F1, m + 1.5)});

    const FieldPath sq = detail::map_path(F1, [&](const GridField& f) {
      GridField r = gradprod(f, f);
      r *= theta_cplx;
      return r;
    });
    out.push_back({"gradient_of_square", l2(sq, m - 0.5),
                   std::abs(theta_cplx) * k_.K_half_m * sup(F1, m) * l2(F1, m + 0.5)});

    out.push_back({"product_low_from_integer", l2(dotF, m - 0.5),
                   k_.K_one * sup(F1, m + 1.0) * l2(F2, m + 1.0)});
    out.push_back({"product_low_from_half", l2(dotF, m - 0.5),
                   k_.K_half * sup(F1, m + 0.5) * l2(F2, m + 0.5)});

    const FieldPath divS = detail::map_path(F1, [&](const GridField& f) {
      GridField r = div(f, g_);
      r *= theta_cplx;
      return r;
    });
    out.push_back({"divergence", l2(divS, m - 0.5), std::abs(theta_cplx) * l2(F1, m + 0.5)});
    return out;
  }

 private:
  const SpectralGrid& g_;
  ToolboxConstants k_;
  RadiusSchedule sched_;
  double dt_;
};

/// Random smooth-in-time path f(t) = a + t b + t^2 c on `nodes` nodes.
template <class Rng>
FieldPath random_path(const SpectralGrid& g, int comps, bool real, int nodes, double dt, Rng& rng) {
  const GridField a = random_band_limited(g, comps, real, rng);
  const GridField b = random_band_limited(g, comps, real, rng);
  const GridField c = random_band_limited(g, comps, real, rng);
  FieldPath p;
  for (int i = 0; i < nodes; ++i) {
    const double t = dt * i;
    GridField f = a;
    f.axpy(t, b);
    f.axpy(t * t, c);
    p.push_back(std::move(f));
  }
  return p;
}

}  // namespace wkb
