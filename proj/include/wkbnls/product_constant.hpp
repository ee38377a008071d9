#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "analytic_norm.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "spectral_grid.hpp"
#include "spectral_ops.hpp"

namespace wkb {

/// Random analytic field whose spectrum is supported in |k| <= n/6 per axis and
/// in |xi| <= band/2, so that pairwise products are represented without
/// aliasing and stay inside the resolved band. The envelope is
/// e^{-a <xi - xi0>} with random decay a and random spectral centre xi0.
template <class Rng>
GridField random_band_limited(const SpectralGrid& g, int comps, bool real, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> decay(0.3, 2.0);
  std::uniform_real_distribution<double> centre(-4.0, 4.0);
  const double a = decay(rng);
  const double x0 = centre(rng);
  const int cut = g.n() / 6;
  const double radius = 0.5 * g.band();
  Spectrum s(comps, g.size());
  for (int c = 0; c < comps; ++c)
    for (std::size_t k = 0; k < g.size(); ++k) {
      bool keep = std::sqrt(g.xi_sq(k)) <= radius;
      for (int ax = 0; ax < g.dim(); ++ax)
        if (std::abs(g.wavenumber(k, ax)) > cut) keep = false;
      const double re = normal(rng);
      const double im = normal(rng);
      if (!keep) continue;
      const double shifted = g.xi_sq(k) - 2.0 * x0 * g.xi(k, 0) + x0 * x0;
      s(c, k) = cplx(re, im) * std::exp(-a * std::sqrt(1.0 + shifted));
    }
  GridField f = inverse_transform(s, g, false);
  if (real) {
    f.make_real();
  }
  return f;
}

/// Ratio 2||fg||_l / (||f||_m ||g||_l + ||f||_l ||g||_m) at radius delta.
inline double product_ratio(const GridField& f, const GridField& h, double ell, double m,
                            double delta, const SpectralGrid& g) {
  const GridField fg = dealiased(dot(f, h), g);
  const double num = 2.0 * analytic_norm(fg, {ell, delta}, g);
  const double den = analytic_norm(f, {m, delta}, g) * analytic_norm(h, {ell, delta}, g) +
                     analytic_norm(f, {ell, delta}, g) * analytic_norm(h, {m, delta}, g);
  return den > 0.0 ? num / den : 0.0;
}

/// Empirical product constant K^{ell,m}: the largest ratio over random analytic
/// scalar pairs and radii delta in {0, 0.25, 0.5}.
inline double estimate_product_constant(double ell, double m, const SpectralGrid& g, int trials,
                                        std::uint64_t seed) {
  if (!(m > 0.5 * g.dim())) throw ConfigError("estimate_product_constant: requires m > d/2");
  detail::require(trials >= 1, "estimate_product_constant: trials must be >= 1");
  std::mt19937_64 rng(seed);
  double best = 0.0;
  for (int t = 0; t < trials; ++t) {
    const bool real = (t % 2) == 0;
    const GridField f = random_band_limited(g, 1, real, rng);
    const GridField h = random_band_limited(g, 1, real, rng);
    for (double delta : {0.0, 0.25, 0.5}) best = std::max(best, product_ratio(f, h, ell, m, delta, g));
  }
  return best;
}

}  // namespace wkb
