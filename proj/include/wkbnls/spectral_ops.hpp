#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>
#include <algorithm>

#include "errors.hpp"
#include "fields.hpp"
#include "spectral_grid.hpp"

namespace wkb {

enum class DerivOp { grad, div, laplacian, grad_div };

namespace detail {

inline void check_on_grid(const GridField& f, const SpectralGrid& g, const char* who) {
  if (f.components < 1 || f.nodes() != g.size())
    throw ConfigError(std::string(who) + ": field does not match grid size");
}

}  // namespace detail

inline Spectrum forward_transform(const GridField& f, const SpectralGrid& g) {
  detail::check_on_grid(f, g, "forward_transform");
  Spectrum s(f.components, g.size());
  s.coeffs = f.values;
  const double scale = std::pow(g.dx(), g.dim());
  for (int c = 0; c < f.components; ++c) {
    cplx* p = s.coeffs.data() + static_cast<std::size_t>(c) * g.size();
    g.plans().forward(p);
    for (std::size_t k = 0; k < g.size(); ++k) p[k] *= scale * g.parity(k);
  }
  return s;
}

/// Left inverse of forward_transform. `real` requests a real-tagged result.
inline GridField inverse_transform(const Spectrum& s, const SpectralGrid& g, bool real = false) {
  if (s.components < 1 || s.bins() != g.size())
    throw ConfigError("inverse_transform: spectrum does not match grid size");
  GridField f(s.components, g.size(), real);
  f.values = s.coeffs;
  const double scale = 1.0 / std::pow(2.0 * g.L(), g.dim());
  for (int c = 0; c < s.components; ++c) {
    cplx* p = f.values.data() + static_cast<std::size_t>(c) * g.size();
    for (std::size_t k = 0; k < g.size(); ++k) p[k] *= scale * g.parity(k);
    g.plans().backward(p);
  }
  if (real) f.make_real();
  return f;
}

/// i xi_a with the Nyquist mode removed so that real fields stay real.
inline cplx ik(const SpectralGrid& g, std::size_t k, int a) {
  if (g.is_nyquist(k, a)) return {0.0, 0.0};
  return {0.0, g.xi(k, a)};
}

inline Spectrum spectral_derivative(const Spectrum& s, DerivOp op, const SpectralGrid& g) {
  const int d = g.dim();
  const std::size_t nb = g.size();
  switch (op) {
    case DerivOp::grad: {
      detail::require(s.components == 1, "grad: scalar field expected");
      Spectrum out(d, nb);
      for (int a = 0; a < d; ++a)
        for (std::size_t k = 0; k < nb; ++k) out(a, k) = ik(g, k, a) * s(0, k);
      return out;
    }
    case DerivOp::div: {
      detail::require(s.components == d, "div: d-vector field expected");
      Spectrum out(1, nb);
      for (int a = 0; a < d; ++a)
        for (std::size_t k = 0; k < nb; ++k) out(0, k) += ik(g, k, a) * s(a, k);
      return out;
    }
    case DerivOp::laplacian: {
      detail::require(s.components == 1, "laplacian: scalar field expected");
      Spectrum out(1, nb);
      for (std::size_t k = 0; k < nb; ++k) out(0, k) = -g.xi_sq(k) * s(0, k);
      return out;
    }
    case DerivOp::grad_div: {
      detail::require(s.components == d, "grad_div: d-vector field expected");
      return spectral_derivative(spectral_derivative(s, DerivOp::div, g), DerivOp::grad, g);
    }
  }
  throw ConfigError("spectral_derivative: unknown operator");
}

inline GridField spectral_derivative(const GridField& f, DerivOp op, const SpectralGrid& g) {
  detail::check_on_grid(f, g, "spectral_derivative");
  return inverse_transform(spectral_derivative(forward_transform(f, g), op, g), g, f.real);
}

inline GridField grad(const GridField& f, const SpectralGrid& g) {
  return spectral_derivative(f, DerivOp::grad, g);
}
inline GridField div(const GridField& f, const SpectralGrid& g) {
  return spectral_derivative(f, DerivOp::div, g);
}
inline GridField laplacian(const GridField& f, const SpectralGrid& g) {
  return spectral_derivative(f, DerivOp::laplacian, g);
}
inline GridField grad_div(const GridField& f, const SpectralGrid& g) {
  return spectral_derivative(f, DerivOp::grad_div, g);
}

/// Keeps the modes inside the 2/3-rule box and the resolved band.
inline void dealias(Spectrum& s, const SpectralGrid& g) {
  for (int c = 0; c < s.components; ++c)
    for (std::size_t k = 0; k < g.size(); ++k)
      if (!g.dealiased(k)) s(c, k) = 0.0;
}

inline GridField dealiased(const GridField& f, const SpectralGrid& g) {
  Spectrum s = forward_transform(f, g);
  dealias(s, g);
  return inverse_transform(s, g, f.real);
}

/// Pointwise bilinear dot product a.b = sum_i a_i b_i (no conjugation).
inline GridField dot(const GridField& a, const GridField& b) {
  detail::require(a.components == b.components && a.nodes() == b.nodes(), "dot: shape mismatch");
  GridField out(1, a.nodes(), a.real && b.real);
  for (int c = 0; c < a.components; ++c) {
    auto pa = a.component(c);
    auto pb = b.component(c);
    for (std::size_t i = 0; i < a.nodes(); ++i) out.values[i] += pa[i] * pb[i];
  }
  return out;
}

/// Scalar times each component of a vector field, pointwise.
inline GridField scale_by(const GridField& s, const GridField& v) {
  detail::require(s.components == 1 && s.nodes() == v.nodes(), "scale_by: shape mismatch");
  GridField out = v;
  for (int c = 0; c < v.components; ++c) {
    auto p = out.component(c);
    for (std::size_t i = 0; i < v.nodes(); ++i) p[i] *= s.values[i];
  }
  out.real = s.real && v.real;
  return out;
}

/// (a . grad) b for vector fields a, b, with dealiased output.
inline GridField advect(const GridField& a, const GridField& b, const SpectralGrid& g) {
  const int d = g.dim();
  detail::require(a.components == d && b.components == d, "advect: d-vector fields expected");
  const Spectrum sb = forward_transform(b, g);
  GridField out(d, g.size(), a.real && b.real);
  for (int j = 0; j < d; ++j) {
    Spectrum dj(d, g.size());
    for (int c = 0; c < d; ++c)
      for (std::size_t k = 0; k < g.size(); ++k) dj(c, k) = ik(g, k, j) * sb(c, k);
    const GridField djb = inverse_transform(dj, g, b.real);
    for (int c = 0; c < d; ++c) {
      auto po = out.component(c);
      auto pd = djb.component(c);
      auto pa = a.component(j);
      for (std::size_t i = 0; i < g.size(); ++i) po[i] += pa[i] * pd[i];
    }
  }
  return dealiased(out, g);
}

inline GridField real_part(const GridField& f) {
  GridField out = f;
  out.make_real();
  return out;
}

/// Multiplies every coefficient of every component by m(k).
template <class Mult>
void apply_multiplier(Spectrum& s, const SpectralGrid& g, Mult&& m) {
  for (std::size_t k = 0; k < g.size(); ++k) {
    const cplx w = m(k);
    for (int c = 0; c < s.components; ++c) s(c, k) *= w;
  }
}

/// L2 quadrature norm (sum |f|^2 dx^d)^{1/2} over all components.
inline double l2_norm(const GridField& f, const SpectralGrid& g) {
  double s = 0.0;
  for (const auto& z : f.values) s += std::norm(z);
  return std::sqrt(s * std::pow(g.dx(), g.dim()));
}

}  // namespace wkb

namespace wkb {

/// Resolved band read off a set of fields: the largest |xi| where some spectrum
/// still exceeds `rel_floor` times its maximum, times `widen`, capped at the
/// 2/3-rule radius.
inline double estimate_resolved_band(const std::vector<GridField>& fields, const SpectralGrid& g,
                                     double rel_floor = 1e-15, double widen = 2.0) {
  const SpectralGrid full = g.full_band();
  double edge = 0.0;
  for (const auto& f : fields) {
    const Spectrum s = forward_transform(f, full);
    double top = 0.0;
    for (const auto& z : s.coeffs) top = std::max(top, std::abs(z));
    if (top == 0.0) continue;
    for (int c = 0; c < s.components; ++c)
      for (std::size_t k = 0; k < full.size(); ++k)
        if (std::abs(s(c, k)) > rel_floor * top) edge = std::max(edge, std::sqrt(full.xi_sq(k)));
  }
  const double cap = full.dxi() * (full.n() / 3);
  if (edge == 0.0) return cap;
  return std::min(cap, std::max(widen * edge, 4.0 * full.dxi()));
}

}  // namespace wkb
