#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"
#include "spectral_grid.hpp"

namespace wkb {

/// Nodal values of a scalar (components == 1) or d-vector field, stored
/// component-major. `real` marks fields whose imaginary part must vanish.
struct GridField {
  int components = 1;
  bool real = false;
  std::vector<cplx> values;

  GridField() = default;
  GridField(int comps, std::size_t nodes, bool is_real = false)
      : components(comps), real(is_real), values(static_cast<std::size_t>(comps) * nodes) {}

  std::size_t nodes() const { return components == 0 ? 0 : values.size() / components; }
  std::span<cplx> component(int c) {
    return {values.data() + static_cast<std::size_t>(c) * nodes(), nodes()};
  }
  std::span<const cplx> component(int c) const {
    return {values.data() + static_cast<std::size_t>(c) * nodes(), nodes()};
  }
  cplx& operator()(int c, std::size_t i) { return values[static_cast<std::size_t>(c) * nodes() + i]; }
  cplx operator()(int c, std::size_t i) const {
    return values[static_cast<std::size_t>(c) * nodes() + i];
  }

  GridField& operator+=(const GridField& o) {
    detail::require(o.values.size() == values.size(), "GridField: shape mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    real = real && o.real;
    return *this;
  }
  GridField& operator-=(const GridField& o) {
    detail::require(o.values.size() == values.size(), "GridField: shape mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    real = real && o.real;
    return *this;
  }
  GridField& operator*=(double s) {
    for (auto& z : values) z *= s;
    return *this;
  }
  GridField& operator*=(cplx s) {
    for (auto& z : values) z *= s;
    if (s.imag() != 0.0) real = false;
    return *this;
  }
  /// this += s * o
  GridField& axpy(cplx s, const GridField& o) {
    detail::require(o.values.size() == values.size(), "GridField: shape mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += s * o.values[i];
    real = real && o.real && s.imag() == 0.0;
    return *this;
  }

  /// Largest |Im| relative to the largest modulus.
  double imag_residual() const {
    double im = 0.0, mx = 0.0;
    for (const auto& z : values) {
      im = std::max(im, std::abs(z.imag()));
      mx = std::max(mx, std::abs(z));
    }
    return mx > 0.0 ? im / mx : 0.0;
  }
  void make_real() {
    for (auto& z : values) z = {z.real(), 0.0};
    real = true;
  }
  double max_abs() const {
    double m = 0.0;
    for (const auto& z : values) m = std::max(m, std::abs(z));
    return m;
  }
};

inline GridField operator+(GridField a, const GridField& b) { return a += b; }
inline GridField operator-(GridField a, const GridField& b) { return a -= b; }
inline GridField operator*(double s, GridField a) { return a *= s; }
inline GridField operator*(cplx s, GridField a) { return a *= s; }

/// Fourier coefficients per component on the lattice of a SpectralGrid (FFT order),
/// approximating the continuum transform f^(xi) = int f(x) e^{-i x xi} dx.
struct Spectrum {
  int components = 1;
  std::vector<cplx> coeffs;

  Spectrum() = default;
  Spectrum(int comps, std::size_t bins) : components(comps), coeffs(static_cast<std::size_t>(comps) * bins) {}

  std::size_t bins() const { return components == 0 ? 0 : coeffs.size() / components; }
  cplx& operator()(int c, std::size_t k) { return coeffs[static_cast<std::size_t>(c) * bins() + k]; }
  cplx operator()(int c, std::size_t k) const { return coeffs[static_cast<std::size_t>(c) * bins() + k]; }

  Spectrum& operator+=(const Spectrum& o) {
    detail::require(o.coeffs.size() == coeffs.size(), "Spectrum: shape mismatch");
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += o.coeffs[i];
    return *this;
  }
  Spectrum& operator-=(const Spectrum& o) {
    detail::require(o.coeffs.size() == coeffs.size(), "Spectrum: shape mismatch");
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] -= o.coeffs[i];
    return *this;
  }
  Spectrum& operator*=(cplx s) {
    for (auto& z : coeffs) z *= s;
    return *this;
  }
  Spectrum& axpy(cplx s, const Spectrum& o) {
    detail::require(o.coeffs.size() == coeffs.size(), "Spectrum: shape mismatch");
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += s * o.coeffs[i];
    return *this;
  }
};

inline GridField zero_field(const SpectralGrid& g, int comps, bool is_real) {
  return GridField(comps, g.size(), is_real);
}

/// Samples a pointwise function f(x, y) (y ignored for d = 1) on the grid nodes.
template <class F>
GridField sample(const SpectralGrid& g, F&& f, bool is_real = true) {
  GridField out(1, g.size(), is_real);
  for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = cplx(f(g.x(i), g.y(i)));
  if (is_real) out.make_real();
  return out;
}

/// Stacks scalar fields into one vector field.
inline GridField stack(const std::vector<GridField>& parts) {
  detail::require(!parts.empty(), "stack: no components");
  const std::size_t n = parts.front().nodes();
  GridField out(static_cast<int>(parts.size()), n, true);
  for (std::size_t c = 0; c < parts.size(); ++c) {
    detail::require(parts[c].components == 1 && parts[c].nodes() == n, "stack: shape mismatch");
    std::copy(parts[c].values.begin(), parts[c].values.end(), out.component(static_cast<int>(c)).begin());
    out.real = out.real && parts[c].real;
  }
  return out;
}

inline GridField extract(const GridField& f, int c) {
  GridField out(1, f.nodes(), f.real);
  std::copy(f.component(c).begin(), f.component(c).end(), out.values.begin());
  return out;
}

}  // namespace wkb
