#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "analytic_norm.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "spectral_grid.hpp"
#include "spectral_ops.hpp"

namespace wkb {

struct Params {
  int d = 1;
  double lambda = 1.0;
  double eps = 0.0;
  double delta_in = 0.5;
  double ell = 3.0;
  double M = 0.0;
  double T = 0.0;
  double dt = 0.0;
  double K_ell = 0.0;
  /// Weight q of zeta.zeta in the dispersive bracket (div zeta + q zeta.zeta).
  double quadratic_weight = 0.5;

  void validate() const {
    detail::require(d == 1 || d == 2, "Params: d must be 1 or 2");
    detail::require(lambda != 0.0, "Params: lambda must be nonzero");
    detail::require(eps >= 0.0 && eps <= 1.0, "Params: eps must lie in [0, 1]");
    detail::require(delta_in > 0.0, "Params: delta_in must be positive");
    detail::require(ell > 0.5 * d, "Params: ell must exceed d/2");
    detail::require(delta_in - M * T >= -1e-14, "Params: delta_in - M T must be >= 0");
  }
  RadiusSchedule schedule() const { return {delta_in, M}; }
};

/// Closed-form real profile with its gradient and its limits along x at -inf/+inf.
struct Profile {
  std::string name = "zero";
  std::function<double(double, double)> value = [](double, double) { return 0.0; };
  std::function<std::array<double, 2>(double, double)> gradient = [](double, double) {
    return std::array<double, 2>{0.0, 0.0};
  };
  double limit_minus = 0.0;
  double limit_plus = 0.0;
};

inline Profile constant_profile(double c) {
  Profile p;
  p.name = "constant";
  p.value = [c](double, double) { return c; };
  p.limit_minus = p.limit_plus = c;
  return p;
}

/// amp * exp(-|x - x0|^2 / (2 w^2)).
inline Profile gaussian_profile(double amp, double x0 = 0.0, double width = 1.0) {
  Profile p;
  p.name = "gaussian_bump";
  p.value = [=](double x, double y) {
    const double r2 = (x - x0) * (x - x0) + y * y;
    return amp * std::exp(-r2 / (2.0 * width * width));
  };
  p.gradient = [=](double x, double y) {
    const double r2 = (x - x0) * (x - x0) + y * y;
    const double e = amp * std::exp(-r2 / (2.0 * width * width)) / (width * width);
    return std::array<double, 2>{-(x - x0) * e, -y * e};
  };
  return p;
}

inline Profile operator+(const Profile& a, const Profile& b) {
  Profile p;
  p.name = a.name + "+" + b.name;
  p.value = [a, b](double x, double y) { return a.value(x, y) + b.value(x, y); };
  p.gradient = [a, b](double x, double y) {
    const auto ga = a.gradient(x, y);
    const auto gb = b.gradient(x, y);
    return std::array<double, 2>{ga[0] + gb[0], ga[1] + gb[1]};
  };
  p.limit_minus = a.limit_minus + b.limit_minus;
  p.limit_plus = a.limit_plus + b.limit_plus;
  return p;
}

inline Profile scaled(const Profile& a, double s) {
  Profile p;
  p.name = a.name;
  p.value = [a, s](double x, double y) { return s * a.value(x, y); };
  p.gradient = [a, s](double x, double y) {
    const auto ga = a.gradient(x, y);
    return std::array<double, 2>{s * ga[0], s * ga[1]};
  };
  p.limit_minus = s * a.limit_minus;
  p.limit_plus = s * a.limit_plus;
  return p;
}

inline GridField sample_profile(const Profile& p, const SpectralGrid& g) {
  return sample(g, p.value, true);
}

/// Closed-form gradient sampled on the grid as a real d-vector field.
inline GridField sample_gradient(const Profile& p, const SpectralGrid& g) {
  GridField out(g.dim(), g.size(), true);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto gr = p.gradient(g.x(i), g.y(i));
    for (int a = 0; a < g.dim(); ++a) out(a, i) = gr[a];
  }
  return out;
}

struct HydroState {
  GridField zeta;
  GridField v;
};

/// Samples on the uniform grid t_i = i dt, i = 0..N, with delta(t_i) attached.
struct Trajectory {
  std::vector<double> times;
  std::vector<HydroState> states;
  Params params;
  std::vector<double> delta_of_t;

  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  std::size_t size() const { return states.size(); }

  void attach_schedule() {
    delta_of_t.resize(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
      delta_of_t[i] = params.delta_in - params.M * times[i];
      if (delta_of_t[i] < -1e-12) throw DomainError("Trajectory: analytic radius exhausted");
    }
  }
  TimeSeries zeta_series(const SpectralGrid& g) const {
    TimeSeries s{dt(), {}};
    for (const auto& st : states) s.samples.push_back(forward_transform(st.zeta, g));
    return s;
  }
  TimeSeries v_series(const SpectralGrid& g) const {
    TimeSeries s{dt(), {}};
    for (const auto& st : states) s.samples.push_back(forward_transform(st.v, g));
    return s;
  }
};

inline std::vector<double> uniform_times(double T, int steps) {
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) t[i] = T * i / steps;
  return t;
}

/// psi = psi_in + Psi and phi = phi_in - lambda t psi_in + Phi, with only the
/// increments Psi (complex) and Phi (real) carried on the grid.
struct PhaseState {
  Profile psi_in;
  Profile phi_in;
  double lambda = 1.0;
  double t = 0.0;
  GridField psi_increment;
  GridField phi_increment;

  double psi_background(double x, double y) const { return psi_in.value(x, y); }
  double phi_background(double x, double y) const {
    return phi_in.value(x, y) - lambda * t * psi_in.value(x, y);
  }
  GridField psi(const SpectralGrid& g) const {
    GridField out = psi_increment;
    for (std::size_t i = 0; i < g.size(); ++i) out.values[i] += psi_background(g.x(i), g.y(i));
    return out;
  }
  GridField phi(const SpectralGrid& g) const {
    GridField out = phi_increment;
    for (std::size_t i = 0; i < g.size(); ++i) out.values[i] += phi_background(g.x(i), g.y(i));
    out.real = true;
    return out;
  }
  /// Closed-form gradient of the background plus the spectral gradient of the increment.
  GridField grad_psi(const SpectralGrid& g) const {
    GridField out = grad(psi_increment, g);
    out += sample_gradient(psi_in, g);
    return out;
  }
  GridField grad_phi(const SpectralGrid& g) const {
    GridField out = grad(phi_increment, g);
    GridField bg = sample_gradient(phi_in, g);
    bg.axpy(-lambda * t, sample_gradient(psi_in, g));
    out += bg;
    return out;
  }
};

inline GridField gradient_of_potential(const GridField& p, const SpectralGrid& g) {
  detail::require(p.components == 1, "gradient_of_potential: scalar potential expected");
  return grad(p, g);
}

/// L2 quadrature norm of d1 v2 - d2 v1; zero for d = 1.
inline double curl_residual(const GridField& v, const SpectralGrid& g) {
  if (g.dim() == 1) return 0.0;
  detail::require(v.components == 2, "curl_residual: 2-vector field expected");
  const Spectrum s = forward_transform(v, g);
  Spectrum c(1, g.size());
  for (std::size_t k = 0; k < g.size(); ++k) c(0, k) = ik(g, k, 0) * s(1, k) - ik(g, k, 1) * s(0, k);
  return l2_norm(inverse_transform(c, g, v.real), g);
}

/// Largest |xi_i f^_j - xi_j f^_i| relative to the largest |xi||f^|; zero for d = 1.
inline double gradient_structure_residual(const GridField& f, const SpectralGrid& g) {
  if (g.dim() == 1) return 0.0;
  const Spectrum s = forward_transform(f, g);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.resolved(k)) continue;
    const cplx a = ik(g, k, 0) * s(1, k) - ik(g, k, 1) * s(0, k);
    num = std::max(num, std::abs(a));
    den = std::max(den, std::sqrt(g.xi_sq(k)) * std::max(std::abs(s(0, k)), std::abs(s(1, k))));
  }
  return den > 0.0 ? num / den : 0.0;
}

/// Largest |profile| over the outer two grid cells of the box.
inline double periodization_error(const Profile& p, const SpectralGrid& g) {
  double m = 0.0;
  const int n = g.n();
  const auto shell = [n](int j) { return j < 2 || j >= n - 2; };
  for (std::size_t i = 0; i < g.size(); ++i) {
    const int jx = g.dim() == 1 ? static_cast<int>(i) : static_cast<int>(i / n);
    const int jy = g.dim() == 1 ? 0 : static_cast<int>(i % n);
    if (!(shell(jx) || (g.dim() == 2 && shell(jy)))) continue;
    m = std::max(m, std::abs(p.value(g.x(i), g.y(i))));
  }
  return m;
}

/// Text dump: a header line with d, n, L, dt, then one row per time node and
/// field component holding the real and imaginary parts in node order.
inline void write_snapshot(std::ostream& os, const Trajectory& traj, const SpectralGrid& g) {
  os << std::setprecision(17);
  os << "d=" << g.dim() << ",n=" << g.n() << ",L=" << g.L() << ",dt=" << traj.dt() << "\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto dump = [&](const char* name, const GridField& f) {
      for (int c = 0; c < f.components; ++c) {
        os << traj.times[i] << ',' << name << ',' << c;
        for (const auto& z : f.component(c)) os << ',' << z.real() << ',' << z.imag();
        os << "\n";
      }
    };
    dump("zeta", traj.states[i].zeta);
    dump("v", traj.states[i].v);
  }
}

}  // namespace wkb
