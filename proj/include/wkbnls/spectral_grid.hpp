#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "errors.hpp"

namespace wkb {

using cplx = std::complex<double>;

namespace detail {

// The FFTW planner is not re-entrant; execution of an existing plan is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPlans {
 public:
  FftPlans(int d, int n) : d_(d), n_(n) {
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(n);
    fftw_complex* buf = fftw_alloc_complex(total);
    int dims[2] = {n, n};
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft(d, dims, buf, buf, FFTW_FORWARD, flags);
    bwd_ = fftw_plan_dft(d, dims, buf, buf, FFTW_BACKWARD, flags);
    fftw_free(buf);
    if (fwd_ == nullptr || bwd_ == nullptr) throw NumericalError("FFTW planning failed");
  }
  ~FftPlans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  void forward(cplx* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(fwd_, p, p);
  }
  void backward(cplx* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(bwd_, p, p);
  }

 private:
  int d_, n_;
  fftw_plan fwd_{};
  fftw_plan bwd_{};
};

}  // namespace detail

/// Periodic box [-L, L]^d sampled at x_j = -L + j dx, dx = 2L/n, with the
/// matching frequency lattice xi_k = pi k / L stored in FFT order.
///
/// An optional resolved band xi_c restricts the modes taking part in the
/// dynamics and in the weighted norms; by default every lattice mode is resolved.
class SpectralGrid {
 public:
  SpectralGrid(int d, int n, double L) : d_(d), n_(n), L_(L) {
    detail::require(d == 1 || d == 2, "SpectralGrid: dimension must be 1 or 2");
    detail::require(n >= 8 && n % 2 == 0, "SpectralGrid: n must be even and >= 8");
    detail::require(L > 0.0, "SpectralGrid: L must be positive");
    size_ = (d == 1) ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
    plans_ = std::make_shared<detail::FftPlans>(d, n);
    band_ = std::numeric_limits<double>::infinity();
    rebuild_tables();
  }

  int dim() const { return d_; }
  int n() const { return n_; }
  double L() const { return L_; }
  std::size_t size() const { return size_; }
  double dx() const { return 2.0 * L_ / n_; }
  double dxi() const { return std::numbers::pi / L_; }
  /// Largest representable |xi| along one axis (the Nyquist frequency).
  double xi_max() const { return std::numbers::pi * (n_ / 2) / L_; }

  double node(int j) const { return -L_ + j * dx(); }
  double x(std::size_t idx) const { return node(static_cast<int>(d_ == 1 ? idx : idx / n_)); }
  double y(std::size_t idx) const { return d_ == 1 ? 0.0 : node(static_cast<int>(idx % n_)); }

  /// Lattice index along axis `a` for flattened bin `idx` (FFT order, -n/2..n/2-1).
  int wavenumber(std::size_t idx, int a) const {
    const int j = (d_ == 1) ? static_cast<int>(idx)
                            : (a == 0 ? static_cast<int>(idx / n_) : static_cast<int>(idx % n_));
    return (j < n_ / 2) ? j : j - n_;
  }
  double xi(std::size_t idx, int a) const {
    return std::numbers::pi * wavenumber(idx, a) / L_;
  }
  double xi_sq(std::size_t idx) const { return xi_sq_[idx]; }
  double bracket(std::size_t idx) const { return bracket_[idx]; }
  /// (-1)^{k_1 + ... + k_d}, the phase linking the DFT to nodes starting at -L.
  double parity(std::size_t idx) const { return parity_[idx]; }
  bool is_nyquist(std::size_t idx, int a) const { return wavenumber(idx, a) == -n_ / 2; }

  double band() const { return band_; }
  bool resolved(std::size_t idx) const { return resolved_[idx] != 0; }
  /// Modes kept by the 2/3 rule intersected with the resolved band.
  bool dealiased(std::size_t idx) const { return dealiased_[idx] != 0; }

  /// Copy sharing the FFT plans with a resolved band |xi| <= xi_c.
  SpectralGrid with_band(double xi_c) const {
    detail::require(xi_c > 0.0, "SpectralGrid: band must be positive");
    SpectralGrid g(*this);
    g.band_ = xi_c;
    g.rebuild_tables();
    return g;
  }
  SpectralGrid full_band() const {
    SpectralGrid g(*this);
    g.band_ = std::numeric_limits<double>::infinity();
    g.rebuild_tables();
    return g;
  }

  const detail::FftPlans& plans() const { return *plans_; }

  bool same_lattice(const SpectralGrid& o) const { return d_ == o.d_ && n_ == o.n_ && L_ == o.L_; }

 private:
  void rebuild_tables() {
    xi_sq_.assign(size_, 0.0);
    bracket_.assign(size_, 1.0);
    parity_.assign(size_, 1.0);
    resolved_.assign(size_, 1);
    dealiased_.assign(size_, 1);
    const int cut = n_ / 3;
    for (std::size_t idx = 0; idx < size_; ++idx) {
      double s = 0.0;
      int ksum = 0;
      bool keep = true;
      for (int a = 0; a < d_; ++a) {
        const int k = wavenumber(idx, a);
        const double q = std::numbers::pi * k / L_;
        s += q * q;
        ksum += k;
        if (std::abs(k) > cut) keep = false;
      }
      xi_sq_[idx] = s;
      bracket_[idx] = std::sqrt(1.0 + s);
      parity_[idx] = (ksum % 2 == 0) ? 1.0 : -1.0;
      const bool in_band = std::sqrt(s) <= band_;
      resolved_[idx] = in_band ? 1 : 0;
      dealiased_[idx] = (keep && in_band) ? 1 : 0;
    }
  }

  int d_, n_;
  double L_;
  std::size_t size_{};
  double band_;
  std::vector<double> xi_sq_, bracket_, parity_;
  std::vector<unsigned char> resolved_, dealiased_;
  std::shared_ptr<detail::FftPlans> plans_;
};

}  // namespace wkb
