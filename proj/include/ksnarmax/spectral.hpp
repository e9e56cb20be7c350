#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace ksnarmax {

using Complex = std::complex<double>;

/// Periodic grid of N points on [0, L) together with the wavenumbers
/// q_k = 2*pi*k/L of the stored half spectrum k = 0..N/2.
///
/// Note: one passage of the source derivation writes q_k = kL/2pi. That form is
/// inconsistent with floor(L/2pi) linearly unstable modes; 2*pi*k/L is used here.
class FourierGrid {
 public:
  FourierGrid(double period, int size);

  double period() const noexcept { return period_; }
  int size() const noexcept { return size_; }
  /// Number of stored coefficients, N/2 + 1.
  int half_size() const noexcept { return size_ / 2 + 1; }
  double wavenumber(int k) const noexcept { return wavenumbers_[static_cast<std::size_t>(k)]; }
  const std::vector<double>& wavenumbers() const noexcept { return wavenumbers_; }
  /// floor(L / 2pi), the number of modes with 0 < q_k <= 1.
  int unstable_modes() const noexcept;
  /// Length of the zero-padded transform used for the quadratic term:
  /// the smallest even 2,3,5-smooth integer >= 3N/2.
  int padded_size() const noexcept { return padded_size_; }

  friend bool operator==(const FourierGrid& a, const FourierGrid& b) noexcept {
    return a.period_ == b.period_ && a.size_ == b.size_;
  }

 private:
  double period_;
  int size_;
  int padded_size_;
  std::vector<double> wavenumbers_;
};

/// Half spectrum v_0..v_{N/2} of a real periodic field; v_{-k} = conj(v_k) is implied.
/// Coefficients are normalised so that v(x) = sum_k v_k exp(i q_k x).
struct SpectralField {
  FourierGrid grid;
  std::vector<Complex> coeffs;

  static SpectralField zeros(const FourierGrid& grid);
  /// Throws InvalidStateError on size mismatch, non-finite values, or nonzero v_0 / v_{N/2}.
  void validate() const;
};

/// lambda_k = q_k^2 - q_k^4 for k = 0..N/2.
std::vector<double> linear_symbol(const FourierGrid& grid);

/// Dealiased evaluation of the quadratic term -(i q_k / 2) sum_l v_l v_{k-l}.
///
/// Owns FFT plans and scratch buffers, so a single instance must not be shared
/// between threads. Plan creation itself is serialised internally.
class QuadraticTerm {
 public:
  explicit QuadraticTerm(const FourierGrid& grid);
  ~QuadraticTerm();
  QuadraticTerm(QuadraticTerm&&) noexcept;
  QuadraticTerm& operator=(QuadraticTerm&&) noexcept;
  QuadraticTerm(const QuadraticTerm&) = delete;
  QuadraticTerm& operator=(const QuadraticTerm&) = delete;

  const FourierGrid& grid() const noexcept;

  /// `v` and `out` hold N/2 + 1 coefficients. v_0 and v_{N/2} are ignored;
  /// out_0 and out_{N/2} are set to zero. `out` may alias `v`.
  void evaluate(std::span<const Complex> v, std::span<Complex> out);

  /// Plain convolution s_k = sum_l v_l v_{k-l} over retained modes (no q_k factor).
  void convolve(std::span<const Complex> v, std::span<Complex> out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Per-thread cached QuadraticTerm for `grid`; valid for the lifetime of the calling thread.
QuadraticTerm& thread_quadratic_term(const FourierGrid& grid);

/// Full right-hand side lambda_k v_k + quadratic term, for hot loops.
class KseOperator {
 public:
  explicit KseOperator(const FourierGrid& grid);

  const FourierGrid& grid() const noexcept { return quadratic_.grid(); }
  const std::vector<double>& symbol() const noexcept { return symbol_; }

  void nonlinear(std::span<const Complex> v, std::span<Complex> out) { quadratic_.evaluate(v, out); }
  /// `out` must not alias `v`.
  void rhs(std::span<const Complex> v, std::span<Complex> out);

 private:
  QuadraticTerm quadratic_;
  std::vector<double> symbol_;
};

/// dv_k/dt of the truncated Fourier-mode system, with 3/2-rule dealiasing.
/// Thread safe: each thread keeps its own cached transform plans.
SpectralField kse_rhs(const SpectralField& field);

}  // namespace ksnarmax
