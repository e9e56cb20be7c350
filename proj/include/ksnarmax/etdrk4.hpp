#pragma once

#include <span>
#include <vector>

#include "ksnarmax/spectral.hpp"

namespace ksnarmax {

/// Scalar ETDRK4 weights for one mode, following the Cox-Matthews scheme in the
/// Kassam-Trefethen form. With z = lambda*dt:
///   e      = exp(z)
///   e_half = exp(z/2)
///   half   = dt (exp(z/2) - 1) / z                      -> dt/2 as z -> 0
///   f1     = dt (-4 - z + e^z (4 - 3z + z^2)) / z^3     -> dt/6
///   f2     = dt ( 2 + z + e^z (-2 + z)) / z^3           -> dt/6
///   f3     = dt (-4 - 3z - z^2 + e^z (4 - z)) / z^3     -> dt/6
/// f1 + 4 f2 + f3 equals the full-step weight dt (e^z - 1)/z, which tends to dt.
struct EtdWeights {
  double e;
  double e_half;
  double half;
  double f1;
  double f2;
  double f3;
};

/// Points on the contour used away from z = 0.
inline constexpr int kContourPoints = 32;
/// Below this |z| the weights come from their Taylor series instead.
inline constexpr double kSeriesThreshold = 1e-4;

EtdWeights etd_weights(double lambda, double dt);

/// Per-mode weight table for a fixed step dt.
struct EtdCoefficients {
  double dt = 0.0;
  std::vector<double> symbol;
  std::vector<double> e;
  std::vector<double> e_half;
  std::vector<double> half;
  std::vector<double> f1;
  std::vector<double> f2;
  std::vector<double> f3;

  std::size_t size() const noexcept { return e.size(); }
};

/// Throws ArgumentError for dt <= 0 or non-finite symbols.
EtdCoefficients precompute(std::span<const double> linear_symbol, double dt);

/// Scratch storage for one ETDRK4 step on n coefficients.
struct Etdrk4Scratch {
  explicit Etdrk4Scratch(std::size_t n) : nv(n), a(n), na(n), b(n), nb(n), c(n), nc(n) {}
  std::vector<Complex> nv, a, na, b, nb, c, nc;
};

/// One ETDRK4 step of v' = lambda v + N(v), in place. `nonlinear(in, out)` must
/// write N(in) into out.
template <class Nonlinear>
void etdrk4_step(std::span<Complex> v, const EtdCoefficients& co, Nonlinear&& nonlinear,
                 Etdrk4Scratch& s) {
  const std::size_t n = v.size();
  nonlinear(std::span<const Complex>(v), std::span<Complex>(s.nv));
  for (std::size_t k = 0; k < n; ++k) s.a[k] = co.e_half[k] * v[k] + co.half[k] * s.nv[k];
  nonlinear(std::span<const Complex>(s.a), std::span<Complex>(s.na));
  for (std::size_t k = 0; k < n; ++k) s.b[k] = co.e_half[k] * v[k] + co.half[k] * s.na[k];
  nonlinear(std::span<const Complex>(s.b), std::span<Complex>(s.nb));
  for (std::size_t k = 0; k < n; ++k) {
    s.c[k] = co.e_half[k] * s.a[k] + co.half[k] * (2.0 * s.nb[k] - s.nv[k]);
  }
  nonlinear(std::span<const Complex>(s.c), std::span<Complex>(s.nc));
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = co.e[k] * v[k] + co.f1[k] * s.nv[k] + 2.0 * co.f2[k] * (s.na[k] + s.nb[k]) +
           co.f3[k] * s.nc[k];
  }
}

/// Fixed-step ETDRK4 integrator for the Fourier-mode KSE on one grid.
class Etdrk4Integrator {
 public:
  Etdrk4Integrator(const FourierGrid& grid, double dt);

  const FourierGrid& grid() const noexcept { return op_.grid(); }
  const EtdCoefficients& coefficients() const noexcept { return coeffs_; }
  double dt() const noexcept { return coeffs_.dt; }

  /// Advances the half spectrum in place; v_0 and v_{N/2} stay zero.
  void step(std::span<Complex> v);

 private:
  KseOperator op_;
  EtdCoefficients coeffs_;
  Etdrk4Scratch scratch_;
};

/// One step of size coeffs.dt. Throws ArgumentError if coeffs were built for another grid.
SpectralField step(const SpectralField& state, const EtdCoefficients& coeffs);

}  // namespace ksnarmax
