#include "ksnarmax/etdrk4.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "ksnarmax/errors.hpp"

namespace ksnarmax {

namespace {

constexpr int kSeriesTerms = 12;

// Taylor coefficients of the weight functions in z, each divided by dt.
// With e^z = sum z^n/n!, the numerator of f1 has z^n coefficient
// 4/n! - 3/(n-1)! + 1/(n-2)! for n >= 3, and similarly for f2, f3.
EtdWeights series_weights(double z, double dt) {
  double f1 = 0.0, f2 = 0.0, f3 = 0.0, half = 0.0;
  // Horner from the top term down.
  std::vector<double> inv_fact(kSeriesTerms + 4);
  inv_fact[0] = 1.0;
  for (std::size_t n = 1; n < inv_fact.size(); ++n) inv_fact[n] = inv_fact[n - 1] / static_cast<double>(n);
  for (int m = kSeriesTerms - 1; m >= 0; --m) {
    const auto n = static_cast<std::size_t>(m + 3);
    f1 = f1 * z + (4.0 * inv_fact[n] - 3.0 * inv_fact[n - 1] + inv_fact[n - 2]);
    f2 = f2 * z + (-2.0 * inv_fact[n] + inv_fact[n - 1]);
    f3 = f3 * z + (4.0 * inv_fact[n] - inv_fact[n - 1]);
    // (e^{z/2} - 1)/z = sum_{n>=1} 2^{-n} z^{n-1} / n!
    const auto h = static_cast<std::size_t>(m + 1);
    half = half * z + std::ldexp(inv_fact[h], -(m + 1));
  }
  return EtdWeights{std::exp(z), std::exp(0.5 * z), dt * half, dt * f1, dt * f2, dt * f3};
}

EtdWeights contour_weights(double z, double dt) {
  using C = std::complex<double>;
  C half{}, f1{}, f2{}, f3{};
  for (int j = 1; j <= kContourPoints; ++j) {
    const double theta = std::numbers::pi * (j - 0.5) / (kContourPoints / 2.0);
    const C r = C{z, 0.0} + std::polar(1.0, theta);
    const C er = std::exp(r);
    const C r3 = r * r * r;
    half += (std::exp(0.5 * r) - 1.0) / r;
    f1 += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3;
    f2 += (2.0 + r + er * (r - 2.0)) / r3;
    f3 += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3;
  }
  const double w = dt / kContourPoints;
  return EtdWeights{std::exp(z), std::exp(0.5 * z), w * half.real(), w * f1.real(), w * f2.real(),
                    w * f3.real()};
}

}  // namespace

EtdWeights etd_weights(double lambda, double dt) {
  const double z = lambda * dt;
  if (std::abs(z) < kSeriesThreshold) return series_weights(z, dt);
  return contour_weights(z, dt);
}

EtdCoefficients precompute(std::span<const double> linear_symbol, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("precompute: dt must be positive");
  EtdCoefficients c;
  c.dt = dt;
  c.symbol.assign(linear_symbol.begin(), linear_symbol.end());
  const std::size_t n = linear_symbol.size();
  c.e.resize(n);
  c.e_half.resize(n);
  c.half.resize(n);
  c.f1.resize(n);
  c.f2.resize(n);
  c.f3.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(linear_symbol[k])) throw ArgumentError("precompute: non-finite linear symbol");
    const EtdWeights w = etd_weights(linear_symbol[k], dt);
    c.e[k] = w.e;
    c.e_half[k] = w.e_half;
    c.half[k] = w.half;
    c.f1[k] = w.f1;
    c.f2[k] = w.f2;
    c.f3[k] = w.f3;
  }
  return c;
}

Etdrk4Integrator::Etdrk4Integrator(const FourierGrid& grid, double dt)
    : op_(grid),
      coeffs_(precompute(op_.symbol(), dt)),
      scratch_(static_cast<std::size_t>(grid.half_size())) {}

void Etdrk4Integrator::step(std::span<Complex> v) {
  if (v.size() != coeffs_.size()) throw ArgumentError("Etdrk4Integrator::step: size mismatch");
  etdrk4_step(v, coeffs_,
              [this](std::span<const Complex> in, std::span<Complex> out) { op_.nonlinear(in, out); },
              scratch_);
}

SpectralField step(const SpectralField& state, const EtdCoefficients& coeffs) {
  state.validate();
  if (coeffs.symbol != linear_symbol(state.grid)) {
    throw ArgumentError("step: coefficients were built for a different grid");
  }
  QuadraticTerm* term = &thread_quadratic_term(state.grid);
  SpectralField out = state;
  Etdrk4Scratch scratch(out.coeffs.size());
  etdrk4_step(std::span<Complex>(out.coeffs), coeffs,
              [term](std::span<const Complex> in, std::span<Complex> o) { term->evaluate(in, o); },
              scratch);
  return out;
}

}  // namespace ksnarmax
