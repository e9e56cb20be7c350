#pragma once

// Brute-force reference implementations shared by the unit tests.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;

/// Full spectrum value of a half-spectrum field with retained modes |k| <= kmax.
inline Complex mode(const std::vector<Complex>& half, int k, int kmax) {
  if (k == 0 || std::abs(k) > kmax) return {};
  return k > 0 ? half[static_cast<std::size_t>(k)] : std::conj(half[static_cast<std::size_t>(-k)]);
}

/// -(i q_k / 2) sum_l v_l v_{k-l} over retained l and k - l, by direct summation.
/// `half` is indexed by k = 0..kmax (index 0 ignored).
inline std::vector<Complex> quadratic(const std::vector<Complex>& half, int kmax, double period) {
  std::vector<Complex> out(half.size());
  for (int k = 1; k <= kmax; ++k) {
    Complex s{};
    for (int l = -kmax; l <= kmax; ++l) s += mode(half, l, kmax) * mode(half, k - l, kmax);
    const double q = 2.0 * M_PI * k / period;
    out[static_cast<std::size_t>(k)] = Complex{0.0, -q / 2.0} * s;
  }
  return out;
}

inline std::vector<Complex> random_modes(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<Complex> v(n);
  for (auto& c : v) c = {g(rng), g(rng)};
  return v;
}

}  // namespace oracle
