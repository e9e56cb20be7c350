#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ksnarmax/reduced_model.hpp"
#include "ksnarmax/spectral.hpp"

namespace ksnarmax {

/// Extended modes built from one reduced state:
///   u~_j = u_j                                   1 <= j <= K
///   u~_j = i sum_{l=j-K}^{K} u_l u_{j-l}         K < j <= 2K
///
/// The high-mode values come from one fixed-point iterate of the slaving relation
/// w = -A^{-1} Q f(u + w) started from w = 0. That iterate is, up to a factor
/// proportional to q_j^{-4}, the quadratic sum above. Such prefactors (and the
/// dropped linear part of f) are absorbed into the free regression coefficients,
/// so only the sum is kept.
struct ExtendedModes {
  std::vector<Complex> values;  // u~_1 .. u~_{2K}

  int modes() const noexcept { return static_cast<int>(values.size() / 2); }
  /// u~_j for 1 <= |j| <= 2K, with u~_{-j} = conj(u~_j).
  Complex operator()(int j) const {
    return j > 0 ? values[static_cast<std::size_t>(j - 1)] : std::conj(values[static_cast<std::size_t>(-j - 1)]);
  }
};

ExtendedModes extend_modes(const ReducedState& state);
/// `out` holds 2K values.
void extend_modes(std::span<const Complex> u, std::span<Complex> out);

/// Lag orders of the autoregressive (p), exogenous (r), and moving-average (q) parts.
struct NarmaxOrders {
  int p = 0;
  int r = 1;
  int q = 0;

  /// Throws ArgumentError unless 0 <= p, q <= 8 and 1 <= r <= 8.
  void validate() const;
  int max_lag() const noexcept;
  /// Initial window length 2 max{p, r, q} + 1.
  std::size_t window() const noexcept { return static_cast<std::size_t>(2 * max_lag() + 1); }
  /// "pqr"-style label such as "021".
  std::string label() const;
  /// Parses "0,2,1" or "021".
  static NarmaxOrders parse(const std::string& text);

  friend bool operator==(const NarmaxOrders&, const NarmaxOrders&) = default;
};

/// NARMAX keeps the quadratic products and the R^delta term; ARMAX drops both.
enum class Ansatz { narmax, armax };

std::string to_string(Ansatz a);
Ansatz parse_ansatz(const std::string& text);

/// Position of every term of the per-mode coefficient vector theta_k:
///   [mu | a_1..a_p | b_0..b_{r-1} | c_1..c_K, c_{K+1} | d_1..d_q]
/// The c block is empty for ARMAX.
struct RegressorLayout {
  NarmaxOrders orders;
  int modes = 0;
  Ansatz ansatz = Ansatz::narmax;

  std::size_t size() const noexcept { return 1 + static_cast<std::size_t>(orders.p + orders.r + c_count() + orders.q); }
  int c_count() const noexcept { return ansatz == Ansatz::narmax ? modes + 1 : 0; }
  std::size_t a_offset() const noexcept { return 1; }
  std::size_t b_offset() const noexcept { return a_offset() + static_cast<std::size_t>(orders.p); }
  std::size_t c_offset() const noexcept { return b_offset() + static_cast<std::size_t>(orders.r); }
  std::size_t d_offset() const noexcept { return c_offset() + static_cast<std::size_t>(c_count()); }
};

/// Regressors for one mode k at step n. The row models the next model error
/// z^{n+1} and holds
///   1, z_k^{n+1-j} (j = 1..p), u_k^{n-j} (j = 0..r-1),
///   u~_{j+K} u~_{k-j-K} (j = 1..K), R_k^delta(u^n), xi_k^{n+1-j} (j = 1..q).
/// The second factor is u~ at a negative index, i.e. conj(u~_{j+K-k}); the pair's
/// wavenumbers add up to k, as in the quadratic term of mode k.
using RegressorRow = std::vector<Complex>;

/// Lagged quantities available at step n, most recent first.
struct HistoryWindow {
  std::vector<std::vector<Complex>> u;   // u[j]  = u^{n-j}
  std::vector<std::vector<Complex>> z;   // z[j]  = z^{n-j}
  std::vector<std::vector<Complex>> xi;  // xi[j] = xi^{n-j}
  std::vector<Complex> r_delta;          // R^delta(u^n); needed for NARMAX only
};

/// k is 1-based. Throws ArgumentError naming the first missing lag.
RegressorRow build_regressors(const HistoryWindow& window, const NarmaxOrders& orders, int k,
                              Ansatz ansatz = Ansatz::narmax);

/// Fills a row through accessors, so callers can keep history in any layout.
/// `u_lag(j, i)` = u_i^{n-j}, `z_lag(j, i)` = z_i^{n+1-j}, `xi_lag(j, i)` = xi_i^{n+1-j},
/// with i a 0-based mode index. `ext` holds u~ of u^n and `r_delta_k` = R_k^delta(u^n).
template <class ULag, class ZLag, class XiLag>
void fill_regressors(const RegressorLayout& layout, int k, ULag&& u_lag, ZLag&& z_lag, XiLag&& xi_lag,
                     std::span<const Complex> ext, Complex r_delta_k, std::span<Complex> row) {
  const int i = k - 1;
  const NarmaxOrders& o = layout.orders;
  std::size_t pos = 0;
  row[pos++] = Complex{1.0, 0.0};
  for (int j = 1; j <= o.p; ++j) row[pos++] = z_lag(j, i);
  for (int j = 0; j < o.r; ++j) row[pos++] = u_lag(j, i);
  if (layout.ansatz == Ansatz::narmax) {
    const int big_k = layout.modes;
    for (int j = 1; j <= big_k; ++j) {
      // u~_{k-j-K} = conj(u~_{j+K-k}), and j + K - k >= 1 since k <= K.
      row[pos++] = ext[static_cast<std::size_t>(j + big_k - 1)] * std::conj(ext[static_cast<std::size_t>(j + big_k - k - 1)]);
    }
    row[pos++] = r_delta_k;
  }
  for (int j = 1; j <= o.q; ++j) row[pos++] = xi_lag(j, i);
}

}  // namespace ksnarmax
