#include "ksnarmax/aim_features.hpp"

#include <algorithm>
#include <cctype>

#include "ksnarmax/errors.hpp"

namespace ksnarmax {

namespace {
constexpr int kMaxOrder = 8;
}

void extend_modes(std::span<const Complex> u, std::span<Complex> out) {
  const int k = static_cast<int>(u.size());
  if (k < 1 || out.size() != 2 * u.size()) throw ArgumentError("extend_modes: output must hold 2K values");
  // u_{-l} = conj(u_l); indices j - l below stay in 1..K.
  for (int j = 1; j <= k; ++j) out[static_cast<std::size_t>(j - 1)] = u[static_cast<std::size_t>(j - 1)];
  for (int j = k + 1; j <= 2 * k; ++j) {
    Complex sum{};
    for (int l = j - k; l <= k; ++l) sum += u[static_cast<std::size_t>(l - 1)] * u[static_cast<std::size_t>(j - l - 1)];
    out[static_cast<std::size_t>(j - 1)] = Complex{0.0, 1.0} * sum;
  }
}

ExtendedModes extend_modes(const ReducedState& state) {
  ExtendedModes e;
  e.values.resize(2 * state.u.size());
  extend_modes(state.u, e.values);
  return e;
}

void NarmaxOrders::validate() const {
  if (p < 0 || p > kMaxOrder || q < 0 || q > kMaxOrder || r < 1 || r > kMaxOrder) {
    throw ArgumentError("orders (p, r, q) = (" + std::to_string(p) + ", " + std::to_string(r) + ", " +
                        std::to_string(q) + ") outside 0 <= p, q <= 8, 1 <= r <= 8");
  }
}

int NarmaxOrders::max_lag() const noexcept { return std::max({p, r, q}); }

std::string NarmaxOrders::label() const { return std::to_string(p) + std::to_string(r) + std::to_string(q); }

NarmaxOrders NarmaxOrders::parse(const std::string& text) {
  std::vector<int> v;
  std::string cur;
  const bool has_sep = text.find(',') != std::string::npos;
  for (char c : text) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      if (has_sep) {
        cur += c;
      } else {
        v.push_back(c - '0');
      }
    } else if (c == ',' && has_sep) {
      if (cur.empty()) break;
      v.push_back(std::stoi(cur));
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      throw ArgumentError("cannot parse orders '" + text + "'");
    }
  }
  if (has_sep && !cur.empty()) v.push_back(std::stoi(cur));
  if (v.size() != 3) throw ArgumentError("orders '" + text + "' must name p, r and q");
  NarmaxOrders o{v[0], v[1], v[2]};
  o.validate();
  return o;
}

std::string to_string(Ansatz a) { return a == Ansatz::narmax ? "narmax" : "armax"; }

Ansatz parse_ansatz(const std::string& text) {
  if (text == "narmax") return Ansatz::narmax;
  if (text == "armax") return Ansatz::armax;
  throw ArgumentError("unknown ansatz '" + text + "' (expected narmax or armax)");
}

RegressorRow build_regressors(const HistoryWindow& window, const NarmaxOrders& orders, int k, Ansatz ansatz) {
  orders.validate();
  if (window.u.empty()) throw ArgumentError("build_regressors: missing u^n");
  const int big_k = static_cast<int>(window.u.front().size());
  if (k < 1 || k > big_k) throw ArgumentError("build_regressors: mode index out of range");

  auto need = [&](const std::vector<std::vector<Complex>>& lags, int count, const char* name) {
    if (static_cast<int>(lags.size()) < count) {
      throw ArgumentError("build_regressors: missing lag " + std::string(name) + "^{n-" +
                          std::to_string(lags.size()) + "}");
    }
    for (int j = 0; j < count; ++j) {
      if (static_cast<int>(lags[static_cast<std::size_t>(j)].size()) != big_k) {
        throw ArgumentError("build_regressors: " + std::string(name) + "^{n-" + std::to_string(j) + "} has wrong size");
      }
    }
  };
  need(window.u, orders.r, "u");
  need(window.z, orders.p, "z");
  need(window.xi, orders.q, "xi");

  const RegressorLayout layout{orders, big_k, ansatz};
  std::vector<Complex> ext(2 * static_cast<std::size_t>(big_k));
  Complex r_k{};
  if (ansatz == Ansatz::narmax) {
    if (window.r_delta.size() != static_cast<std::size_t>(big_k)) {
      throw ArgumentError("build_regressors: missing R^delta(u^n)");
    }
    extend_modes(window.u.front(), ext);
    r_k = window.r_delta[static_cast<std::size_t>(k - 1)];
  }
  RegressorRow row(layout.size());
  // z^{n+1-j} is window.z[j-1]; likewise for xi.
  fill_regressors(
      layout, k, [&](int j, int i) { return window.u[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]; },
      [&](int j, int i) { return window.z[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(i)]; },
      [&](int j, int i) { return window.xi[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(i)]; }, ext, r_k,
      row);
  return row;
}

}  // namespace ksnarmax
