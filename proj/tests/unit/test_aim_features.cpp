#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "ksnarmax/aim_features.hpp"
#include "ksnarmax/errors.hpp"

using namespace ksnarmax;

namespace {

constexpr int K = 5;

// u~_j = i sum over pairs (l, j - l) of resolved modes, with u_{-l} = conj(u_l).
std::vector<Complex> extend_oracle(const std::vector<Complex>& u) {
  const int k = static_cast<int>(u.size());
  std::vector<Complex> half(u.size() + 1);
  std::copy(u.begin(), u.end(), half.begin() + 1);
  std::vector<Complex> out(u);
  for (int j = k + 1; j <= 2 * k; ++j) {
    Complex s{};
    for (int l = -k; l <= k; ++l) s += oracle::mode(half, l, k) * oracle::mode(half, j - l, k);
    out.push_back(Complex{0, 1} * s);
  }
  return out;
}

HistoryWindow random_window(std::mt19937_64& rng, const NarmaxOrders& o) {
  HistoryWindow w;
  for (int j = 0; j < o.r; ++j) w.u.push_back(oracle::random_modes(rng, K));
  for (int j = 0; j < o.p; ++j) w.z.push_back(oracle::random_modes(rng, K));
  for (int j = 0; j < o.q; ++j) w.xi.push_back(oracle::random_modes(rng, K));
  w.r_delta = oracle::random_modes(rng, K);
  return w;
}

}  // namespace

TEST_CASE("extended modes of zero are zero") {
  const ExtendedModes e = extend_modes(ReducedState{std::vector<Complex>(K)});
  CHECK(e.modes() == K);
  for (const auto& x : e.values) CHECK(x == Complex{});
}

TEST_CASE("extended modes worked example") {
  std::vector<Complex> u(K);
  u[0] = 1.0;
  u[4] = 1.0;
  const ExtendedModes e = extend_modes(ReducedState{u});
  CHECK(e(6) == Complex{0, 2});
  CHECK(e(7) == Complex{});
  CHECK(e(8) == Complex{});
  CHECK(e(9) == Complex{});
  CHECK(e(10) == Complex{0, 1});
  CHECK(e(-6) == Complex{0, -2});
  CHECK(e(1) == Complex{1, 0});
}

TEST_CASE("extended modes match an independent loop") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto u = oracle::random_modes(rng, K);
    const ExtendedModes e = extend_modes(ReducedState{u});
    const auto want = extend_oracle(u);
    for (int j = 1; j <= 2 * K; ++j) CHECK(std::abs(e(j) - want[static_cast<std::size_t>(j - 1)]) <= 1e-14 * (1 + std::abs(want[static_cast<std::size_t>(j - 1)])));
  }
}

TEST_CASE("extended modes scale linearly then quadratically") {
  std::mt19937_64 rng(2);
  const auto u = oracle::random_modes(rng, K);
  const double a = 0.5;  // a power of two keeps the scaling exact
  std::vector<Complex> au(u);
  for (auto& x : au) x *= a;
  const ExtendedModes e = extend_modes(ReducedState{u});
  const ExtendedModes ea = extend_modes(ReducedState{au});
  for (int j = 1; j <= K; ++j) CHECK(ea(j) == a * e(j));
  for (int j = K + 1; j <= 2 * K; ++j) CHECK(ea(j) == a * a * e(j));
}

TEST_CASE("orders") {
  const NarmaxOrders o = NarmaxOrders::parse("0,2,1");
  CHECK(o == NarmaxOrders{0, 2, 1});
  CHECK(NarmaxOrders::parse("021") == o);
  CHECK(o.label() == "021");
  CHECK(o.max_lag() == 2);
  CHECK(o.window() == 5);
  CHECK(NarmaxOrders{0, 1, 0}.window() == 3);
  CHECK_THROWS_AS(NarmaxOrders::parse("0,0,1"), ArgumentError);
  CHECK_THROWS_AS(NarmaxOrders::parse("9,1,0"), ArgumentError);
  CHECK_THROWS_AS(NarmaxOrders::parse("0,2"), ArgumentError);
  CHECK_THROWS_AS(NarmaxOrders::parse("a,b,c"), ArgumentError);
  CHECK(parse_ansatz("armax") == Ansatz::armax);
  CHECK_THROWS_AS(parse_ansatz("arma"), ArgumentError);
}

TEST_CASE("row length matches the parameter table") {
  const RegressorLayout l{{0, 2, 1}, K, Ansatz::narmax};
  CHECK(l.size() == 10);
  CHECK(l.b_offset() == 1);
  CHECK(l.c_offset() == 3);
  CHECK(l.d_offset() == 9);
  CHECK(RegressorLayout{{2, 1, 0}, K, Ansatz::armax}.size() == 4);
}

TEST_CASE("all-zero history gives the intercept only") {
  const NarmaxOrders o{1, 2, 1};
  HistoryWindow w;
  w.u.assign(2, std::vector<Complex>(K));
  w.z.assign(1, std::vector<Complex>(K));
  w.xi.assign(1, std::vector<Complex>(K));
  w.r_delta.assign(K, Complex{});
  const RegressorRow row = build_regressors(w, o, 3);
  REQUIRE(row.size() == RegressorLayout{o, K, Ansatz::narmax}.size());
  CHECK(row[0] == Complex{1, 0});
  for (std::size_t i = 1; i < row.size(); ++i) CHECK(row[i] == Complex{});
}

TEST_CASE("row terms by direct substitution") {
  std::mt19937_64 rng(23);
  const NarmaxOrders o{2, 2, 2};
  const HistoryWindow w = random_window(rng, o);
  const ExtendedModes e = extend_modes(ReducedState{w.u[0]});
  for (int k = 1; k <= K; ++k) {
    const RegressorRow row = build_regressors(w, o, k);
    const auto i = static_cast<std::size_t>(k - 1);
    std::size_t pos = 0;
    CHECK(row[pos++] == Complex{1, 0});
    CHECK(row[pos++] == w.z[0][i]);
    CHECK(row[pos++] == w.z[1][i]);
    CHECK(row[pos++] == w.u[0][i]);
    CHECK(row[pos++] == w.u[1][i]);
    for (int j = 1; j <= K; ++j) {
      // The pair (j + K, k - j - K) has wavenumbers summing to k.
      const Complex want = e(j + K) * e(k - j - K);
      CHECK(std::abs(row[pos++] - want) <= 1e-14 * (1 + std::abs(want)));
    }
    CHECK(row[pos++] == w.r_delta[i]);
    CHECK(row[pos++] == w.xi[0][i]);
    CHECK(row[pos++] == w.xi[1][i]);
    CHECK(pos == row.size());
  }
}

TEST_CASE("quadratic regressors of mode k rotate like mode k") {
  std::mt19937_64 rng(31);
  const NarmaxOrders o{0, 1, 0};
  HistoryWindow w = random_window(rng, o);
  HistoryWindow shifted = w;
  const double phi = 0.7;
  for (int l = 1; l <= K; ++l) shifted.u[0][static_cast<std::size_t>(l - 1)] *= std::polar(1.0, l * phi);
  for (int k = 1; k <= K; ++k) {
    const RegressorRow a = build_regressors(w, o, k);
    const RegressorRow b = build_regressors(shifted, o, k);
    const std::size_t c0 = RegressorLayout{o, K, Ansatz::narmax}.c_offset();
    for (std::size_t j = 0; j < K; ++j) {
      CHECK(std::abs(b[c0 + j] - a[c0 + j] * std::polar(1.0, k * phi)) <= 1e-12 * (1 + std::abs(a[c0 + j])));
    }
  }
}

TEST_CASE("armax rows drop the quadratic and R terms") {
  std::mt19937_64 rng(3);
  const NarmaxOrders o{2, 1, 0};
  HistoryWindow w = random_window(rng, o);
  w.r_delta.clear();
  const RegressorRow row = build_regressors(w, o, 2, Ansatz::armax);
  CHECK(row.size() == 4);
  CHECK(row[3] == w.u[0][1]);
  CHECK_THROWS_AS(build_regressors(w, o, 2, Ansatz::narmax), ArgumentError);
}

TEST_CASE("missing lags are named") {
  std::mt19937_64 rng(5);
  HistoryWindow w = random_window(rng, {0, 2, 1});
  w.xi.clear();
  try {
    build_regressors(w, {0, 2, 1}, 1);
    FAIL("expected an error");
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("xi") != std::string::npos);
  }
  CHECK_THROWS_AS(build_regressors(w, {0, 2, 0}, 6), ArgumentError);
}

TEST_CASE("the functional is linear in theta") {
  std::mt19937_64 rng(41);
  const NarmaxOrders o{1, 2, 1};
  const HistoryWindow w = random_window(rng, o);
  const RegressorRow row = build_regressors(w, o, 4);
  std::normal_distribution<double> g;
  std::vector<double> t1(row.size()), t2(row.size());
  for (auto& x : t1) x = g(rng);
  for (auto& x : t2) x = g(rng);
  auto phi = [&](const std::vector<double>& t) {
    Complex s{};
    for (std::size_t i = 0; i < row.size(); ++i) s += t[i] * row[i];
    return s;
  };
  std::vector<double> sum(row.size());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = t1[i] + t2[i];
  CHECK(std::abs(phi(sum) - (phi(t1) + phi(t2))) < 1e-12);
}
