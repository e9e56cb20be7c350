#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "oracles.hpp"
#include "published.hpp"

#include "ksnarmax/data_gen.hpp"
#include "ksnarmax/errors.hpp"
#include "ksnarmax/narmax.hpp"

using namespace ksnarmax;
namespace fs = std::filesystem;

namespace {

constexpr int K = 5;

struct Synthetic {
  ObservationSeries u;
  ModelErrorSeries z;
  std::vector<Complex> xi;  // (T + 1) x K, row 0 unused
};

std::size_t start_step(const NarmaxOrders& o) { return static_cast<std::size_t>(std::max({o.p + 1, o.r, o.q + 1})); }

HistoryWindow history(const Synthetic& s, const std::vector<Complex>& z, const std::vector<Complex>& xi,
                      const NarmaxOrders& o, std::size_t t, TruncatedModel& model) {
  HistoryWindow w;
  for (int j = 0; j < o.r; ++j) {
    const auto st = s.u.state(t - 1 - static_cast<std::size_t>(j));
    w.u.emplace_back(st.begin(), st.end());
  }
  auto lag = [&](const std::vector<Complex>& v, std::size_t n) {
    return std::vector<Complex>(v.begin() + static_cast<std::ptrdiff_t>(n * K),
                                v.begin() + static_cast<std::ptrdiff_t>((n + 1) * K));
  };
  for (int j = 1; j <= o.p; ++j) w.z.push_back(lag(z, t - static_cast<std::size_t>(j)));
  for (int j = 1; j <= o.q; ++j) w.xi.push_back(lag(xi, t - static_cast<std::size_t>(j)));
  w.r_delta.resize(K);
  model.increment(s.u.state(t - 1), s.u.delta(), w.r_delta);
  return w;
}

/// z^t = Phi^t(theta*) + xi^t over random inputs u; z is arbitrary before the first modelled step.
Synthetic make_synthetic(const NarmaxParams& truth, std::size_t steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SeriesMeta meta;
  meta.period = truth.period;
  Synthetic s{ObservationSeries(K, truth.delta, oracle::random_modes(rng, (steps + 1) * K, 0.5), meta), {}, {}};
  std::vector<Complex> z((steps + 1) * K), xi((steps + 1) * K);
  TruncatedModel model(truth.period, K);
  std::normal_distribution<double> g;
  const std::size_t t0 = start_step(truth.orders);
  for (std::size_t t = 1; t <= steps; ++t) {
    if (t < t0) {
      for (int i = 0; i < K; ++i) z[t * K + i] = {0.1 * g(rng), 0.1 * g(rng)};
      continue;
    }
    const HistoryWindow w = history(s, z, xi, truth.orders, t, model);
    for (int k = 1; k <= K; ++k) {
      const RegressorRow row = build_regressors(w, truth.orders, k, truth.ansatz);
      Complex phi{};
      const auto& th = truth.theta[static_cast<std::size_t>(k - 1)];
      for (std::size_t j = 0; j < row.size(); ++j) phi += th[j] * row[j];
      const double sd = std::sqrt(truth.sigma2[static_cast<std::size_t>(k - 1)]);
      const Complex e{sd * g(rng), sd * g(rng)};
      xi[t * K + static_cast<std::size_t>(k - 1)] = e;
      z[t * K + static_cast<std::size_t>(k - 1)] = phi + e;
    }
  }
  s.z = ModelErrorSeries(K, truth.delta, std::vector<Complex>(z.begin() + K, z.end()));
  s.xi = std::move(xi);
  return s;
}

NarmaxParams random_params(const NarmaxOrders& o, Ansatz a, double sigma2, std::uint64_t seed) {
  NarmaxParams p = NarmaxParams::zeros(o, a, K, 0.1, paper_period());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const RegressorLayout l = p.layout();
  for (auto& th : p.theta) {
    for (auto& x : th) x = u(rng);
    for (int j = 0; j < o.p; ++j) th[l.a_offset() + static_cast<std::size_t>(j)] *= 0.5;
    for (int j = 0; j < o.q; ++j) th[l.d_offset() + static_cast<std::size_t>(j)] = 0.6 / (j + 1);
  }
  std::fill(p.sigma2.begin(), p.sigma2.end(), sigma2);
  return p;
}

/// Asymptotic standard errors of the stacked real least-squares problem for mode k.
std::vector<double> ls_standard_errors(const Synthetic& s, const NarmaxParams& truth, int k) {
  const NarmaxOrders& o = truth.orders;
  const std::size_t t0 = start_step(o), steps = s.z.size();
  const std::size_t p = truth.layout().size();
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  std::vector<Complex> z((steps + 1) * K);
  for (std::size_t t = 1; t <= steps; ++t) std::copy(s.z.at(t).begin(), s.z.at(t).end(), z.begin() + static_cast<std::ptrdiff_t>(t * K));
  TruncatedModel model(truth.period, K);
  Eigen::VectorXd re(static_cast<Eigen::Index>(p)), im(static_cast<Eigen::Index>(p));
  for (std::size_t t = t0; t <= steps; ++t) {
    const RegressorRow row = build_regressors(history(s, z, s.xi, o, t, model), o, k, truth.ansatz);
    for (std::size_t j = 0; j < p; ++j) {
      re(static_cast<Eigen::Index>(j)) = row[j].real();
      im(static_cast<Eigen::Index>(j)) = row[j].imag();
    }
    xtx += re * re.transpose() + im * im.transpose();
  }
  const Eigen::MatrixXd cov = truth.sigma2[static_cast<std::size_t>(k - 1)] * xtx.inverse();
  std::vector<double> se(p);
  for (std::size_t j = 0; j < p; ++j) se[j] = std::sqrt(cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
  return se;
}

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ksnarmax-test-narmax";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("first modelled step") {
  CHECK(first_modelled_step({0, 1, 0}) == 1);
  CHECK(first_modelled_step({0, 2, 1}) == 2);
  CHECK(first_modelled_step({2, 1, 0}) == 3);
  CHECK(first_modelled_step({0, 3, 0}) == 3);
  CHECK(first_modelled_step({1, 1, 2}) == 3);
}

TEST_CASE("parameter accessors follow the layout") {
  NarmaxParams p = NarmaxParams::zeros({1, 2, 1}, Ansatz::narmax, K, 0.1, paper_period());
  auto& th = p.theta[2];
  for (std::size_t j = 0; j < th.size(); ++j) th[j] = static_cast<double>(j);
  CHECK(p.mu(3) == 0);
  CHECK(p.a(3, 1) == 1);
  CHECK(p.b(3, 0) == 2);
  CHECK(p.b(3, 1) == 3);
  CHECK(p.c(3, 1) == 4);
  CHECK(p.c(3, 6) == 9);
  CHECK(p.d(3, 1) == 10);
  CHECK_NOTHROW(p.validate(true));
  CHECK_THROWS_AS(p.validate(), ArgumentError);
  p.theta[0].pop_back();
  CHECK_THROWS_AS(p.validate(true), ArgumentError);
}

TEST_CASE("likelihood of a perfect fit with unit variance is zero") {
  const NarmaxParams truth = random_params({0, 2, 0}, Ansatz::narmax, 0.0, 1);
  const Synthetic s = make_synthetic(truth, 200, 2);
  NarmaxParams p = truth;
  std::fill(p.sigma2.begin(), p.sigma2.end(), 1.0);
  CHECK(std::abs(neg_log_likelihood(p, s.u, s.z)) < 1e-20);
  std::fill(p.sigma2.begin(), p.sigma2.end(), 0.0);
  CHECK_THROWS_AS(neg_log_likelihood(p, s.u, s.z), DomainError);
}

TEST_CASE("quadratic part scales with the square of the residuals") {
  NarmaxParams truth = random_params({0, 1, 0}, Ansatz::narmax, 1e-2, 3);
  const Synthetic s = make_synthetic(truth, 300, 4);
  // With theta = 0 the residuals are z itself; doubling z quadruples S.
  NarmaxParams zero = NarmaxParams::zeros(truth.orders, truth.ansatz, K, 0.1, paper_period());
  std::fill(zero.sigma2.begin(), zero.sigma2.end(), 1.0);
  std::vector<Complex> z2(s.z.values());
  for (auto& x : z2) x *= 2.0;
  const double a = neg_log_likelihood(zero, s.u, s.z);
  const double b = neg_log_likelihood(zero, s.u, ModelErrorSeries(K, 0.1, z2));
  CHECK(b == doctest::Approx(4 * a).epsilon(1e-12));
}

TEST_CASE("likelihood matches a non-recursive evaluation") {
  const NarmaxOrders o{1, 2, 1};
  NarmaxParams truth = random_params(o, Ansatz::narmax, 4e-3, 5);
  const Synthetic s = make_synthetic(truth, 100, 6);
  NarmaxParams p = truth;
  for (std::size_t k = 0; k < K; ++k) {
    p.theta[k][p.layout().d_offset()] = -0.8 + 0.3 * static_cast<double>(k);
    p.sigma2[k] = 1e-3 * static_cast<double>(k + 1);
  }
  // xi^t = sum_{i=0}^{t-t0} (-d)^i e^{t-i}, with e^t the residual of every term but the MA one.
  const std::size_t t0 = start_step(o), steps = s.z.size();
  std::vector<Complex> z((steps + 1) * K), no_xi((steps + 1) * K);
  for (std::size_t t = 1; t <= steps; ++t) std::copy(s.z.at(t).begin(), s.z.at(t).end(), z.begin() + static_cast<std::ptrdiff_t>(t * K));
  TruncatedModel model(paper_period(), K);
  double want = 0.0;
  for (int k = 1; k <= K; ++k) {
    const auto& th = p.theta[static_cast<std::size_t>(k - 1)];
    const double d = th[p.layout().d_offset()];
    std::vector<Complex> e(steps + 1);
    for (std::size_t t = t0; t <= steps; ++t) {
      const RegressorRow row = build_regressors(history(s, z, no_xi, o, t, model), o, k);
      Complex phi{};
      for (std::size_t j = 0; j < row.size(); ++j) phi += th[j] * row[j];
      e[t] = z[t * K + static_cast<std::size_t>(k - 1)] - phi;
    }
    double sum = 0.0;
    for (std::size_t t = t0; t <= steps; ++t) {
      Complex xi{};
      for (std::size_t i = 0; i <= t - t0; ++i) xi += std::pow(-d, static_cast<double>(i)) * e[t - i];
      sum += std::norm(xi);
    }
    const double s2 = p.sigma2[static_cast<std::size_t>(k - 1)];
    want += sum / (2 * s2) + static_cast<double>(steps - t0 + 1) * std::log(s2);
  }
  CHECK(neg_log_likelihood(p, s.u, s.z) == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("least squares recovers noiseless parameters") {
  for (const NarmaxOrders o : {NarmaxOrders{0, 2, 0}, NarmaxOrders{1, 2, 0}, NarmaxOrders{2, 1, 0}}) {
    for (Ansatz a : {Ansatz::narmax, Ansatz::armax}) {
      const NarmaxParams truth = random_params(o, a, 0.0, 7);
      const Synthetic s = make_synthetic(truth, 2000, 8);
      const NarmaxParams fit = fit_ls(s.u, s.z, o, a);
      CHECK_FALSE(fit.diagnostics.rank_deficient);
      for (int k = 0; k < K; ++k) {
        for (std::size_t j = 0; j < fit.theta[k].size(); ++j) CHECK(std::abs(fit.theta[k][j] - truth.theta[k][j]) < 1e-8);
      }
    }
  }
}

TEST_CASE("least squares recovers noisy parameters within three standard errors") {
  const NarmaxOrders o{1, 2, 0};
  const NarmaxParams truth = random_params(o, Ansatz::narmax, 1e-4, 9);
  const Synthetic s = make_synthetic(truth, 100000, 10);
  const NarmaxParams fit = fit_ls(s.u, s.z, o);
  for (int k = 1; k <= K; ++k) {
    const auto se = ls_standard_errors(s, truth, k);
    for (std::size_t j = 0; j < se.size(); ++j) {
      CAPTURE(k);
      CAPTURE(j);
      CHECK(std::abs(fit.theta[k - 1][j] - truth.theta[k - 1][j]) <= 3 * se[j]);
    }
    CHECK(fit.sigma2[k - 1] == doctest::Approx(1e-4).epsilon(0.02));
  }
}

TEST_CASE("variance estimate is the mean squared residual part") {
  const NarmaxParams truth = random_params({0, 2, 0}, Ansatz::narmax, 1e-3, 11);
  const Synthetic s = make_synthetic(truth, 500, 12);
  const NarmaxParams fit = fit_ls(s.u, s.z, truth.orders);
  const auto xi = innovations(fit, s.u, s.z);
  for (int k = 0; k < K; ++k) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = start_step(truth.orders); t <= s.z.size(); ++t, ++n) sum += std::norm(xi[(t - 1) * K + k]);
    CHECK(fit.sigma2[k] == doctest::Approx(sum / (2.0 * static_cast<double>(n))).epsilon(1e-12));
  }
}

TEST_CASE("least squares is the minimiser of the residual sum") {
  const NarmaxParams truth = random_params({0, 2, 0}, Ansatz::narmax, 1e-3, 13);
  const Synthetic s = make_synthetic(truth, 400, 14);
  const NarmaxParams fit = fit_ls(s.u, s.z, truth.orders);
  const double best = neg_log_likelihood(fit, s.u, s.z);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1e-3);
  for (int trial = 0; trial < 10; ++trial) {
    NarmaxParams p = fit;
    for (auto& th : p.theta) {
      for (auto& x : th) x += g(rng);
    }
    CHECK(neg_log_likelihood(p, s.u, s.z) > best);
  }
}

TEST_CASE("fitters check their orders") {
  const NarmaxParams truth = random_params({0, 2, 1}, Ansatz::narmax, 1e-3, 15);
  const Synthetic s = make_synthetic(truth, 100, 16);
  CHECK_THROWS_AS(fit_ls(s.u, s.z, {0, 2, 1}), ArgumentError);
  CHECK_THROWS_AS(fit_mle(s.u, s.z, {0, 2, 0}), ArgumentError);
  CHECK_THROWS_AS(fit_ls(s.u.slice(0, 3), ModelErrorSeries(K, 0.1, std::vector<Complex>(2 * K)), {0, 2, 0}),
                  ArgumentError);
}

TEST_CASE("maximum likelihood with a vanishing moving-average part agrees with least squares") {
  const NarmaxParams truth = random_params({0, 2, 0}, Ansatz::narmax, 0.0, 17);
  const Synthetic s = make_synthetic(truth, 3000, 18);
  const NarmaxParams ls = fit_ls(s.u, s.z, {0, 2, 0});
  const NarmaxParams ml = fit_mle(s.u, s.z, {0, 2, 1});
  for (int k = 0; k < K; ++k) {
    // d itself is not identified when every residual vanishes.
    for (std::size_t j = 0; j < ls.theta[k].size(); ++j) CHECK(std::abs(ml.theta[k][j] - ls.theta[k][j]) < 1e-6);
    CHECK(ml.sigma2[k] < 1e-20);
  }
}

TEST_CASE("maximum likelihood recovers a moving-average model") {
  const NarmaxOrders o{0, 2, 1};
  NarmaxParams truth = random_params(o, Ansatz::narmax, 1e-4, 19);
  for (std::size_t k = 0; k < K; ++k) truth.theta[k][truth.layout().d_offset()] = 0.5 + 0.1 * static_cast<double>(k);
  const Synthetic s = make_synthetic(truth, 20000, 20);
  const NarmaxParams fit = fit_mle(s.u, s.z, o);
  CHECK(fit.diagnostics.converged);
  for (int k = 1; k <= K; ++k) CHECK(std::abs(fit.d(k, 1) - truth.d(k, 1)) < 0.05);
  // The estimate cannot be worse than the truth under its own criterion.
  NarmaxParams at_truth = truth;
  at_truth.sigma2 = fit.sigma2;
  CHECK(neg_log_likelihood(fit, s.u, s.z) <= neg_log_likelihood(at_truth, s.u, s.z));
  for (int k = 1; k <= K; ++k) CHECK(fit.sigma2[k - 1] == doctest::Approx(1e-4).epsilon(0.05));
}

TEST_CASE("zero model reproduces the truncated map") {
  std::mt19937_64 rng(21);
  const NarmaxParams zero = NarmaxParams::zeros({0, 1, 0}, Ansatz::narmax, K, 0.1, paper_period());
  const ObservationSeries window(K, 0.1, oracle::random_modes(rng, 3 * K, 0.3));
  const SimulationResult res = simulate(zero, window, 200, 1);
  REQUIRE(res.stable());
  REQUIRE(res.steps() == 200);
  TruncatedModel model(paper_period(), K);
  ReducedState s{{window.state(2).begin(), window.state(2).end()}};
  for (std::size_t n = 0; n < 200; ++n) {
    s = model.rdelta_step(s, 0.1);
    for (int i = 0; i < K; ++i) CHECK(std::abs(res.states[n * K + i] - s.u[i]) <= 1e-13 * (1 + std::abs(s.u[i])));
  }
  CHECK(res.as_series().meta().period == paper_period());
}

TEST_CASE("simulation is reproducible per seed") {
  std::mt19937_64 rng(22);
  const NarmaxParams p = random_params({0, 2, 1}, Ansatz::armax, 1e-4, 23);
  const ObservationSeries window(K, 0.1, oracle::random_modes(rng, 5 * K, 0.3));
  const SimulationResult a = simulate(p, window, 300, 42);
  const SimulationResult b = simulate(p, window, 300, 42);
  const SimulationResult c = simulate(p, window, 300, 43);
  CHECK(a.states == b.states);
  CHECK(a.states != c.states);
  CHECK_THROWS_AS(simulate(p, window.slice(0, 4), 10, 1), ArgumentError);
}

TEST_CASE("simulated noise is what the estimator sees") {
  // A damped ARMAX model driven by noise: the innovations recovered from the
  // simulated path are the drawn noise, so their variance matches sigma^2.
  NarmaxParams p = NarmaxParams::zeros({0, 1, 0}, Ansatz::armax, K, 0.1, paper_period());
  for (int k = 0; k < K; ++k) {
    p.theta[k][1] = -1.0;
    p.sigma2[k] = 1e-3;
  }
  std::mt19937_64 rng(24);
  const ObservationSeries window(K, 0.1, oracle::random_modes(rng, 3 * K, 0.1), SeriesMeta{paper_period(), 0, 0, 0, "", ""});
  const SimulationResult res = simulate(p, window, 20000, 5);
  REQUIRE(res.stable());
  const ObservationSeries path = res.as_series();
  const auto xi = innovations(p, path, extract_model_error(path));
  for (int k = 0; k < K; ++k) {
    double s = 0.0;
    for (std::size_t t = 1; t <= path.transitions(); ++t) s += std::norm(xi[(t - 1) * K + k]);
    CHECK(s / (2.0 * static_cast<double>(path.transitions())) == doctest::Approx(1e-3).epsilon(0.03));
  }
  const NarmaxParams fit = fit_ls(path, extract_model_error(path), p.orders, p.ansatz);
  for (int k = 1; k <= K; ++k) CHECK(fit.b(k, 0) == doctest::Approx(-1.0).epsilon(0.02));
}

TEST_CASE("blow-ups are detected") {
  std::mt19937_64 rng(25);
  NarmaxParams p = NarmaxParams::zeros({0, 1, 0}, Ansatz::armax, K, 0.1, paper_period());
  for (int k = 0; k < K; ++k) p.theta[k][1] = 30.0;
  const ObservationSeries window(K, 0.1, oracle::random_modes(rng, 3 * K, 0.3));
  const SimulationResult res = simulate(p, window, 1000, 1);
  CHECK_FALSE(res.stable());
  REQUIRE(res.unstable_step.has_value());
  CHECK(res.steps() == *res.unstable_step - 1);
}

TEST_CASE("published (0,2,1) coefficients give a bounded long run") {
  const NarmaxParams p = published::model_021();
  FullModelConfig cfg;
  cfg.transient = 100.0;
  cfg.duration = 1.0;
  const ObservationSeries data = run_full(cfg);
  const SimulationResult res = simulate(p, data.slice(0, 5), 500000, 7);
  REQUIRE(res.stable());
  double peak = 0.0;
  for (const auto& x : res.states) peak = std::max(peak, std::abs(x));
  CHECK(peak < 1e2);
}

TEST_CASE("model files round trip") {
  const NarmaxParams p = random_params({0, 2, 1}, Ansatz::narmax, 1e-4, 26);
  const fs::path path = temp_path("model.json");
  save(p, path);
  CHECK(load_model(path) == p);
  const nlohmann::json j = to_json(p);
  CHECK(j.at("modes").size() == K);
  const auto& m = j.at("modes").at(0);
  CHECK(1 + m.at("a").size() + m.at("b").size() + m.at("c").size() + m.at("d").size() == 10);
  nlohmann::json bad = j;
  bad["format"] = "other";
  CHECK_THROWS_AS(params_from_json(bad), FormatError);
  bad = j;
  bad["modes"].erase(0);
  CHECK_THROWS_AS(params_from_json(bad), FormatError);
  std::ofstream(temp_path("broken.json")) << "{not json";
  CHECK_THROWS_AS(load_model(temp_path("broken.json")), FormatError);
}

TEST_CASE("order scan on a synthetic damped system") {
  NarmaxParams p = NarmaxParams::zeros({0, 2, 0}, Ansatz::narmax, K, 0.1, paper_period());
  for (int k = 0; k < K; ++k) {
    p.theta[k][1] = -1.0;
    p.sigma2[k] = 1e-3;
  }
  std::mt19937_64 rng(27);
  const ObservationSeries window(K, 0.1, oracle::random_modes(rng, 5 * K, 0.1), SeriesMeta{paper_period(), 0, 0, 0, "", ""});
  const ObservationSeries path = simulate(p, window, 6000, 3).as_series();
  ScanOptions o;
  o.grid = {{0, 1, 0}, {0, 2, 0}, {0, 2, 1}};
  o.stability_start = 100;
  o.stability_steps = 2000;
  o.acf.pieces = 5;
  o.acf.piece_length = 800;
  const ScanReport rep = scan_orders(path, extract_model_error(path), o);
  REQUIRE(rep.cells.size() == 3);
  for (const auto& c : rep.cells) {
    CAPTURE(c.orders.label());
    for (int k = 1; k <= K && c.orders.q == 1; ++k) CHECK(std::abs(c.params.d(k, 1)) < 1.0);
    CAPTURE(c.unstable_step.value_or(0));
    CHECK(c.stable);
  }
  REQUIRE(rep.selected.has_value());
  CHECK(default_order_grid().size() == 12);
}
