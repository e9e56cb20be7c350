#include "ksnarmax/narmax.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "ksnarmax/errors.hpp"

namespace ksnarmax {

namespace {

constexpr int kModelFormatVersion = 1;

bool finite(Complex c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); }

// Everything the regressor rows of a fit need, precomputed once per series.
class Design {
 public:
  Design(const ObservationSeries& series, const ModelErrorSeries& z, const RegressorLayout& layout)
      : series_(series), z_(z), layout_(layout), k_(static_cast<std::size_t>(series.modes())) {
    if (z.modes() != series.modes()) throw ArgumentError("fit: series and model error have different K");
    if (z.size() != series.transitions()) throw ArgumentError("fit: model error length does not match the series");
    if (std::abs(z.delta() - series.delta()) > 1e-12 * series.delta()) throw ArgumentError("fit: delta mismatch");
    t0_ = first_modelled_step(layout.orders);
    last_ = z.size();
    if (last_ < t0_ || 2 * (last_ - t0_ + 1) < layout.size()) {
      throw ArgumentError("fit: series too short for orders " + layout.orders.label());
    }
    if (layout.ansatz == Ansatz::narmax) {
      TruncatedModel model(series.meta().period > 0.0 ? series.meta().period : paper_period(), series.modes());
      rdelta_.resize(last_ * k_);
      for (std::size_t n = 0; n < last_; ++n) {
        model.increment(series.state(n), series.delta(), std::span<Complex>(rdelta_.data() + n * k_, k_));
      }
    }
    ext_.resize(2 * k_);
  }

  std::size_t first() const noexcept { return t0_; }
  std::size_t last() const noexcept { return last_; }
  std::size_t rows() const noexcept { return last_ - t0_ + 1; }
  const RegressorLayout& layout() const noexcept { return layout_; }
  Complex z(std::size_t t, int k) const { return z_.at(t)[static_cast<std::size_t>(k - 1)]; }

  // Row modelling z_k^t; xi[t'] holds xi_k^{t'} (index 0 unused).
  void row(int k, std::size_t t, const std::vector<Complex>& xi, std::span<Complex> out) {
    const auto u_prev = series_.state(t - 1);
    Complex r_k{};
    if (layout_.ansatz == Ansatz::narmax) {
      extend_modes(u_prev, ext_);
      r_k = rdelta_[(t - 1) * k_ + static_cast<std::size_t>(k - 1)];
    }
    fill_regressors(
        layout_, k, [&](int j, int i) { return series_.at(t - 1 - static_cast<std::size_t>(j), i + 1); },
        [&](int j, int i) { return z_.at(t - static_cast<std::size_t>(j))[static_cast<std::size_t>(i)]; },
        [&](int j, int) { return xi[t - static_cast<std::size_t>(j)]; }, ext_, r_k, out);
  }

 private:
  const ObservationSeries& series_;
  const ModelErrorSeries& z_;
  RegressorLayout layout_;
  std::size_t k_;
  std::size_t t0_ = 0;
  std::size_t last_ = 0;
  std::vector<Complex> rdelta_;
  std::vector<Complex> ext_;
};

Complex dot(const std::vector<double>& theta, std::span<const Complex> row) {
  Complex s{};
  for (std::size_t j = 0; j < theta.size(); ++j) s += theta[j] * row[j];
  return s;
}

// xi_k^t = z_k^t - Phi_k^t for t = t0..T, recursively; zero before t0.
std::vector<Complex> filter_mode(Design& design, int k, const std::vector<double>& theta) {
  std::vector<Complex> xi(design.last() + 1, Complex{});
  std::vector<Complex> row(design.layout().size());
  for (std::size_t t = design.first(); t <= design.last(); ++t) {
    design.row(k, t, xi, row);
    xi[t] = design.z(t, k) - dot(theta, row);
  }
  return xi;
}

// Streaming QR of a tall least-squares problem: rows are appended in blocks and
// folded into a running triangular factor.
class QrAccumulator {
 public:
  QrAccumulator(Eigen::Index cols, Eigen::Index chunk = 4096)
      : p_(cols), block_(Eigen::MatrixXd::Zero(cols + chunk, cols)), rhs_(Eigen::VectorXd::Zero(cols + chunk)),
        rows_(cols) {}

  void add(const double* a, double b) {
    for (Eigen::Index j = 0; j < p_; ++j) block_(rows_, j) = a[j];
    rhs_(rows_) = b;
    if (++rows_ == block_.rows()) fold();
  }

  // Returns (R, Q^T b) restricted to the first p rows.
  std::pair<Eigen::MatrixXd, Eigen::VectorXd> finish() {
    fold();
    return {block_.topRows(p_), rhs_.head(p_)};
  }

 private:
  void fold() {
    if (rows_ == p_) return;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(block_.topRows(rows_));
    const Eigen::VectorXd qtb = qr.householderQ().adjoint() * rhs_.head(rows_);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(p_).triangularView<Eigen::Upper>();
    block_.setZero();
    rhs_.setZero();
    block_.topRows(p_) = r;
    rhs_.head(p_) = qtb.head(p_);
    rows_ = p_;
  }

  Eigen::Index p_;
  Eigen::MatrixXd block_;
  Eigen::VectorXd rhs_;
  Eigen::Index rows_;
};

struct ModeSolution {
  std::vector<double> theta;
  bool rank_deficient = false;
};

// Least squares over equation pairs produced by `rows(emit)`, which calls
// emit(a, b) for every complex equation a . x = b. The real and imaginary parts
// are stacked. Columns are scaled to unit norm; a rank-deficient factor falls back
// to a ridge solve.
template <class Rows>
ModeSolution least_squares(std::size_t p, Rows&& rows) {
  std::vector<double> norm2(p, 0.0);
  rows([&](std::span<const Complex> a, Complex) {
    for (std::size_t j = 0; j < p; ++j) norm2[j] += std::norm(a[j]);
  });
  std::vector<double> scale(p);
  for (std::size_t j = 0; j < p; ++j) scale[j] = norm2[j] > 0.0 ? 1.0 / std::sqrt(norm2[j]) : 1.0;

  QrAccumulator acc(static_cast<Eigen::Index>(p));
  std::vector<double> re(p), im(p);
  rows([&](std::span<const Complex> a, Complex b) {
    for (std::size_t j = 0; j < p; ++j) {
      re[j] = a[j].real() * scale[j];
      im[j] = a[j].imag() * scale[j];
    }
    acc.add(re.data(), b.real());
    acc.add(im.data(), b.imag());
  });
  auto [r, c] = acc.finish();

  ModeSolution sol;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> cp(r);
  Eigen::VectorXd x;
  if (cp.rank() == r.cols()) {
    x = cp.solve(c);
  } else {
    sol.rank_deficient = true;
    const auto n = r.cols();
    const double lambda = 1e-10 * r.squaredNorm() / static_cast<double>(n);
    Eigen::MatrixXd m(2 * n, n);
    m << r, std::sqrt(lambda) * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs(2 * n);
    rhs << c, Eigen::VectorXd::Zero(n);
    x = m.colPivHouseholderQr().solve(rhs);
  }
  sol.theta.resize(p);
  for (std::size_t j = 0; j < p; ++j) sol.theta[j] = x(static_cast<Eigen::Index>(j)) * scale[j];
  return sol;
}

// Least squares for mode k with the xi lags taken from `xi`.
ModeSolution solve_mode(Design& design, int k, const std::vector<Complex>& xi) {
  std::vector<Complex> row(design.layout().size());
  return least_squares(row.size(), [&](auto&& emit) {
    for (std::size_t t = design.first(); t <= design.last(); ++t) {
      design.row(k, t, xi, row);
      emit(row, design.z(t, k));
    }
  });
}

// Gauss-Newton direction for S(theta) with the recursive residuals: the
// sensitivities obey J^t = -row^t - sum_i d_i J^{t-i}.
ModeSolution gauss_newton_step(Design& design, int k, const std::vector<double>& theta) {
  const RegressorLayout& lay = design.layout();
  const std::size_t p = lay.size();
  const auto q = static_cast<std::size_t>(lay.orders.q);
  std::vector<Complex> xi(design.last() + 1), row(p), jac((q + 1) * p);
  return least_squares(p, [&](auto&& emit) {
    std::fill(xi.begin(), xi.end(), Complex{});
    std::fill(jac.begin(), jac.end(), Complex{});
    for (std::size_t t = design.first(); t <= design.last(); ++t) {
      design.row(k, t, xi, row);
      xi[t] = design.z(t, k) - dot(theta, row);
      Complex* cur = jac.data() + (t % (q + 1)) * p;
      for (std::size_t j = 0; j < p; ++j) cur[j] = -row[j];
      for (std::size_t i = 1; i <= q && t - i >= design.first(); ++i) {
        const double d = theta[lay.d_offset() + i - 1];
        const Complex* prev = jac.data() + ((t - i) % (q + 1)) * p;
        for (std::size_t j = 0; j < p; ++j) cur[j] -= d * prev[j];
      }
      emit(std::span<const Complex>(cur, p), -xi[t]);
    }
  });
}

/// Roots of x^q + d_1 x^{q-1} + ... + d_q strictly inside the unit circle (Schur-Cohn step-down).
bool invertible(const std::vector<double>& theta, const RegressorLayout& lay) {
  const std::size_t q = static_cast<std::size_t>(lay.orders.q);
  std::vector<double> a(q + 1, 1.0);
  for (std::size_t j = 1; j <= q; ++j) a[j] = theta[lay.d_offset() + j - 1];
  for (std::size_t n = q; n >= 1; --n) {
    const double r = a[n];
    if (!(std::abs(r) < 1.0)) return false;
    std::vector<double> b(n);
    for (std::size_t j = 0; j < n; ++j) b[j] = (a[j] - r * a[n - j]) / (1.0 - r * r);
    a = std::move(b);
  }
  return true;
}

double residual_sum(const std::vector<Complex>& xi, std::size_t first) {
  double s = 0.0;
  for (std::size_t t = first; t < xi.size(); ++t) s += std::norm(xi[t]);
  return s;
}

NarmaxParams blank_params(const ObservationSeries& series, const NarmaxOrders& orders, Ansatz ansatz) {
  NarmaxParams p;
  p.orders = orders;
  p.ansatz = ansatz;
  p.modes = series.modes();
  p.delta = series.delta();
  p.period = series.meta().period > 0.0 ? series.meta().period : paper_period();
  p.training_provenance = series.meta().provenance;
  p.theta.resize(static_cast<std::size_t>(p.modes));
  p.sigma2.resize(static_cast<std::size_t>(p.modes));
  return p;
}

std::size_t shrink_spacing(std::size_t spacing, std::size_t count, std::size_t last_start) {
  if (count > 1 && (count - 1) * spacing > last_start) spacing = last_start / (count - 1);
  return spacing;
}

}  // namespace

NarmaxParams NarmaxParams::zeros(NarmaxOrders orders, Ansatz ansatz, int modes, double delta, double period) {
  orders.validate();
  NarmaxParams p;
  p.orders = orders;
  p.ansatz = ansatz;
  p.modes = modes;
  p.delta = delta;
  p.period = period;
  p.theta.assign(static_cast<std::size_t>(modes), std::vector<double>(p.layout().size(), 0.0));
  p.sigma2.assign(static_cast<std::size_t>(modes), 0.0);
  return p;
}

void NarmaxParams::validate(bool allow_zero_variance) const {
  orders.validate();
  if (modes < 1) throw ArgumentError("model: K must be positive");
  if (!(delta > 0.0) || !(period > 0.0)) throw ArgumentError("model: delta and L must be positive");
  if (theta.size() != static_cast<std::size_t>(modes) || sigma2.size() != static_cast<std::size_t>(modes)) {
    throw ArgumentError("model: expected one coefficient vector and variance per mode");
  }
  const std::size_t n = layout().size();
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (theta[k].size() != n) {
      throw ArgumentError("model: mode " + std::to_string(k + 1) + " has " + std::to_string(theta[k].size()) +
                          " coefficients, orders " + orders.label() + " need " + std::to_string(n));
    }
    for (double v : theta[k]) {
      if (!std::isfinite(v)) throw ArgumentError("model: non-finite coefficient");
    }
    const double s = sigma2[k];
    if (!std::isfinite(s) || s < 0.0 || (!allow_zero_variance && s == 0.0)) {
      throw ArgumentError("model: sigma^2 of mode " + std::to_string(k + 1) + " must be positive");
    }
  }
}

std::size_t first_modelled_step(const NarmaxOrders& orders) {
  return static_cast<std::size_t>(std::max({orders.p + 1, orders.r, orders.q + 1}));
}

std::vector<Complex> innovations(const NarmaxParams& params, const ObservationSeries& series,
                                 const ModelErrorSeries& z) {
  params.validate(true);
  if (params.modes != series.modes()) throw ArgumentError("innovations: K mismatch");
  Design design(series, z, params.layout());
  const auto k = static_cast<std::size_t>(params.modes);
  std::vector<Complex> out(z.size() * k, Complex{});
  for (int mode = 1; mode <= params.modes; ++mode) {
    const auto xi = filter_mode(design, mode, params.theta[static_cast<std::size_t>(mode - 1)]);
    for (std::size_t t = 1; t <= z.size(); ++t) out[(t - 1) * k + static_cast<std::size_t>(mode - 1)] = xi[t];
  }
  return out;
}

double neg_log_likelihood(const NarmaxParams& params, const ObservationSeries& series, const ModelErrorSeries& z) {
  for (double s : params.sigma2) {
    if (!(s > 0.0)) throw DomainError("neg_log_likelihood: sigma^2 must be positive");
  }
  params.validate();
  if (params.modes != series.modes()) throw ArgumentError("neg_log_likelihood: K mismatch");
  Design design(series, z, params.layout());
  const double n_eff = static_cast<double>(design.rows());
  double total = 0.0;
  for (int mode = 1; mode <= params.modes; ++mode) {
    const auto xi = filter_mode(design, mode, params.theta[static_cast<std::size_t>(mode - 1)]);
    const double s2 = params.sigma2[static_cast<std::size_t>(mode - 1)];
    total += residual_sum(xi, design.first()) / (2.0 * s2) + n_eff * std::log(s2);
  }
  return total;
}

NarmaxParams fit_ls(const ObservationSeries& series, const ModelErrorSeries& z, const NarmaxOrders& orders,
                    Ansatz ansatz) {
  orders.validate();
  if (orders.q != 0) throw ArgumentError("fit_ls: needs q = 0, use fit_mle for orders " + orders.label());
  NarmaxParams out = blank_params(series, orders, ansatz);
  Design design(series, z, out.layout());
  const std::vector<Complex> no_xi(design.last() + 1, Complex{});
  for (int k = 1; k <= out.modes; ++k) {
    const auto i = static_cast<std::size_t>(k - 1);
    ModeSolution sol = solve_mode(design, k, no_xi);
    out.diagnostics.rank_deficient = out.diagnostics.rank_deficient || sol.rank_deficient;
    out.theta[i] = std::move(sol.theta);
    const auto xi = filter_mode(design, k, out.theta[i]);
    out.sigma2[i] = residual_sum(xi, design.first()) / (2.0 * static_cast<double>(design.rows()));
  }
  out.diagnostics.samples = design.rows();
  out.diagnostics.iterations = 1;
  return out;
}

NarmaxParams fit_mle(const ObservationSeries& series, const ModelErrorSeries& z, const NarmaxOrders& orders,
                     Ansatz ansatz, const MleOptions& options) {
  orders.validate();
  if (orders.q < 1) throw ArgumentError("fit_mle: needs q >= 1, use fit_ls for orders " + orders.label());
  NarmaxParams out = blank_params(series, orders, ansatz);
  const NarmaxOrders base{orders.p, orders.r, 0};
  Design design0(series, z, RegressorLayout{base, out.modes, ansatz});
  Design design(series, z, out.layout());
  const std::size_t t0 = design.first();
  out.diagnostics.converged = true;

  for (int k = 1; k <= out.modes; ++k) {
    const auto i = static_cast<std::size_t>(k - 1);
    // Start from least squares with the q = 0 residuals standing in for the lagged noise.
    const std::vector<Complex> zero(design0.last() + 1, Complex{});
    const ModeSolution start = solve_mode(design0, k, zero);
    std::vector<Complex> proxy = filter_mode(design0, k, start.theta);
    std::fill(proxy.begin(), proxy.begin() + static_cast<std::ptrdiff_t>(t0), Complex{});
    ModeSolution init = solve_mode(design, k, proxy);
    out.diagnostics.rank_deficient = out.diagnostics.rank_deficient || start.rank_deficient || init.rank_deficient;

    std::vector<double> theta = std::move(init.theta);
    double s = residual_sum(filter_mode(design, k, theta), t0);
    if (!std::isfinite(s) || !invertible(theta, design.layout())) {
      // A non-invertible start; drop the moving-average part.
      for (int j = 0; j < orders.q; ++j) theta[design.layout().d_offset() + static_cast<std::size_t>(j)] = 0.0;
      s = residual_sum(filter_mode(design, k, theta), t0);
    }

    // Damped Gauss-Newton on S(theta). Steps that increase S or leave the
    // invertible region are halved.
    bool converged = false;
    int it = 0;
    while (it < options.max_iterations && !converged) {
      ++it;
      const double s_prev = s;
      const ModeSolution dir = gauss_newton_step(design, k, theta);
      std::vector<double> cand(theta.size());
      bool accepted = false;
      double change = 0.0;
      for (double alpha = 1.0; alpha > 1e-6; alpha *= 0.5) {
        change = 0.0;
        for (std::size_t j = 0; j < theta.size(); ++j) {
          cand[j] = theta[j] + alpha * dir.theta[j];
          change = std::max(change, std::abs(alpha * dir.theta[j]));
        }
        if (!invertible(cand, design.layout())) continue;
        const double sc = residual_sum(filter_mode(design, k, cand), t0);
        if (std::isfinite(sc) && sc <= s) {
          theta = cand;
          s = sc;
          accepted = true;
          break;
        }
      }
      // No downhill step left: S is at its minimum to working precision.
      double scale = 1.0;
      for (double v : theta) scale = std::max(scale, std::abs(v));
      converged = !accepted || change < options.tolerance * scale || s_prev - s <= 1e-13 * s_prev;
    }
    out.theta[i] = theta;
    out.sigma2[i] = s / (2.0 * static_cast<double>(design.rows()));
    out.diagnostics.converged = out.diagnostics.converged && converged;
    out.diagnostics.iterations = std::max(out.diagnostics.iterations, it);
  }
  out.diagnostics.samples = design.rows();
  return out;
}

NarmaxParams fit(const ObservationSeries& series, const ModelErrorSeries& z, const NarmaxOrders& orders,
                 Ansatz ansatz, const MleOptions& options) {
  return orders.q == 0 ? fit_ls(series, z, orders, ansatz) : fit_mle(series, z, orders, ansatz, options);
}

ObservationSeries SimulationResult::as_series() const {
  SeriesMeta meta;
  meta.period = period;
  meta.provenance = "reduced-model";
  return ObservationSeries(modes, delta, states, std::move(meta));
}

NarmaxSimulator::NarmaxSimulator(NarmaxParams params, SimulationOptions options)
    : params_(std::move(params)), options_(options), model_(params_.period, params_.modes) {
  params_.validate(true);
}

SimulationResult NarmaxSimulator::run(const ObservationSeries& window, std::size_t steps, std::uint64_t seed) {
  if (window.modes() != params_.modes) throw ArgumentError("simulate: K mismatch between model and window");
  return run(window.samples(), steps, seed);
}

SimulationResult NarmaxSimulator::run(std::span<const Complex> window, std::size_t steps, std::uint64_t seed) {
  const auto k = static_cast<std::size_t>(params_.modes);
  const std::size_t m = params_.orders.window();
  if (window.size() % k != 0 || window.size() / k < m) {
    throw ArgumentError("simulate: initial window needs " + std::to_string(m) + " states for orders " +
                        params_.orders.label());
  }
  const RegressorLayout layout = params_.layout();
  const double delta = params_.delta;
  const std::size_t t0 = first_modelled_step(params_.orders);
  const auto ring = static_cast<std::size_t>(std::max(params_.orders.p, params_.orders.q) + 1);

  std::vector<Complex> hist((m + steps) * k);
  std::copy(window.end() - static_cast<std::ptrdiff_t>(m * k), window.end(), hist.begin());
  std::vector<Complex> zr(ring * k, Complex{}), xr(ring * k, Complex{});
  std::vector<Complex> r(k), ext(2 * k), row(layout.size());

  std::size_t t = 0;
  auto phi = [&](int mode) {
    fill_regressors(
        layout, mode, [&](int j, int i) { return hist[(t - 1 - static_cast<std::size_t>(j)) * k + static_cast<std::size_t>(i)]; },
        [&](int j, int i) { return zr[((t - static_cast<std::size_t>(j)) % ring) * k + static_cast<std::size_t>(i)]; },
        [&](int j, int i) { return xr[((t - static_cast<std::size_t>(j)) % ring) * k + static_cast<std::size_t>(i)]; },
        ext, r[static_cast<std::size_t>(mode - 1)], row);
    return dot(params_.theta[static_cast<std::size_t>(mode - 1)], row);
  };
  auto prepare = [&] {
    const std::span<const Complex> prev(hist.data() + (t - 1) * k, k);
    model_.increment(prev, delta, r);
    if (layout.ansatz == Ansatz::narmax) extend_modes(prev, ext);
  };

  // Model errors inside the window come from the data; their noise is filtered.
  for (t = 1; t < m; ++t) {
    prepare();
    const std::size_t slot = (t % ring) * k;
    for (std::size_t i = 0; i < k; ++i) {
      zr[slot + i] = (hist[t * k + i] - hist[(t - 1) * k + i]) / delta - r[i];
    }
    for (std::size_t i = 0; i < k; ++i) {
      xr[slot + i] = t >= t0 ? zr[slot + i] - phi(static_cast<int>(i) + 1) : Complex{};
    }
  }

  SimulationResult res;
  res.modes = params_.modes;
  res.delta = delta;
  res.period = params_.period;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> sd(k);
  for (std::size_t i = 0; i < k; ++i) sd[i] = std::sqrt(params_.sigma2[i]);

  std::size_t done = 0;
  for (std::size_t s = 1; s <= steps; ++s) {
    t = m - 1 + s;
    prepare();
    const std::size_t slot = (t % ring) * k;
    bool blown = false;
    for (std::size_t i = 0; i < k; ++i) {
      const double a = normal(rng);
      const double b = normal(rng);
      const Complex xi{sd[i] * a, sd[i] * b};
      const Complex zt = phi(static_cast<int>(i) + 1) + xi;
      xr[slot + i] = xi;
      zr[slot + i] = zt;
      const Complex u = hist[(t - 1) * k + i] + delta * r[i] + delta * zt;
      hist[t * k + i] = u;
      if (!finite(u) || std::abs(u) > options_.blowup) blown = true;
    }
    if (blown) {
      res.unstable_step = s;
      break;
    }
    done = s;
  }
  res.states.assign(hist.begin() + static_cast<std::ptrdiff_t>(m * k),
                    hist.begin() + static_cast<std::ptrdiff_t>((m + done) * k));
  return res;
}

SimulationResult simulate(const NarmaxParams& params, const ObservationSeries& window, std::size_t steps,
                          std::uint64_t seed, const SimulationOptions& options) {
  NarmaxSimulator sim(params, options);
  return sim.run(window, steps, seed);
}

NarmaxForecaster::NarmaxForecaster(NarmaxParams params, SimulationOptions options)
    : sim_(std::move(params), options) {}

bool NarmaxForecaster::stochastic() const {
  return std::any_of(sim_.params().sigma2.begin(), sim_.params().sigma2.end(), [](double s) { return s > 0.0; });
}

std::optional<std::vector<Complex>> NarmaxForecaster::forecast(const ObservationSeries& data, std::size_t start,
                                                               std::size_t steps, std::uint64_t seed) {
  const auto k = static_cast<std::size_t>(data.modes());
  const std::size_t m = sim_.window();
  if (start + m > data.size()) throw ArgumentError("forecast: window runs past the data");
  const std::span<const Complex> window(data.samples().data() + start * k, m * k);
  SimulationResult res = sim_.run(window, steps, seed);
  if (!res.stable()) return std::nullopt;
  return std::move(res.states);
}

std::optional<std::vector<double>> model_acf_distance(const NarmaxParams& params, const ObservationSeries& data,
                                                      const AcfComparison& options) {
  if (options.pieces < 1) throw ArgumentError("acf comparison: need at least one piece");
  const auto lag = static_cast<std::size_t>(std::llround(options.t_lag / data.delta()));
  if (lag < 1 || options.piece_length <= lag) {
    throw ArgumentError("acf comparison: piece length must exceed T_lag/delta = " + std::to_string(lag));
  }
  NarmaxSimulator sim(params);
  const std::size_t m = sim.window();
  if (data.size() < m + options.piece_length) throw ArgumentError("acf comparison: data shorter than one piece");
  const std::size_t last_start = data.size() - m - options.piece_length;
  const std::size_t spacing = shrink_spacing(lag, options.pieces, last_start);
  if (options.pieces > 1 && spacing == 0) throw ArgumentError("acf comparison: data too short for the pieces");

  std::vector<ObservationSeries> dv, mv;
  dv.reserve(options.pieces);
  mv.reserve(options.pieces);
  for (std::size_t i = 0; i < options.pieces; ++i) {
    const std::size_t s = i * spacing;
    SimulationResult res = sim.run(data.slice(s, m), options.piece_length, stream_seed(options.seed, i));
    if (!res.stable()) return std::nullopt;
    dv.push_back(data.slice(s + m, options.piece_length));
    mv.push_back(res.as_series());
  }
  return acf_distance(dv, mv, lag);
}

std::vector<NarmaxOrders> default_order_grid() {
  std::vector<NarmaxOrders> g;
  for (int p = 0; p <= 2; ++p) {
    for (int r = 1; r <= 2; ++r) {
      for (int q = 0; q <= 1; ++q) g.push_back({p, r, q});
    }
  }
  return g;
}

ScanReport scan_orders(const ObservationSeries& series, const ModelErrorSeries& z, const ScanOptions& options) {
  const std::vector<NarmaxOrders> grid = options.grid.empty() ? default_order_grid() : options.grid;
  ScanReport rep;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    ScanCell cell;
    cell.orders = grid[c];
    cell.params = fit(series, z, cell.orders, options.ansatz, options.mle);
    double logsum = 0.0;
    for (double s : cell.params.sigma2) logsum += std::log(s);
    cell.variance_score = std::exp(logsum / static_cast<double>(cell.params.sigma2.size()));

    const std::size_t m = cell.orders.window();
    const std::size_t start = std::min(options.stability_start, series.size() - m);
    const std::size_t steps = options.stability_steps > 0 ? options.stability_steps : series.transitions();
    const SimulationResult res =
        simulate(cell.params, series.slice(start, m), steps, stream_seed(options.seed, c));
    cell.stable = res.stable();
    cell.unstable_step = res.unstable_step;
    rep.cells.push_back(std::move(cell));
  }

  double best = std::numeric_limits<double>::infinity();
  for (const ScanCell& cell : rep.cells) {
    if (cell.stable) best = std::min(best, cell.variance_score);
  }
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < rep.cells.size(); ++c) {
    ScanCell& cell = rep.cells[c];
    if (!cell.stable || cell.variance_score > options.shortlist_factor * best) continue;
    AcfComparison acf = options.acf;
    acf.seed = stream_seed(options.seed, 1000 + c);
    const auto d = model_acf_distance(cell.params, series, acf);
    if (!d) {
      cell.stable = false;
      continue;
    }
    cell.shortlisted = true;
    cell.acf_distance = *d;
    double mean = 0.0;
    for (double x : *d) mean += x;
    mean /= static_cast<double>(d->size());
    if (mean < best_d) {
      best_d = mean;
      rep.selected = cell.orders;
    }
  }
  return rep;
}

nlohmann::json to_json(const NarmaxParams& params) {
  params.validate(true);
  const RegressorLayout lay = params.layout();
  nlohmann::json modes = nlohmann::json::array();
  for (int k = 1; k <= params.modes; ++k) {
    const auto& th = params.theta[static_cast<std::size_t>(k - 1)];
    auto block = [&](std::size_t off, int n) {
      return std::vector<double>(th.begin() + static_cast<std::ptrdiff_t>(off),
                                 th.begin() + static_cast<std::ptrdiff_t>(off) + n);
    };
    modes.push_back({{"k", k},
                     {"mu", th[0]},
                     {"a", block(lay.a_offset(), params.orders.p)},
                     {"b", block(lay.b_offset(), params.orders.r)},
                     {"c", block(lay.c_offset(), lay.c_count())},
                     {"d", block(lay.d_offset(), params.orders.q)},
                     {"sigma2", params.sigma2[static_cast<std::size_t>(k - 1)]}});
  }
  return {{"format", "ksnarmax-model"},
          {"version", kModelFormatVersion},
          {"orders", {{"p", params.orders.p}, {"r", params.orders.r}, {"q", params.orders.q}}},
          {"ansatz", to_string(params.ansatz)},
          {"K", params.modes},
          {"delta", params.delta},
          {"L", params.period},
          {"training_provenance", params.training_provenance},
          {"diagnostics",
           {{"converged", params.diagnostics.converged},
            {"rank_deficient", params.diagnostics.rank_deficient},
            {"iterations", params.diagnostics.iterations},
            {"samples", params.diagnostics.samples}}},
          {"modes", modes}};
}

NarmaxParams params_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "ksnarmax-model") throw FormatError("model: unknown format tag");
    if (j.at("version").get<int>() != kModelFormatVersion) throw FormatError("model: unsupported version");
    NarmaxParams p;
    const auto& o = j.at("orders");
    p.orders = {o.at("p").get<int>(), o.at("r").get<int>(), o.at("q").get<int>()};
    p.ansatz = parse_ansatz(j.at("ansatz").get<std::string>());
    p.modes = j.at("K").get<int>();
    p.delta = j.at("delta").get<double>();
    p.period = j.at("L").get<double>();
    p.training_provenance = j.at("training_provenance").get<std::string>();
    const auto& d = j.at("diagnostics");
    p.diagnostics.converged = d.at("converged").get<bool>();
    p.diagnostics.rank_deficient = d.at("rank_deficient").get<bool>();
    p.diagnostics.iterations = d.at("iterations").get<int>();
    p.diagnostics.samples = d.at("samples").get<std::size_t>();
    const auto& modes = j.at("modes");
    if (!modes.is_array() || modes.size() != static_cast<std::size_t>(p.modes)) {
      throw FormatError("model: expected " + std::to_string(p.modes) + " mode entries");
    }
    for (const auto& m : modes) {
      std::vector<double> th{m.at("mu").get<double>()};
      for (const char* key : {"a", "b", "c", "d"}) {
        const auto v = m.at(key).get<std::vector<double>>();
        th.insert(th.end(), v.begin(), v.end());
      }
      p.theta.push_back(std::move(th));
      p.sigma2.push_back(m.at("sigma2").get<double>());
    }
    p.validate(true);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(e.what());
  }
}

void save(const NarmaxParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << to_json(params).dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

NarmaxParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read model " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return params_from_json(j);
}

}  // namespace ksnarmax
