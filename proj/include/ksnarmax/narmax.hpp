#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ksnarmax/aim_features.hpp"
#include "ksnarmax/data_gen.hpp"
#include "ksnarmax/reduced_model.hpp"
#include "ksnarmax/validation.hpp"

namespace ksnarmax {

struct FitDiagnostics {
  bool converged = true;
  bool rank_deficient = false;
  int iterations = 0;
  std::size_t samples = 0;  // fitted steps per mode

  friend bool operator==(const FitDiagnostics&, const FitDiagnostics&) = default;
};

/// Per-mode real coefficients theta_k (ordered as in RegressorLayout) and the
/// variance sigma_k^2 of each of the real and imaginary parts of xi_k.
struct NarmaxParams {
  NarmaxOrders orders;
  Ansatz ansatz = Ansatz::narmax;
  int modes = 0;
  double delta = 0.0;
  double period = 0.0;
  std::vector<std::vector<double>> theta;
  std::vector<double> sigma2;
  std::string training_provenance;
  FitDiagnostics diagnostics;

  RegressorLayout layout() const { return {orders, modes, ansatz}; }

  /// All coefficients and variances zero: the truncated model.
  static NarmaxParams zeros(NarmaxOrders orders, Ansatz ansatz, int modes, double delta, double period);

  // Accessors use 1-based k and the lag numbering of the ansatz.
  double mu(int k) const { return theta[static_cast<std::size_t>(k - 1)][0]; }
  double a(int k, int j) const { return coef(k, layout().a_offset() + static_cast<std::size_t>(j - 1)); }
  double b(int k, int j) const { return coef(k, layout().b_offset() + static_cast<std::size_t>(j)); }
  /// c_{k,1..K+1}; c_{k,K+1} multiplies R_k^delta.
  double c(int k, int j) const { return coef(k, layout().c_offset() + static_cast<std::size_t>(j - 1)); }
  double d(int k, int j) const { return coef(k, layout().d_offset() + static_cast<std::size_t>(j - 1)); }

  /// Throws ArgumentError on shape mismatch or non-finite values. Variances must be
  /// positive unless `allow_zero_variance`.
  void validate(bool allow_zero_variance = false) const;

  friend bool operator==(const NarmaxParams&, const NarmaxParams&) = default;

 private:
  double coef(int k, std::size_t i) const { return theta[static_cast<std::size_t>(k - 1)][i]; }
};

/// First model-error index z^{t0} that is modelled: t0 = max(p + 1, r, q + 1).
/// Noise values xi^t for t < t0 are set to zero.
std::size_t first_modelled_step(const NarmaxOrders& orders);

/// Noise sequence xi^t = z^t - Phi^t(theta), t = 1..T, computed recursively (zero before t0).
/// Row-major T x K.
std::vector<Complex> innovations(const NarmaxParams& params, const ObservationSeries& series,
                                 const ModelErrorSeries& z);

/// sum_k ( sum_t |xi_k^t|^2 / (2 sigma_k^2) + n_eff ln sigma_k^2 ), with n_eff = T - t0 + 1.
/// Throws DomainError if any sigma_k^2 <= 0.
double neg_log_likelihood(const NarmaxParams& params, const ObservationSeries& series, const ModelErrorSeries& z);

/// Least squares per mode, stacking the real and imaginary equations. Requires q = 0.
NarmaxParams fit_ls(const ObservationSeries& series, const ModelErrorSeries& z, const NarmaxOrders& orders,
                    Ansatz ansatz = Ansatz::narmax);

struct MleOptions {
  /// Stop once the largest coefficient step is below tolerance * max(1, max |theta|).
  double tolerance = 1e-8;
  int max_iterations = 200;
};

/// Conditional MLE for q >= 1. The start is one least-squares solve with the q = 0
/// residuals standing in for the lagged noise; damped Gauss-Newton on the residual
/// sum of squares follows, kept inside the invertible region of the moving-average
/// part. sigma_k^2 is the mean squared real/imaginary residual.
NarmaxParams fit_mle(const ObservationSeries& series, const ModelErrorSeries& z, const NarmaxOrders& orders,
                     Ansatz ansatz = Ansatz::narmax, const MleOptions& options = {});

/// fit_ls for q = 0, fit_mle otherwise.
NarmaxParams fit(const ObservationSeries& series, const ModelErrorSeries& z, const NarmaxOrders& orders,
                 Ansatz ansatz = Ansatz::narmax, const MleOptions& options = {});

struct SimulationOptions {
  /// A state with any |u_k| above this (or non-finite) stops the run.
  double blowup = 1e4;
};

struct SimulationResult {
  int modes = 0;
  double delta = 0.0;
  double period = 0.0;
  /// States after the initial window, row-major (steps x K). Shorter than requested if unstable.
  std::vector<Complex> states;
  /// 1-based step at which the blow-up was detected.
  std::optional<std::size_t> unstable_step;

  bool stable() const noexcept { return !unstable_step.has_value(); }
  std::size_t steps() const noexcept { return modes > 0 ? states.size() / static_cast<std::size_t>(modes) : 0; }
  ObservationSeries as_series() const;
};

/// Runs the closed reduced system from the last orders.window() states of `window`.
/// The model errors inside the window are inferred from the data, the noise inside it
/// filtered; after that each step draws xi with independent N(0, sigma_k^2) real and
/// imaginary parts from a generator seeded with `seed`.
class NarmaxSimulator {
 public:
  explicit NarmaxSimulator(NarmaxParams params, SimulationOptions options = {});

  const NarmaxParams& params() const noexcept { return params_; }
  std::size_t window() const noexcept { return params_.orders.window(); }

  /// `window` holds at least window() states, row-major.
  SimulationResult run(std::span<const Complex> window, std::size_t steps, std::uint64_t seed);
  SimulationResult run(const ObservationSeries& window, std::size_t steps, std::uint64_t seed);

 private:
  NarmaxParams params_;
  SimulationOptions options_;
  TruncatedModel model_;
};

SimulationResult simulate(const NarmaxParams& params, const ObservationSeries& window, std::size_t steps,
                          std::uint64_t seed, const SimulationOptions& options = {});

/// Forecaster backed by a fitted model; a zero-variance model is run once per window.
class NarmaxForecaster : public Forecaster {
 public:
  explicit NarmaxForecaster(NarmaxParams params, SimulationOptions options = {});
  std::size_t window() const override { return sim_.window(); }
  bool stochastic() const override;
  std::optional<std::vector<Complex>> forecast(const ObservationSeries& data, std::size_t start, std::size_t steps,
                                               std::uint64_t seed) override;

 private:
  NarmaxSimulator sim_;
};

struct AcfComparison {
  std::size_t pieces = 100;
  double t_lag = 50.0;
  /// Samples per piece; must exceed t_lag/delta.
  std::size_t piece_length = 5000;
  std::uint64_t seed = 1;
};

/// D_1..D_K between data pieces and model runs started from each piece's window.
/// Pieces start every t_lag/delta samples (spacing shrinks if the data is too short).
/// Returns nullopt if a model run blows up.
std::optional<std::vector<double>> model_acf_distance(const NarmaxParams& params, const ObservationSeries& data,
                                                      const AcfComparison& options);

struct ScanOptions {
  std::vector<NarmaxOrders> grid;  // empty selects p in {0,1,2}, r in {1,2}, q in {0,1}
  Ansatz ansatz = Ansatz::narmax;
  std::size_t stability_start = 20000;
  std::size_t stability_steps = 0;  // 0 selects T
  std::uint64_t seed = 1;
  /// Stable cells whose geometric-mean variance is within this factor of the best one
  /// are compared by mean ACF distance.
  double shortlist_factor = 2.0;
  AcfComparison acf;
  MleOptions mle;
};

struct ScanCell {
  NarmaxOrders orders;
  NarmaxParams params;
  bool stable = false;
  std::optional<std::size_t> unstable_step;
  double variance_score = 0.0;  // geometric mean of sigma_k^2
  bool shortlisted = false;
  std::vector<double> acf_distance;  // filled for shortlisted cells
};

struct ScanReport {
  std::vector<ScanCell> cells;
  std::optional<NarmaxOrders> selected;
};

std::vector<NarmaxOrders> default_order_grid();

ScanReport scan_orders(const ObservationSeries& series, const ModelErrorSeries& z, const ScanOptions& options = {});

nlohmann::json to_json(const NarmaxParams& params);
NarmaxParams params_from_json(const nlohmann::json& j);
void save(const NarmaxParams& params, const std::filesystem::path& path);
NarmaxParams load_model(const std::filesystem::path& path);

}  // namespace ksnarmax
