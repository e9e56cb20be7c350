#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ksnarmax/data_gen.hpp"

namespace ksnarmax {

/// Histogram density on equal-width bins.
struct DensityCurve {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> centers;
  std::vector<double> density;

  double width() const noexcept { return (hi - lo) / static_cast<double>(density.size()); }
};

/// Range is the data min/max padded by 5% of the spread on each side.
/// Throws DomainError for a constant series and ArgumentError for bins < 1 or empty input.
DensityCurve empirical_pdf(std::span<const double> values, int bins);
/// Fixed range; values outside [lo, hi] are dropped but still count toward normalization.
DensityCurve histogram_density(std::span<const double> values, double lo, double hi, int bins);

/// L1 distance between the densities of two samples, binned on +-width_stds standard
/// deviations of the reference around zero.
double pdf_l1_distance(std::span<const double> reference, std::span<const double> other, int bins = 64,
                       double width_stds = 4.0);

/// gamma(h) = 1/(T-h) sum_{n=1}^{T-h} x_{n+h} x_n for h = 1..H, without mean removal.
struct AcfCurve {
  int mode = 0;
  std::vector<double> values;  // values[h-1] = gamma(h)

  std::size_t max_lag() const noexcept { return values.size(); }
};

/// Throws ArgumentError unless 1 <= H < piece.size().
AcfCurve acf(std::span<const double> piece, std::size_t max_lag, int mode = 0);

/// Paired pieces: data[i] and model[i] are series of equal length.
/// D_k = (1/N0) sum_i (1/H) sum_{h=1}^{H} (gamma_v - gamma_u)^2 over Re of mode k.
std::vector<double> acf_distance(const std::vector<ObservationSeries>& data, const std::vector<ObservationSeries>& model,
                                 std::size_t max_lag);

struct EnergyStats {
  std::vector<double> mean;          // <|v_k|^2>
  std::vector<double> mean_se;       // batch-means standard error
  std::vector<double> cov;           // K x K row-major cov(|v_k|^2, |v_l|^2)
  std::vector<double> cov_se;
  int modes = 0;

  double covariance(int k, int l) const { return cov[static_cast<std::size_t>((k - 1) * modes + (l - 1))]; }
  double covariance_se(int k, int l) const { return cov_se[static_cast<std::size_t>((k - 1) * modes + (l - 1))]; }
};

/// Time averages with batch-means error bars. Needs at least 2 samples per batch.
EnergyStats energy_stats(const ObservationSeries& series, int batches = 50);

/// Anything that turns an initial window of observed states into a forecast.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  /// Number of consecutive states the forecast is conditioned on.
  virtual std::size_t window() const = 0;
  /// Deterministic forecasters are run once per initial condition.
  virtual bool stochastic() const { return true; }
  /// `start` indexes the first window state in `data`. Returns `steps` states (row-major,
  /// steps x K) following the window, or nothing if the member blew up.
  virtual std::optional<std::vector<Complex>> forecast(const ObservationSeries& data, std::size_t start,
                                                       std::size_t steps, std::uint64_t seed) = 0;
};

struct ForecastOptions {
  std::size_t initial_conditions = 1000;  // N0
  std::size_t ensemble = 20;              // N_ens
  double t_lag = 50.0;
  std::uint64_t seed = 1;
  double max_excluded_fraction = 0.05;
};

struct ForecastReport {
  std::vector<double> lead_time;
  std::vector<double> rmse;
  std::vector<double> ancr;
  std::size_t initial_conditions = 0;
  std::size_t ensemble = 0;
  double t_lag = 0.0;
  std::size_t spacing = 0;   // samples between successive initial windows
  std::size_t members = 0;   // members attempted
  std::size_t excluded = 0;  // members that blew up

  /// Last lead time up to which RMSE stays below `level` (0 if it starts above).
  double rmse_below_until(double level) const;
  /// Last lead time up to which ANCR stays above `level`.
  double ancr_above_until(double level) const;
};

/// Windows start every T_lag/delta samples; if the series is too short for N0 such
/// windows plus a horizon of T_lag/delta steps, the spacing shrinks to fit. Lead n
/// compares the forecast n steps after the window with the data at the same time.
/// Anomalies are taken against the mean of Re v over the whole series.
/// Throws ValidationError if more than the allowed fraction of members blow up.
ForecastReport ensemble_forecast(Forecaster& model, const ObservationSeries& data, const ForecastOptions& options);

/// Member seed derived from a root seed and a stream index (splitmix64 mixing).
std::uint64_t stream_seed(std::uint64_t root, std::uint64_t stream);

void write_forecast_csv(const ForecastReport& report, const std::filesystem::path& path);
/// Columns: x, then one density column per curve.
void write_density_csv(const std::vector<DensityCurve>& curves, const std::vector<std::string>& names,
                       const std::filesystem::path& path);
/// Columns: lag time, then one column per curve.
void write_acf_csv(const std::vector<AcfCurve>& curves, const std::vector<std::string>& names, double delta,
                   const std::filesystem::path& path);

}  // namespace ksnarmax
