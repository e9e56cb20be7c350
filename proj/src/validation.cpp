#include "ksnarmax/validation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ksnarmax/errors.hpp"

namespace ksnarmax {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(10);
  return out;
}

}  // namespace

DensityCurve histogram_density(std::span<const double> values, double lo, double hi, int bins) {
  if (bins < 1) throw ArgumentError("histogram_density: bins must be >= 1");
  if (values.empty()) throw ArgumentError("histogram_density: empty input");
  if (!(hi > lo)) throw DomainError("histogram_density: empty range");
  DensityCurve c;
  c.lo = lo;
  c.hi = hi;
  c.density.assign(static_cast<std::size_t>(bins), 0.0);
  c.centers.resize(static_cast<std::size_t>(bins));
  const double w = c.width();
  for (int b = 0; b < bins; ++b) c.centers[static_cast<std::size_t>(b)] = lo + (b + 0.5) * w;
  for (double x : values) {
    if (!(x >= lo && x <= hi)) continue;
    auto b = static_cast<std::size_t>((x - lo) / w);
    c.density[std::min(b, c.density.size() - 1)] += 1.0;
  }
  const double scale = 1.0 / (static_cast<double>(values.size()) * w);
  for (double& d : c.density) d *= scale;
  return c;
}

DensityCurve empirical_pdf(std::span<const double> values, int bins) {
  if (values.empty()) throw ArgumentError("empirical_pdf: empty input");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double spread = *mx - *mn;
  if (!(spread > 0.0)) throw DomainError("empirical_pdf: constant series has no density");
  return histogram_density(values, *mn - 0.05 * spread, *mx + 0.05 * spread, bins);
}

double pdf_l1_distance(std::span<const double> reference, std::span<const double> other, int bins,
                       double width_stds) {
  if (reference.empty() || other.empty()) throw ArgumentError("pdf_l1_distance: empty input");
  const double n = static_cast<double>(reference.size());
  const double mean = std::accumulate(reference.begin(), reference.end(), 0.0) / n;
  double var = 0.0;
  for (double x : reference) var += (x - mean) * (x - mean);
  const double half = width_stds * std::sqrt(var / n);
  if (!(half > 0.0)) throw DomainError("pdf_l1_distance: reference has zero variance");
  const DensityCurve a = histogram_density(reference, -half, half, bins);
  const DensityCurve b = histogram_density(other, -half, half, bins);
  double l1 = 0.0;
  for (std::size_t i = 0; i < a.density.size(); ++i) l1 += std::abs(a.density[i] - b.density[i]);
  return l1 * a.width();
}

AcfCurve acf(std::span<const double> piece, std::size_t max_lag, int mode) {
  const std::size_t t = piece.size();
  if (max_lag < 1 || max_lag >= t) {
    throw ArgumentError("acf: need 1 <= H < piece length (H = " + std::to_string(max_lag) +
                        ", length = " + std::to_string(t) + ")");
  }
  AcfCurve c;
  c.mode = mode;
  c.values.resize(max_lag);
  for (std::size_t h = 1; h <= max_lag; ++h) {
    double s = 0.0;
    for (std::size_t n = 0; n + h < t; ++n) s += piece[n + h] * piece[n];
    c.values[h - 1] = s / static_cast<double>(t - h);
  }
  return c;
}

std::vector<double> acf_distance(const std::vector<ObservationSeries>& data, const std::vector<ObservationSeries>& model,
                                 std::size_t max_lag) {
  if (data.empty() || data.size() != model.size()) {
    throw ArgumentError("acf_distance: need the same positive number of data and model pieces");
  }
  const int k_modes = data.front().modes();
  std::vector<double> d(static_cast<std::size_t>(k_modes), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].modes() != k_modes || model[i].modes() != k_modes) throw ArgumentError("acf_distance: K mismatch");
    if (data[i].size() != model[i].size()) throw ArgumentError("acf_distance: piece lengths differ");
    for (int k = 1; k <= k_modes; ++k) {
      const std::vector<double> xv = data[i].real_part(k);
      const std::vector<double> xu = model[i].real_part(k);
      const AcfCurve gv = acf(xv, max_lag, k);
      const AcfCurve gu = acf(xu, max_lag, k);
      double s = 0.0;
      for (std::size_t h = 0; h < max_lag; ++h) s += (gv.values[h] - gu.values[h]) * (gv.values[h] - gu.values[h]);
      d[static_cast<std::size_t>(k - 1)] += s / static_cast<double>(max_lag);
    }
  }
  for (double& x : d) x /= static_cast<double>(data.size());
  return d;
}

EnergyStats energy_stats(const ObservationSeries& series, int batches) {
  if (batches < 2) throw ArgumentError("energy_stats: need at least 2 batches");
  const std::size_t n = series.size();
  const auto nb = static_cast<std::size_t>(batches);
  const std::size_t len = n / nb;
  if (len < 2) throw ArgumentError("energy_stats: series too short for the batch count");
  const auto k = static_cast<std::size_t>(series.modes());

  // Per batch: means of e_k and of e_k e_l, for the batch statistics.
  std::vector<double> bmean(nb * k, 0.0), bcov(nb * k * k, 0.0);
  std::vector<double> e(k);
  EnergyStats st;
  st.modes = series.modes();
  st.mean.assign(k, 0.0);
  std::vector<double> prod(k * k, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const auto s = series.state(t);
    for (std::size_t i = 0; i < k; ++i) e[i] = std::norm(s[i]);
    for (std::size_t i = 0; i < k; ++i) {
      st.mean[i] += e[i];
      for (std::size_t j = 0; j < k; ++j) prod[i * k + j] += e[i] * e[j];
    }
    const std::size_t b = t / len;
    if (b >= nb) continue;
    for (std::size_t i = 0; i < k; ++i) {
      bmean[b * k + i] += e[i];
      for (std::size_t j = 0; j < k; ++j) bcov[(b * k + i) * k + j] += e[i] * e[j];
    }
  }
  const double dn = static_cast<double>(n);
  for (double& m : st.mean) m /= dn;
  st.cov.resize(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) st.cov[i * k + j] = prod[i * k + j] / dn - st.mean[i] * st.mean[j];
  }
  const double dl = static_cast<double>(len);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t i = 0; i < k; ++i) bmean[b * k + i] /= dl;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        double& c = bcov[(b * k + i) * k + j];
        c = c / dl - bmean[b * k + i] * bmean[b * k + j];
      }
    }
  }
  auto batch_se = [&](auto value) {
    double m = 0.0, v = 0.0;
    for (std::size_t b = 0; b < nb; ++b) m += value(b);
    m /= static_cast<double>(nb);
    for (std::size_t b = 0; b < nb; ++b) v += (value(b) - m) * (value(b) - m);
    return std::sqrt(v / static_cast<double>(nb - 1) / static_cast<double>(nb));
  };
  st.mean_se.resize(k);
  st.cov_se.resize(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    st.mean_se[i] = batch_se([&](std::size_t b) { return bmean[b * k + i]; });
    for (std::size_t j = 0; j < k; ++j) {
      st.cov_se[i * k + j] = batch_se([&](std::size_t b) { return bcov[(b * k + i) * k + j]; });
    }
  }
  return st;
}

std::uint64_t stream_seed(std::uint64_t root, std::uint64_t stream) {
  return splitmix64(splitmix64(root) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

double ForecastReport::rmse_below_until(double level) const {
  double last = 0.0;
  for (std::size_t n = 0; n < rmse.size(); ++n) {
    if (!(rmse[n] < level)) break;
    last = lead_time[n];
  }
  return last;
}

double ForecastReport::ancr_above_until(double level) const {
  double last = 0.0;
  for (std::size_t n = 0; n < ancr.size(); ++n) {
    if (!(ancr[n] > level)) break;
    last = lead_time[n];
  }
  return last;
}

ForecastReport ensemble_forecast(Forecaster& model, const ObservationSeries& data, const ForecastOptions& options) {
  if (options.initial_conditions < 1 || options.ensemble < 1) {
    throw ArgumentError("ensemble_forecast: N0 and N_ens must be positive");
  }
  if (!(options.t_lag > 0.0)) throw ArgumentError("ensemble_forecast: T_lag must be positive");
  const auto horizon = static_cast<std::size_t>(std::llround(options.t_lag / data.delta()));
  const std::size_t m = model.window();
  const std::size_t n0 = options.initial_conditions;
  if (horizon < 1 || data.size() < m + horizon + 1) throw ArgumentError("ensemble_forecast: data shorter than one forecast");
  const std::size_t last_start = data.size() - 1 - (m - 1) - horizon;
  std::size_t spacing = horizon;
  if (n0 > 1 && (n0 - 1) * spacing > last_start) spacing = last_start / (n0 - 1);
  if (n0 > 1 && spacing == 0) throw ArgumentError("ensemble_forecast: data too short for N0 initial conditions");

  const auto k = static_cast<std::size_t>(data.modes());
  std::vector<double> mean_re(k, 0.0);
  for (std::size_t t = 0; t < data.size(); ++t) {
    for (std::size_t i = 0; i < k; ++i) mean_re[i] += data.state(t)[i].real();
  }
  for (double& x : mean_re) x /= static_cast<double>(data.size());

  ForecastReport rep;
  rep.initial_conditions = n0;
  rep.ensemble = model.stochastic() ? options.ensemble : 1;
  rep.t_lag = options.t_lag;
  rep.spacing = spacing;
  rep.lead_time.resize(horizon);
  for (std::size_t n = 0; n < horizon; ++n) rep.lead_time[n] = static_cast<double>(n + 1) * data.delta();
  std::vector<double> sq(horizon, 0.0), corr(horizon, 0.0);
  std::size_t used = 0;
  std::vector<double> mean_traj(horizon * k);

  for (std::size_t i = 0; i < n0; ++i) {
    const std::size_t start = i * spacing;
    std::fill(mean_traj.begin(), mean_traj.end(), 0.0);
    std::size_t ok = 0;
    for (std::size_t j = 0; j < rep.ensemble; ++j) {
      ++rep.members;
      const auto traj = model.forecast(data, start, horizon, stream_seed(options.seed, i * rep.ensemble + j));
      if (!traj) {
        ++rep.excluded;
        continue;
      }
      if (traj->size() != horizon * k) throw Error("ensemble_forecast: forecaster returned the wrong length");
      for (std::size_t t = 0; t < horizon * k; ++t) mean_traj[t] += (*traj)[t].real();
      ++ok;
    }
    if (ok == 0) continue;
    ++used;
    for (double& x : mean_traj) x /= static_cast<double>(ok);
    const std::size_t origin = start + m - 1;
    for (std::size_t n = 0; n < horizon; ++n) {
      const auto truth = data.state(origin + n + 1);
      double e2 = 0.0, dot = 0.0, av2 = 0.0, au2 = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double u = mean_traj[n * k + c];
        const double v = truth[c].real();
        e2 += (v - u) * (v - u);
        const double av = v - mean_re[c];
        const double au = u - mean_re[c];
        dot += av * au;
        av2 += av * av;
        au2 += au * au;
      }
      sq[n] += e2;
      const double denom = std::sqrt(av2 * au2);
      corr[n] += denom > 0.0 ? dot / denom : 0.0;
    }
  }
  if (static_cast<double>(rep.excluded) > options.max_excluded_fraction * static_cast<double>(rep.members) ||
      used == 0) {
    throw ValidationError("ensemble_forecast: " + std::to_string(rep.excluded) + " of " +
                          std::to_string(rep.members) + " members blew up");
  }
  rep.rmse.resize(horizon);
  rep.ancr.resize(horizon);
  for (std::size_t n = 0; n < horizon; ++n) {
    rep.rmse[n] = std::sqrt(sq[n] / static_cast<double>(used));
    rep.ancr[n] = std::clamp(corr[n] / static_cast<double>(used), -1.0, 1.0);
  }
  return rep;
}

void write_forecast_csv(const ForecastReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "lead_time,rmse,ancr\n";
  for (std::size_t n = 0; n < report.lead_time.size(); ++n) {
    out << report.lead_time[n] << ',' << report.rmse[n] << ',' << report.ancr[n] << '\n';
  }
}

void write_density_csv(const std::vector<DensityCurve>& curves, const std::vector<std::string>& names,
                       const std::filesystem::path& path) {
  if (curves.empty() || curves.size() != names.size()) throw ArgumentError("write_density_csv: names/curves mismatch");
  auto out = open_csv(path);
  out << "x";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t b = 0; b < curves.front().centers.size(); ++b) {
    out << curves.front().centers[b];
    for (const auto& c : curves) out << ',' << (b < c.density.size() ? c.density[b] : 0.0);
    out << '\n';
  }
}

void write_acf_csv(const std::vector<AcfCurve>& curves, const std::vector<std::string>& names, double delta,
                   const std::filesystem::path& path) {
  if (curves.empty() || curves.size() != names.size()) throw ArgumentError("write_acf_csv: names/curves mismatch");
  auto out = open_csv(path);
  out << "lag";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t h = 0; h < curves.front().values.size(); ++h) {
    out << static_cast<double>(h + 1) * delta;
    for (const auto& c : curves) out << ',' << (h < c.values.size() ? c.values[h] : 0.0);
    out << '\n';
  }
}

}  // namespace ksnarmax
