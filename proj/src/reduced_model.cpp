#include "ksnarmax/reduced_model.hpp"

#include <cmath>

#include "ksnarmax/errors.hpp"
#include "ksnarmax/series_io.hpp"

namespace ksnarmax {

namespace {
constexpr std::string_view kModelErrorMagic = "KSMZ";
}

TruncatedModel::TruncatedModel(double period, int modes)
    : modes_(modes),
      op_(FourierGrid(period, 2 * (modes + 1))),
      padded_in_(static_cast<std::size_t>(modes + 2)),
      padded_out_(static_cast<std::size_t>(modes + 2)),
      k1_(static_cast<std::size_t>(modes)),
      k2_(static_cast<std::size_t>(modes)),
      k3_(static_cast<std::size_t>(modes)),
      k4_(static_cast<std::size_t>(modes)),
      stage_(static_cast<std::size_t>(modes)) {
  if (modes < 1) throw ArgumentError("TruncatedModel: K must be >= 1");
}

void TruncatedModel::rhs(std::span<const Complex> u, std::span<Complex> out) {
  const auto k = static_cast<std::size_t>(modes_);
  if (u.size() != k || out.size() != k) throw ArgumentError("TruncatedModel::rhs: expected K values");
  std::copy(u.begin(), u.end(), padded_in_.begin() + 1);
  op_.rhs(padded_in_, padded_out_);
  std::copy(padded_out_.begin() + 1, padded_out_.begin() + 1 + static_cast<std::ptrdiff_t>(k), out.begin());
}

void TruncatedModel::increment(std::span<const Complex> u, double delta, std::span<Complex> out) {
  const auto k = static_cast<std::size_t>(modes_);
  rhs(u, k1_);
  for (std::size_t i = 0; i < k; ++i) stage_[i] = u[i] + 0.5 * delta * k1_[i];
  rhs(stage_, k2_);
  for (std::size_t i = 0; i < k; ++i) stage_[i] = u[i] + 0.5 * delta * k2_[i];
  rhs(stage_, k3_);
  for (std::size_t i = 0; i < k; ++i) stage_[i] = u[i] + delta * k3_[i];
  rhs(stage_, k4_);
  for (std::size_t i = 0; i < k; ++i) out[i] = (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]) / 6.0;
}

std::vector<Complex> TruncatedModel::truncated_rhs(const ReducedState& state) {
  std::vector<Complex> out(state.u.size());
  for (const Complex& c : state.u) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
      throw InvalidStateError("truncated_rhs: non-finite state");
    }
  }
  rhs(state.u, out);
  return out;
}

std::vector<Complex> TruncatedModel::rdelta(const ReducedState& state, double delta) {
  if (!(delta > 0.0)) throw ArgumentError("rdelta: delta must be positive");
  std::vector<Complex> out(state.u.size());
  increment(state.u, delta, out);
  return out;
}

ReducedState TruncatedModel::rdelta_step(const ReducedState& state, double delta) {
  const std::vector<Complex> r = rdelta(state, delta);
  ReducedState next = state;
  for (std::size_t i = 0; i < r.size(); ++i) next.u[i] += delta * r[i];
  return next;
}

ModelErrorSeries::ModelErrorSeries(int modes, double delta, std::vector<Complex> values)
    : modes_(modes), delta_(delta), values_(std::move(values)) {
  if (modes <= 0) throw ArgumentError("ModelErrorSeries: K must be positive");
  if (values_.size() % static_cast<std::size_t>(modes) != 0) {
    throw ArgumentError("ModelErrorSeries: value count is not a multiple of K");
  }
}

ModelErrorSeries extract_model_error(const ObservationSeries& series) {
  TruncatedModel model(series.meta().period, series.modes());
  return extract_model_error(series, model);
}

ModelErrorSeries extract_model_error(const ObservationSeries& series, TruncatedModel& model) {
  if (series.transitions() < 1) throw ArgumentError("extract_model_error: need T >= 1");
  if (model.modes() != series.modes()) throw ArgumentError("extract_model_error: K mismatch");
  const auto k = static_cast<std::size_t>(series.modes());
  const double delta = series.delta();
  std::vector<Complex> z(series.transitions() * k);
  std::vector<Complex> r(k);
  for (std::size_t n = 0; n < series.transitions(); ++n) {
    const auto u0 = series.state(n);
    const auto u1 = series.state(n + 1);
    model.increment(u0, delta, r);
    for (std::size_t i = 0; i < k; ++i) z[n * k + i] = (u1[i] - u0[i]) / delta - r[i];
  }
  return ModelErrorSeries(series.modes(), delta, std::move(z));
}

ObservationSeries apply_model_error(const ReducedState& u0, const ModelErrorSeries& z, TruncatedModel& model) {
  const auto k = static_cast<std::size_t>(z.modes());
  if (u0.u.size() != k || model.modes() != z.modes()) throw ArgumentError("apply_model_error: K mismatch");
  const double delta = z.delta();
  std::vector<Complex> out;
  out.reserve((z.size() + 1) * k);
  out.insert(out.end(), u0.u.begin(), u0.u.end());
  std::vector<Complex> cur = u0.u, r(k);
  for (std::size_t n = 1; n <= z.size(); ++n) {
    model.increment(cur, delta, r);
    const auto zn = z.at(n);
    for (std::size_t i = 0; i < k; ++i) cur[i] = cur[i] + delta * r[i] + delta * zn[i];
    out.insert(out.end(), cur.begin(), cur.end());
  }
  SeriesMeta meta;
  meta.period = model.period();
  return ObservationSeries(z.modes(), delta, std::move(out), std::move(meta));
}

void save(const ModelErrorSeries& z, const std::filesystem::path& path) {
  io::write_series(path, kModelErrorMagic, static_cast<std::uint32_t>(z.modes()), z.size(), z.delta(), z.values());
}

ModelErrorSeries load_model_error(const std::filesystem::path& path) {
  io::RawSeries raw = io::read_series(path, kModelErrorMagic, 0);
  return ModelErrorSeries(static_cast<int>(raw.modes), raw.delta, std::move(raw.payload));
}

}  // namespace ksnarmax
