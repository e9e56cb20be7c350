#include "ksnarmax/data_gen.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "ksnarmax/errors.hpp"
#include "ksnarmax/etdrk4.hpp"
#include "ksnarmax/series_io.hpp"

namespace ksnarmax {

namespace {

constexpr std::string_view kObservationMagic = "KSOB";

std::size_t whole_steps(double span, double unit, const char* what) {
  if (span < 0.0 || !std::isfinite(span)) throw ConfigError(std::string(what) + " must be non-negative");
  const double ratio = span / unit;
  const double n = std::round(ratio);
  if (std::abs(n * unit - span) > 1e-12 * std::max(span, unit) * std::max(1.0, n)) {
    std::ostringstream os;
    os << what << " = " << span << " is not an integer multiple of " << unit;
    throw ConfigError(os.str());
  }
  return static_cast<std::size_t>(n);
}

bool finite(std::span<const Complex> v) {
  for (const Complex& c : v) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  }
  return true;
}

std::filesystem::path sidecar(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta.json");
}

}  // namespace

double paper_period() { return 2.0 * std::numbers::pi / std::sqrt(0.085); }

int FullModelConfig::resolved_grid_size() const {
  if (grid_size > 0) return grid_size;
  return 32 * static_cast<int>(std::floor(period / (2.0 * std::numbers::pi)));
}

ObservationSeries::ObservationSeries(int modes, double delta, std::vector<Complex> samples, SeriesMeta meta)
    : modes_(modes), delta_(delta), samples_(std::move(samples)), meta_(std::move(meta)) {
  if (modes <= 0) throw ArgumentError("ObservationSeries: K must be positive");
  if (!(delta > 0.0)) throw ArgumentError("ObservationSeries: delta must be positive");
  if (samples_.empty() || samples_.size() % static_cast<std::size_t>(modes) != 0) {
    throw ArgumentError("ObservationSeries: sample count is not a positive multiple of K");
  }
  if (!finite(samples_)) throw InvalidStateError("ObservationSeries: non-finite sample");
}

ObservationSeries ObservationSeries::slice(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > size()) throw ArgumentError("ObservationSeries::slice: out of range");
  const auto k = static_cast<std::size_t>(modes_);
  std::vector<Complex> s(samples_.begin() + static_cast<std::ptrdiff_t>(first * k),
                         samples_.begin() + static_cast<std::ptrdiff_t>((first + count) * k));
  return ObservationSeries(modes_, delta_, std::move(s), meta_);
}

std::vector<double> ObservationSeries::real_part(int k) const {
  std::vector<double> out(size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = at(n, k).real();
  return out;
}

SpectralField initial_condition(const std::string& name, const FourierGrid& grid) {
  if (name != "paper") throw ConfigError("unknown initial condition '" + name + "'");
  const int n = grid.size();
  std::vector<double> values(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double x = j * grid.period() / n;
    values[static_cast<std::size_t>(j)] = (1.0 + std::sin(x)) * std::cos(x);
  }
  SpectralField field = SpectralField::zeros(grid);
  for (int k = 1; k < grid.half_size() - 1; ++k) {
    Complex sum{};
    for (int j = 0; j < n; ++j) {
      sum += values[static_cast<std::size_t>(j)] * std::polar(1.0, -2.0 * std::numbers::pi * k * j / n);
    }
    field.coeffs[static_cast<std::size_t>(k)] = sum / static_cast<double>(n);
  }
  return field;
}

ObservationSeries run_full(const FullModelConfig& config, const ProgressCallback& progress) {
  if (!(config.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(config.delta > 0.0)) throw ConfigError("delta must be positive");
  const std::size_t stride = whole_steps(config.delta, config.dt, "delta");
  if (stride == 0) throw ConfigError("delta must be at least dt");
  const std::size_t transient_steps = whole_steps(config.transient, config.dt, "transient");
  const std::size_t samples = whole_steps(config.duration, config.delta, "duration");
  const int grid_size = config.resolved_grid_size();
  const FourierGrid grid(config.period, grid_size);
  if (config.observed_modes < 1 || config.observed_modes >= grid.half_size() - 1) {
    throw ConfigError("observed modes must lie in 1..N/2-2");
  }

  SpectralField state = initial_condition(config.initial_condition, grid);
  Etdrk4Integrator integrator(grid, config.dt);
  const auto k_obs = static_cast<std::size_t>(config.observed_modes);
  const std::size_t total_steps = transient_steps + samples * stride;
  std::size_t done = 0;

  auto advance = [&](std::size_t steps) {
    for (std::size_t i = 0; i < steps; ++i) integrator.step(state.coeffs);
    done += steps;
    if (!finite(state.coeffs)) {
      const double t = static_cast<double>(done) * config.dt;
      std::ostringstream os;
      os << "full model blew up before t = " << t;
      throw IntegrationError(os.str(), t);
    }
  };

  // Chunk the transient so blow-ups are reported near where they happen.
  const std::size_t chunk = std::max<std::size_t>(stride, 1000);
  for (std::size_t left = transient_steps; left > 0;) {
    const std::size_t n = std::min(chunk, left);
    advance(n);
    left -= n;
    if (progress) progress(static_cast<double>(done) / static_cast<double>(std::max<std::size_t>(total_steps, 1)));
  }

  std::vector<Complex> out;
  out.reserve((samples + 1) * k_obs);
  auto record = [&] { out.insert(out.end(), state.coeffs.begin() + 1, state.coeffs.begin() + 1 + static_cast<std::ptrdiff_t>(k_obs)); };
  record();
  for (std::size_t n = 0; n < samples; ++n) {
    advance(stride);
    record();
    if (progress && (n + 1) % 10000 == 0) {
      progress(static_cast<double>(done) / static_cast<double>(total_steps));
    }
  }

  SeriesMeta meta;
  meta.period = config.period;
  meta.grid_size = grid_size;
  meta.dt = config.dt;
  meta.transient = config.transient;
  meta.initial_condition = config.initial_condition;
  std::ostringstream cfg;
  cfg.precision(17);
  cfg << "L=" << config.period << ";N=" << grid_size << ";dt=" << config.dt << ";delta=" << config.delta
      << ";transient=" << config.transient << ";duration=" << config.duration << ";K=" << config.observed_modes
      << ";ic=" << config.initial_condition;
  meta.provenance = io::hex64(io::hash_samples(out, io::fnv1a(cfg.str())));
  return ObservationSeries(config.observed_modes, config.delta, std::move(out), std::move(meta));
}

void save(const ObservationSeries& series, const std::filesystem::path& path) {
  io::write_series(path, kObservationMagic, static_cast<std::uint32_t>(series.modes()), series.transitions(),
                   series.delta(), series.samples());
  const SeriesMeta& m = series.meta();
  nlohmann::json j = {{"L", m.period},
                      {"N_full", m.grid_size},
                      {"dt", m.dt},
                      {"transient", m.transient},
                      {"initial_condition", m.initial_condition},
                      {"provenance", m.provenance}};
  std::ofstream out(sidecar(path));
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + sidecar(path).string());
}

ObservationSeries load_observations(const std::filesystem::path& path) {
  io::RawSeries raw = io::read_series(path, kObservationMagic, 1);
  SeriesMeta meta;
  std::ifstream in(sidecar(path));
  if (in) {
    try {
      const nlohmann::json j = nlohmann::json::parse(in);
      meta.period = j.at("L").get<double>();
      meta.grid_size = j.at("N_full").get<int>();
      meta.dt = j.at("dt").get<double>();
      meta.transient = j.at("transient").get<double>();
      meta.initial_condition = j.at("initial_condition").get<std::string>();
      meta.provenance = j.at("provenance").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(sidecar(path).string() + ": " + e.what());
    }
  }
  return ObservationSeries(static_cast<int>(raw.modes), raw.delta, std::move(raw.payload), std::move(meta));
}

}  // namespace ksnarmax
