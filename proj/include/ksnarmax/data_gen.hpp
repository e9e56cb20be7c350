#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ksnarmax/spectral.hpp"

namespace ksnarmax {

/// L = 2*pi / sqrt(0.085), three linearly unstable modes.
double paper_period();

struct FullModelConfig {
  double period = paper_period();
  int observed_modes = 5;
  /// 0 selects N = 32 * floor(L / 2pi).
  int grid_size = 0;
  double dt = 1e-3;
  double delta = 0.1;
  double transient = 1e4;
  double duration = 5e4;
  std::string initial_condition = "paper";

  int resolved_grid_size() const;

  friend bool operator==(const FullModelConfig&, const FullModelConfig&) = default;
};

/// Provenance of an observation series.
struct SeriesMeta {
  double period = 0.0;
  int grid_size = 0;
  double dt = 0.0;
  double transient = 0.0;
  std::string initial_condition;
  std::string provenance;

  friend bool operator==(const SeriesMeta&, const SeriesMeta&) = default;
};

/// Samples v_1..v_K at t_n = n*delta, n = 0..T, stored row-major.
class ObservationSeries {
 public:
  ObservationSeries() = default;
  ObservationSeries(int modes, double delta, std::vector<Complex> samples, SeriesMeta meta = {});

  int modes() const noexcept { return modes_; }
  double delta() const noexcept { return delta_; }
  /// Number of stored time steps, T + 1.
  std::size_t size() const noexcept { return samples_.size() / static_cast<std::size_t>(modes_); }
  /// T, the number of transitions.
  std::size_t transitions() const noexcept { return size() - 1; }
  std::span<const Complex> state(std::size_t n) const {
    return {samples_.data() + n * static_cast<std::size_t>(modes_), static_cast<std::size_t>(modes_)};
  }
  /// Mode k in 1..K at step n.
  Complex at(std::size_t n, int k) const { return samples_[n * static_cast<std::size_t>(modes_) + static_cast<std::size_t>(k - 1)]; }
  const std::vector<Complex>& samples() const noexcept { return samples_; }
  const SeriesMeta& meta() const noexcept { return meta_; }

  /// Steps [first, first + count).
  ObservationSeries slice(std::size_t first, std::size_t count) const;
  /// Re v_k over all steps.
  std::vector<double> real_part(int k) const;

  friend bool operator==(const ObservationSeries&, const ObservationSeries&) = default;

 private:
  int modes_ = 0;
  double delta_ = 0.0;
  std::vector<Complex> samples_;
  SeriesMeta meta_;
};

/// Evaluates the named initial condition on x_n = nL/N and returns its half spectrum
/// with v_0 and v_{N/2} zeroed. Known names: "paper" for (1 + sin x) cos x.
SpectralField initial_condition(const std::string& name, const FourierGrid& grid);

using ProgressCallback = std::function<void(double fraction)>;

/// Integrates the full model with ETDRK4, drops the transient, then records modes
/// 1..K every delta/dt steps. Throws ConfigError for inconsistent timing and
/// IntegrationError (carrying the time) if the state becomes non-finite.
ObservationSeries run_full(const FullModelConfig& config, const ProgressCallback& progress = {});

/// Binary "KSOB" file plus a `<path>.meta.json` sidecar.
void save(const ObservationSeries& series, const std::filesystem::path& path);
ObservationSeries load_observations(const std::filesystem::path& path);

}  // namespace ksnarmax
