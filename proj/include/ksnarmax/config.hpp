#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "ksnarmax/aim_features.hpp"
#include "ksnarmax/data_gen.hpp"

namespace ksnarmax {

/// Everything a pipeline run depends on. Defaults are the paper preset.
struct ExperimentConfig {
  std::string preset = "paper";
  FullModelConfig full;
  std::vector<NarmaxOrders> orders_grid;
  NarmaxOrders selected_orders{0, 2, 1};
  NarmaxOrders armax_orders{2, 1, 0};
  std::uint64_t seed = 20160101;
  std::size_t stability_start = 20000;
  std::size_t acf_pieces = 100;  // N0 of the ACF comparison
  std::size_t acf_piece_length = 5000;
  std::size_t forecast_initial_conditions = 1000;  // N0 of the forecast
  std::size_t forecast_ensemble = 20;
  double t_lag = 50.0;
  int pdf_bins = 64;
  std::filesystem::path output_dir = "ksnarmax-out";

  /// Throws ConfigError naming the offending field.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// "paper" (full scale) or "fast" (duration 5e3, N0 = 100, N_ens = 5).
ExperimentConfig preset_config(const std::string& name);

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys keep the values of `base`.
ExperimentConfig config_from_json(const nlohmann::json& j, const ExperimentConfig& base = {});
ExperimentConfig load_config(const std::filesystem::path& path);
void save(const ExperimentConfig& config, const std::filesystem::path& path);

}  // namespace ksnarmax
