#include "ksnarmax/config.hpp"

#include <fstream>

#include "ksnarmax/errors.hpp"
#include "ksnarmax/narmax.hpp"

namespace ksnarmax {

namespace {

nlohmann::json orders_json(const NarmaxOrders& o) { return o.label(); }

NarmaxOrders orders_from(const nlohmann::json& j) {
  try {
    return NarmaxOrders::parse(j.get<std::string>());
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  need(full.period > 0.0, "L must be positive");
  need(full.observed_modes >= 1, "K must be >= 1");
  need(full.dt > 0.0 && full.delta >= full.dt, "need 0 < dt <= delta");
  need(full.transient >= 0.0 && full.duration >= 0.0, "transient and duration must be non-negative");
  need(t_lag > 0.0, "T_lag must be positive");
  need(acf_pieces >= 1 && forecast_initial_conditions >= 1 && forecast_ensemble >= 1, "counts must be positive");
  need(static_cast<double>(acf_piece_length) * full.delta > t_lag, "acf_piece_length * delta must exceed T_lag");
  need(pdf_bins >= 2, "pdf_bins must be >= 2");
  try {
    for (const auto& o : orders_grid) o.validate();
    selected_orders.validate();
    armax_orders.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.orders_grid = default_order_grid();
  if (name == "paper") return c;
  if (name == "fast") {
    c.preset = "fast";
    c.full.transient = 1e3;
    c.full.duration = 5e3;
    c.stability_start = 2000;
    c.acf_pieces = 50;
    c.acf_piece_length = 2000;
    c.forecast_initial_conditions = 100;
    c.forecast_ensemble = 5;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "' (expected paper or fast)");
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& o : c.orders_grid) grid.push_back(orders_json(o));
  return {{"preset", c.preset},
          {"L", c.full.period},
          {"K", c.full.observed_modes},
          {"N_full", c.full.grid_size},
          {"dt", c.full.dt},
          {"delta", c.full.delta},
          {"transient", c.full.transient},
          {"duration", c.full.duration},
          {"initial_condition", c.full.initial_condition},
          {"orders_grid", grid},
          {"selected_orders", orders_json(c.selected_orders)},
          {"armax_orders", orders_json(c.armax_orders)},
          {"seed", c.seed},
          {"stability_start", c.stability_start},
          {"acf_pieces", c.acf_pieces},
          {"acf_piece_length", c.acf_piece_length},
          {"forecast_initial_conditions", c.forecast_initial_conditions},
          {"forecast_ensemble", c.forecast_ensemble},
          {"T_lag", c.t_lag},
          {"pdf_bins", c.pdf_bins},
          {"output_dir", c.output_dir.string()}};
}

ExperimentConfig config_from_json(const nlohmann::json& j, const ExperimentConfig& base) {
  ExperimentConfig c = base;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("preset", c.preset);
    get("L", c.full.period);
    get("K", c.full.observed_modes);
    get("N_full", c.full.grid_size);
    get("dt", c.full.dt);
    get("delta", c.full.delta);
    get("transient", c.full.transient);
    get("duration", c.full.duration);
    get("initial_condition", c.full.initial_condition);
    if (j.contains("orders_grid")) {
      c.orders_grid.clear();
      for (const auto& o : j.at("orders_grid")) c.orders_grid.push_back(orders_from(o));
    }
    if (j.contains("selected_orders")) c.selected_orders = orders_from(j.at("selected_orders"));
    if (j.contains("armax_orders")) c.armax_orders = orders_from(j.at("armax_orders"));
    get("seed", c.seed);
    get("stability_start", c.stability_start);
    get("acf_pieces", c.acf_pieces);
    get("acf_piece_length", c.acf_piece_length);
    get("forecast_initial_conditions", c.forecast_initial_conditions);
    get("forecast_ensemble", c.forecast_ensemble);
    get("T_lag", c.t_lag);
    get("pdf_bins", c.pdf_bins);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  const std::string preset = j.value("preset", std::string("paper"));
  return config_from_json(j, preset_config(preset));
}

void save(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << to_json(config).dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace ksnarmax
