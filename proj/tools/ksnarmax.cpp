#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ksnarmax/config.hpp"
#include "ksnarmax/data_gen.hpp"
#include "ksnarmax/errors.hpp"
#include "ksnarmax/narmax.hpp"
#include "ksnarmax/reduced_model.hpp"
#include "ksnarmax/series_io.hpp"
#include "ksnarmax/validation.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ksnarmax;

namespace {

constexpr const char* kVersion = "0.1.0";

/// Thrown for bad invocations; maps to exit code 2.
struct UsageError : Error {
  using Error::Error;
};

struct Common {
  std::string config_path;
  std::string preset = "paper";
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg = preset_config(c.preset);
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw UsageError("cannot open config '" + c.config_path + "'");
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError("config '" + c.config_path + "': " + e.what());
    }
    cfg = config_from_json(j, cfg);
  }
  if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

fs::path out_path(const ExperimentConfig& cfg, const std::string& given, const std::string& fallback) {
  return given.empty() ? cfg.output_dir / fallback : fs::path(given);
}

void require(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw UsageError("missing input '" + path.string() + "'; produce it with `ksnarmax " + producer + "`");
  }
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return io::hex64(io::fnv1a(bytes));
}

/// Records what a subcommand read and wrote; no timestamps so reruns compare equal.
class Manifest {
 public:
  Manifest(std::string command, const ExperimentConfig& cfg) : command_(std::move(command)), cfg_(cfg) {}
  void input(const fs::path& p) { inputs_[p.string()] = file_hash(p); }
  void output(const fs::path& p) { outputs_[p.string()] = file_hash(p); }
  void note(const std::string& key, json value) { extra_[key] = std::move(value); }

  void write() const {
    fs::create_directories(cfg_.output_dir);
    json j{{"command", command_}, {"version", kVersion},   {"config", to_json(cfg_)},
           {"inputs", inputs_},   {"outputs", outputs_},   {"results", extra_}};
    std::ofstream(cfg_.output_dir / ("manifest-" + command_ + ".json")) << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  ExperimentConfig cfg_;
  json inputs_ = json::object();
  json outputs_ = json::object();
  json extra_ = json::object();
};

void log(const Common& c, const std::string& msg) {
  if (!c.quiet) std::cerr << msg << '\n';
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

ObservationSeries load_data(const fs::path& p) {
  require(p, "simulate-full");
  return load_observations(p);
}

ModelErrorSeries load_z(const fs::path& p) {
  require(p, "extract");
  return load_model_error(p);
}

NarmaxParams load_params(const fs::path& p) {
  require(p, "fit");
  return load_model(p);
}

NarmaxParams truncated_params(const ObservationSeries& data) {
  return NarmaxParams::zeros({0, 1, 0}, Ansatz::narmax, data.modes(), data.delta(), data.meta().period);
}

std::string model_file_name(const NarmaxOrders& o, Ansatz a) {
  return (a == Ansatz::armax ? "model_armax_" : "model_") + o.label() + ".json";
}

// ---- stages --------------------------------------------------------------

ObservationSeries stage_simulate_full(const Common& c, const ExperimentConfig& cfg, const fs::path& out) {
  log(c, "integrating full model (transient " + std::to_string(cfg.full.transient) + ", duration " +
             std::to_string(cfg.full.duration) + ")");
  int last = -1;
  ObservationSeries data = run_full(cfg.full, [&](double f) {
    const int pct = static_cast<int>(f * 100.0);
    if (!c.quiet && pct / 10 != last / 10) {
      std::cerr << "  " << pct << "%\n";
      last = pct;
    }
  });
  ensure_parent(out);
  save(data, out);
  return data;
}

struct LongRun {
  std::string name;
  std::optional<ObservationSeries> series;
  std::optional<std::size_t> unstable_step;
};

LongRun long_run(const std::string& name, const NarmaxParams& params, const ObservationSeries& data,
                 std::size_t start, std::size_t steps, std::uint64_t seed) {
  const std::size_t m = params.orders.window();
  start = std::min(start, data.size() - m);
  SimulationResult res = simulate(params, data.slice(start, m), steps, seed);
  LongRun r{name, std::nullopt, res.unstable_step};
  if (res.stable()) r.series = res.as_series();
  return r;
}

/// Writes pdf, ACF and energy CSVs for the data and every stable run; returns a JSON summary.
json write_statistics(const ExperimentConfig& cfg, const ObservationSeries& data, const std::vector<LongRun>& runs,
                      const std::string& prefix, Manifest& manifest) {
  json summary = json::object();
  const auto lag = static_cast<std::size_t>(std::llround(cfg.t_lag / data.delta()));
  for (int k = 1; k <= data.modes(); ++k) {
    const std::vector<double> ref = data.real_part(k);
    double var = 0.0;
    for (double x : ref) var += x * x;
    const double sd = std::sqrt(var / static_cast<double>(ref.size()));
    std::vector<DensityCurve> curves{histogram_density(ref, -4 * sd, 4 * sd, cfg.pdf_bins)};
    std::vector<AcfCurve> acfs{acf(ref, lag, k)};
    std::vector<std::string> names{"data"};
    for (const LongRun& r : runs) {
      if (!r.series) continue;
      const std::vector<double> x = r.series->real_part(k);
      curves.push_back(histogram_density(x, -4 * sd, 4 * sd, cfg.pdf_bins));
      acfs.push_back(acf(x, lag, k));
      names.push_back(r.name);
      summary[r.name]["pdf_l1"].push_back(pdf_l1_distance(ref, x, cfg.pdf_bins));
    }
    const fs::path pdf = cfg.output_dir / (prefix + "_pdf_k" + std::to_string(k) + ".csv");
    const fs::path ac = cfg.output_dir / (prefix + "_acf_k" + std::to_string(k) + ".csv");
    write_density_csv(curves, names, pdf);
    write_acf_csv(acfs, names, data.delta(), ac);
    manifest.output(pdf);
    manifest.output(ac);
  }

  const fs::path energy = cfg.output_dir / (prefix + "_energy.csv");
  std::ofstream e(energy);
  e << "source,k,mean_energy,mean_energy_se,cov_with_v2,cov_with_v2_se\n";
  auto emit = [&](const std::string& name, const ObservationSeries& s) {
    const EnergyStats st = energy_stats(s);
    for (int k = 1; k <= s.modes(); ++k) {
      const bool has2 = s.modes() >= 2;
      e << name << ',' << k << ',' << st.mean[static_cast<std::size_t>(k - 1)] << ','
        << st.mean_se[static_cast<std::size_t>(k - 1)] << ',' << (has2 ? st.covariance(2, k) : 0.0) << ','
        << (has2 ? st.covariance_se(2, k) : 0.0) << '\n';
      summary[name]["mean_energy"].push_back(st.mean[static_cast<std::size_t>(k - 1)]);
    }
  };
  emit("data", data);
  for (const LongRun& r : runs) {
    if (r.series) {
      emit(r.name, *r.series);
    } else {
      summary[r.name]["unstable_step"] = *r.unstable_step;
    }
  }
  e.close();
  manifest.output(energy);
  return summary;
}

void write_table1(const ScanReport& rep, const fs::path& path) {
  std::ofstream out(path);
  const int k = rep.cells.empty() ? 0 : rep.cells.front().params.modes;
  out << "orders,stable,unstable_step";
  for (int i = 1; i <= k; ++i) out << ",sigma2_" << i;
  out << ",shortlisted";
  for (int i = 1; i <= k; ++i) out << ",D_" << i;
  out << '\n';
  out.precision(6);
  for (const ScanCell& c : rep.cells) {
    out << c.orders.label() << ',' << (c.stable ? 1 : 0) << ','
        << (c.unstable_step ? std::to_string(*c.unstable_step) : "");
    for (double s : c.params.sigma2) out << ',' << s;
    out << ',' << (c.shortlisted ? 1 : 0);
    for (int i = 0; i < k; ++i) {
      out << ',';
      if (c.shortlisted) out << c.acf_distance[static_cast<std::size_t>(i)];
    }
    out << '\n';
  }
}

void write_table3(const NarmaxParams& p, const fs::path& path) {
  std::ofstream out(path);
  out.precision(8);
  out << "k,mu";
  for (int j = 1; j <= p.orders.p; ++j) out << ",a" << j;
  for (int j = 0; j < p.orders.r; ++j) out << ",b" << j;
  for (int j = 1; j <= p.layout().c_count(); ++j) out << ",c" << j;
  for (int j = 1; j <= p.orders.q; ++j) out << ",d" << j;
  out << ",sigma2\n";
  for (int k = 1; k <= p.modes; ++k) {
    out << k;
    for (double v : p.theta[static_cast<std::size_t>(k - 1)]) out << ',' << v;
    out << ',' << p.sigma2[static_cast<std::size_t>(k - 1)] << '\n';
  }
}

ScanOptions scan_options(const ExperimentConfig& cfg) {
  ScanOptions o;
  o.grid = cfg.orders_grid;
  o.stability_start = cfg.stability_start;
  o.seed = stream_seed(cfg.seed, 1);
  o.acf.pieces = cfg.acf_pieces;
  o.acf.t_lag = cfg.t_lag;
  o.acf.piece_length = cfg.acf_piece_length;
  return o;
}

ForecastOptions forecast_options(const ExperimentConfig& cfg, std::size_t ensemble, std::uint64_t stream) {
  ForecastOptions o;
  o.initial_conditions = cfg.forecast_initial_conditions;
  o.ensemble = ensemble;
  o.t_lag = cfg.t_lag;
  o.seed = stream_seed(cfg.seed, stream);
  return o;
}

/// Runs one forecast; a ValidationError is reported and returned as nullopt.
std::optional<ForecastReport> try_forecast(const Common& c, const std::string& name, const NarmaxParams& params,
                                           const ObservationSeries& data, const ForecastOptions& opts) {
  NarmaxForecaster f(params);
  try {
    return ensemble_forecast(f, data, opts);
  } catch (const ValidationError& e) {
    log(c, "forecast " + name + ": " + e.what());
    return std::nullopt;
  }
}

int reproduce_paper(const Common& c, const ExperimentConfig& cfg, bool regenerate) {
  fs::create_directories(cfg.output_dir);
  Manifest manifest("reproduce-paper", cfg);
  bool all_ok = true;

  const fs::path data_path = cfg.output_dir / "data.ksob";
  std::optional<ObservationSeries> cached;
  if (!regenerate && fs::exists(data_path)) {
    ObservationSeries d = load_observations(data_path);
    const SeriesMeta& m = d.meta();
    const bool same = m.period == cfg.full.period && m.dt == cfg.full.dt && m.transient == cfg.full.transient &&
                      d.modes() == cfg.full.observed_modes && d.delta() == cfg.full.delta &&
                      m.grid_size == cfg.full.resolved_grid_size() &&
                      m.initial_condition == cfg.full.initial_condition &&
                      d.transitions() == static_cast<std::size_t>(std::llround(cfg.full.duration / cfg.full.delta));
    if (same) {
      log(c, "reusing " + data_path.string());
      cached = std::move(d);
    }
  }
  const ObservationSeries data = cached ? std::move(*cached) : stage_simulate_full(c, cfg, data_path);
  manifest.output(data_path);

  const ModelErrorSeries z = extract_model_error(data);
  const fs::path z_path = cfg.output_dir / "model_error.ksmz";
  save(z, z_path);
  manifest.output(z_path);

  log(c, "scanning orders");
  const ScanReport rep = scan_orders(data, z, scan_options(cfg));
  write_table1(rep, cfg.output_dir / "table1.csv");
  manifest.output(cfg.output_dir / "table1.csv");
  manifest.note("scan_selected", rep.selected ? json(rep.selected->label()) : json(nullptr));

  log(c, "fitting " + cfg.selected_orders.label());
  const NarmaxParams model = fit(data, z, cfg.selected_orders);
  const fs::path model_path = cfg.output_dir / model_file_name(cfg.selected_orders, Ansatz::narmax);
  save(model, model_path);
  write_table3(model, cfg.output_dir / "table3.csv");
  manifest.output(model_path);
  manifest.output(cfg.output_dir / "table3.csv");

  const auto acf_d = model_acf_distance(
      model, data,
      AcfComparison{cfg.acf_pieces, cfg.t_lag, cfg.acf_piece_length, stream_seed(cfg.seed, 2)});
  {
    std::ofstream t2(cfg.output_dir / "table2.csv");
    t2 << "orders";
    for (int k = 1; k <= data.modes(); ++k) t2 << ",D_" << k;
    t2 << '\n' << cfg.selected_orders.label();
    if (acf_d) {
      for (double d : *acf_d) t2 << ',' << d;
    } else {
      for (int k = 1; k <= data.modes(); ++k) t2 << ",unstable";
    }
    t2 << '\n';
  }
  manifest.output(cfg.output_dir / "table2.csv");
  if (!acf_d) {
    log(c, "model " + cfg.selected_orders.label() + " blew up during the ACF comparison");
    all_ok = false;
  }

  log(c, "long runs");
  const std::size_t steps = data.transitions();
  std::vector<LongRun> runs;
  runs.push_back(long_run("narmax", model, data, cfg.stability_start, steps, stream_seed(cfg.seed, 3)));
  runs.push_back(long_run("truncated", truncated_params(data), data, cfg.stability_start, steps, 0));
  if (!runs.front().series) all_ok = false;
  manifest.note("statistics", write_statistics(cfg, data, runs, "fig2_3", manifest));

  log(c, "forecasts");
  for (std::size_t ens : {std::size_t{1}, std::size_t{5}, cfg.forecast_ensemble}) {
    const auto r = try_forecast(c, "narmax", model, data, forecast_options(cfg, ens, 4));
    const fs::path p = cfg.output_dir / ("fig5_forecast_ens" + std::to_string(ens) + ".csv");
    if (r) {
      write_forecast_csv(*r, p);
      manifest.output(p);
      manifest.note("forecast_ens" + std::to_string(ens),
                    {{"rmse_below_2_until", r->rmse_below_until(2.0)}, {"ancr_above_0.9_until", r->ancr_above_until(0.9)}});
    } else {
      all_ok = false;
    }
  }
  if (const auto r = try_forecast(c, "truncated", truncated_params(data), data, forecast_options(cfg, 1, 5))) {
    write_forecast_csv(*r, cfg.output_dir / "fig5_forecast_truncated.csv");
    manifest.output(cfg.output_dir / "fig5_forecast_truncated.csv");
  }

  log(c, "ARMAX ablation");
  std::vector<LongRun> armax_runs;
  for (const NarmaxOrders& o : {cfg.armax_orders, cfg.selected_orders}) {
    const NarmaxParams a = fit(data, z, o, Ansatz::armax);
    save(a, cfg.output_dir / model_file_name(o, Ansatz::armax));
    manifest.output(cfg.output_dir / model_file_name(o, Ansatz::armax));
    armax_runs.push_back(long_run("armax_" + o.label(), a, data, cfg.stability_start, steps, stream_seed(cfg.seed, 6)));
  }
  manifest.note("armax", write_statistics(cfg, data, armax_runs, "fig6", manifest));

  manifest.write();
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NARMAX reduced models of the Kuramoto-Sivashinsky equation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);

  Common common;
  app.add_option("-c,--config", common.config_path, "JSON config file");
  app.add_option("--preset", common.preset, "paper or fast")->check(CLI::IsMember({"paper", "fast"}));
  app.add_option("-o,--output-dir", common.output_dir, "Directory for outputs");
  app.add_option("--seed", common.seed, "Root seed");
  app.add_flag("-q,--quiet", common.quiet, "No progress messages");

  std::string data_in, z_in, model_in, out;
  std::string orders_text, ansatz_text = "narmax";
  std::optional<double> duration, transient;
  std::size_t steps = 0, start = 0, ensemble = 0, initial_conditions = 0;
  bool truncated = false, regenerate = false;

  auto* sim_full = app.add_subcommand("simulate-full", "Integrate the full model and record observations");
  sim_full->add_option("--duration", duration, "Recorded time span");
  sim_full->add_option("--transient", transient, "Discarded initial time span");
  sim_full->add_option("--out", out, "Output series (default <output-dir>/data.ksob)");

  auto* extract = app.add_subcommand("extract", "Compute the model error series");
  extract->add_option("--data", data_in, "Observation series");
  extract->add_option("--out", out, "Output (default <output-dir>/model_error.ksmz)");

  auto* fit_cmd = app.add_subcommand("fit", "Fit one NARMAX or ARMAX model");
  fit_cmd->add_option("--orders", orders_text, "p,r,q (default: selected_orders from the config)");
  fit_cmd->add_option("--ansatz", ansatz_text, "narmax or armax")->check(CLI::IsMember({"narmax", "armax"}));
  fit_cmd->add_option("--data", data_in, "Observation series");
  fit_cmd->add_option("--model-error", z_in, "Model error series");
  fit_cmd->add_option("--out", out, "Model JSON");

  auto* scan = app.add_subcommand("scan-orders", "Fit the order grid, screen stability, compare ACFs");
  scan->add_option("--data", data_in, "Observation series");
  scan->add_option("--model-error", z_in, "Model error series");
  scan->add_option("--ansatz", ansatz_text, "narmax or armax")->check(CLI::IsMember({"narmax", "armax"}));
  scan->add_option("--out", out, "Table CSV (default <output-dir>/table1.csv)");

  auto* sim_red = app.add_subcommand("simulate-reduced", "Run a fitted model from a data window");
  sim_red->add_option("--model", model_in, "Model JSON");
  sim_red->add_flag("--truncated", truncated, "Run the truncated model instead");
  sim_red->add_option("--data", data_in, "Series providing the initial window");
  sim_red->add_option("--start", start, "Index of the first window state");
  sim_red->add_option("--steps", steps, "Steps to run (default: data length)");
  sim_red->add_option("--out", out, "Output series (default <output-dir>/reduced.ksob)");

  auto* validate_cmd = app.add_subcommand("validate", "Long-run pdf, ACF and energy statistics");
  validate_cmd->add_option("--model", model_in, "Model JSON");
  validate_cmd->add_option("--data", data_in, "Observation series");
  validate_cmd->add_option("--steps", steps, "Length of the model run (default: data length)");

  auto* forecast_cmd = app.add_subcommand("forecast", "Ensemble forecast skill");
  forecast_cmd->add_option("--model", model_in, "Model JSON");
  forecast_cmd->add_flag("--truncated", truncated, "Forecast with the truncated model");
  forecast_cmd->add_option("--data", data_in, "Observation series");
  forecast_cmd->add_option("--ensemble", ensemble, "N_ens (default from config)");
  forecast_cmd->add_option("--initial-conditions", initial_conditions, "N_0 (default from config)");
  forecast_cmd->add_option("--out", out, "CSV (default <output-dir>/forecast.csv)");

  auto* repro = app.add_subcommand("reproduce-paper", "Run every stage and write the table and figure CSVs");
  repro->add_flag("--regenerate", regenerate, "Integrate the full model even if matching data exists");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    ExperimentConfig cfg = resolve_config(common);
    if (duration) cfg.full.duration = *duration;
    if (transient) cfg.full.transient = *transient;
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    const fs::path data_path = out_path(cfg, data_in, "data.ksob");
    const fs::path z_path = out_path(cfg, z_in, "model_error.ksmz");

    if (*sim_full) {
      Manifest m("simulate-full", cfg);
      const fs::path p = out_path(cfg, out, "data.ksob");
      stage_simulate_full(common, cfg, p);
      m.output(p);
      m.write();
      return 0;
    }
    if (*extract) {
      Manifest m("extract", cfg);
      const ObservationSeries data = load_data(data_path);
      m.input(data_path);
      const fs::path p = out_path(cfg, out, "model_error.ksmz");
      ensure_parent(p);
      save(extract_model_error(data), p);
      m.output(p);
      m.write();
      return 0;
    }
    if (*fit_cmd) {
      Manifest m("fit", cfg);
      const NarmaxOrders orders = orders_text.empty() ? cfg.selected_orders : NarmaxOrders::parse(orders_text);
      const Ansatz ansatz = parse_ansatz(ansatz_text);
      const ObservationSeries data = load_data(data_path);
      const ModelErrorSeries z = load_z(z_path);
      m.input(data_path);
      m.input(z_path);
      const NarmaxParams params = fit(data, z, orders, ansatz);
      const fs::path p = out_path(cfg, out, model_file_name(orders, ansatz));
      ensure_parent(p);
      save(params, p);
      m.output(p);
      m.write();
      return 0;
    }
    if (*scan) {
      Manifest m("scan-orders", cfg);
      const ObservationSeries data = load_data(data_path);
      const ModelErrorSeries z = load_z(z_path);
      m.input(data_path);
      m.input(z_path);
      ScanOptions opts = scan_options(cfg);
      opts.ansatz = parse_ansatz(ansatz_text);
      const ScanReport rep = scan_orders(data, z, opts);
      const fs::path p = out_path(cfg, out, "table1.csv");
      ensure_parent(p);
      write_table1(rep, p);
      m.output(p);
      m.note("selected", rep.selected ? json(rep.selected->label()) : json(nullptr));
      m.write();
      if (!rep.selected) {
        std::cerr << "no stable model in the grid\n";
        return 1;
      }
      std::cout << rep.selected->label() << '\n';
      return 0;
    }
    if (*sim_red) {
      Manifest m("simulate-reduced", cfg);
      const ObservationSeries data = load_data(data_path);
      m.input(data_path);
      const fs::path mp = out_path(cfg, model_in, model_file_name(cfg.selected_orders, Ansatz::narmax));
      const NarmaxParams params = truncated ? truncated_params(data) : load_params(mp);
      if (!truncated) m.input(mp);
      const std::size_t m_len = params.orders.window();
      if (start + m_len > data.size()) throw UsageError("--start leaves fewer than " + std::to_string(m_len) + " window states");
      const SimulationResult res =
          simulate(params, data.slice(start, m_len), steps > 0 ? steps : data.transitions(), stream_seed(cfg.seed, 7));
      const fs::path p = out_path(cfg, out, "reduced.ksob");
      ensure_parent(p);
      save(res.as_series(), p);
      m.output(p);
      m.note("unstable_step", res.unstable_step ? json(*res.unstable_step) : json(nullptr));
      m.write();
      if (!res.stable()) {
        std::cerr << "run blew up at step " << *res.unstable_step << '\n';
        return 1;
      }
      return 0;
    }
    if (*validate_cmd) {
      Manifest m("validate", cfg);
      const ObservationSeries data = load_data(data_path);
      const fs::path mp = out_path(cfg, model_in, model_file_name(cfg.selected_orders, Ansatz::narmax));
      const NarmaxParams params = load_params(mp);
      m.input(data_path);
      m.input(mp);
      const std::size_t n = steps > 0 ? steps : data.transitions();
      std::vector<LongRun> runs;
      runs.push_back(long_run("model", params, data, cfg.stability_start, n, stream_seed(cfg.seed, 3)));
      runs.push_back(long_run("truncated", truncated_params(data), data, cfg.stability_start, n, 0));
      json summary = write_statistics(cfg, data, runs, "validate", m);
      const auto d = model_acf_distance(
          params, data, AcfComparison{cfg.acf_pieces, cfg.t_lag, cfg.acf_piece_length, stream_seed(cfg.seed, 2)});
      summary["model"]["acf_distance"] = d ? json(*d) : json(nullptr);
      m.note("statistics", summary);
      m.write();
      std::cout << summary.dump(2) << '\n';
      return runs.front().series && d ? 0 : 1;
    }
    if (*forecast_cmd) {
      Manifest m("forecast", cfg);
      const ObservationSeries data = load_data(data_path);
      m.input(data_path);
      NarmaxParams params;
      if (truncated) {
        params = truncated_params(data);
      } else {
        const fs::path mp = out_path(cfg, model_in, model_file_name(cfg.selected_orders, Ansatz::narmax));
        params = load_params(mp);
        m.input(mp);
      }
      ForecastOptions opts = forecast_options(cfg, ensemble > 0 ? ensemble : cfg.forecast_ensemble, 4);
      if (initial_conditions > 0) opts.initial_conditions = initial_conditions;
      NarmaxForecaster f(params);
      const ForecastReport r = ensemble_forecast(f, data, opts);
      const fs::path p = out_path(cfg, out, "forecast.csv");
      ensure_parent(p);
      write_forecast_csv(r, p);
      m.output(p);
      m.note("rmse_below_2_until", r.rmse_below_until(2.0));
      m.note("ancr_above_0.9_until", r.ancr_above_until(0.9));
      m.note("excluded", r.excluded);
      m.write();
      std::cout << "RMSE < 2 until " << r.rmse_below_until(2.0) << ", ANCR > 0.9 until " << r.ancr_above_until(0.9)
                << '\n';
      return 0;
    }
    if (*repro) return reproduce_paper(common, cfg, regenerate);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "validation failed: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
