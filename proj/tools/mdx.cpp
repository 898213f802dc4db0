// mdx: multiday precipitation extremes toolkit.
//
// Subcommands: ingest, functional, ei, fit, select, diagnose, rl, scenario,
// synth, pipeline. Exit codes: 0 success, 2 input/validation error,
// 3 numerical failure, 4 infeasible scenario.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "mdx/pipeline.hpp"
#include "mdx/synthetic.hpp"

namespace fs = std::filesystem;
using namespace mdx;

namespace {

struct Flags {
  std::string config_file;
  std::string daily_dir, stations, soi, out, model, k_csv, scenario;
  double quantile = 0.95, p = 0.01;
  std::uint64_t seed = 0;
  int horizon = 0;
  bool shape_tie = false, full_precision = false;

  CLI::Option *opt_daily = nullptr, *opt_stations = nullptr, *opt_soi = nullptr,
              *opt_out = nullptr, *opt_model = nullptr, *opt_k = nullptr,
              *opt_quantile = nullptr, *opt_p = nullptr, *opt_seed = nullptr,
              *opt_horizon = nullptr, *opt_shape_tie = nullptr, *opt_scenario = nullptr,
              *opt_full_precision = nullptr;
};

void add_common_options(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config_file, "flat key=value config file; flags override it");
  flags.opt_daily = cmd->add_option("--daily-dir", flags.daily_dir, "directory of daily CSVs");
  flags.opt_stations = cmd->add_option("--stations", flags.stations, "station metadata CSV");
  flags.opt_soi = cmd->add_option("--soi", flags.soi, "monthly SOI CSV");
  flags.opt_out = cmd->add_option("--out", flags.out, "output directory");
  flags.opt_k = cmd->add_option("--k", flags.k_csv, "window sizes, comma separated (1-7)");
  flags.opt_quantile =
      cmd->add_option("--quantile", flags.quantile, "threshold quantile for the extremal index");
  flags.opt_model = cmd->add_option("--model", flags.model, "ladder model id 0-4 or 'auto'");
  flags.opt_seed = cmd->add_option("--seed", flags.seed, "random seed");
  flags.opt_shape_tie =
      cmd->add_flag("--shape-tie", flags.shape_tie, "pin k>=2 shapes to the k=1 estimate");
  flags.opt_horizon = cmd->add_option("--horizon", flags.horizon, "scenario horizon in years");
  flags.opt_p = cmd->add_option("--p", flags.p, "per-block exceedance probability");
  flags.opt_scenario = cmd->add_option("--scenario", flags.scenario, "scenario CSV (year,soi)");
  flags.opt_full_precision = cmd->add_flag("--full-precision", flags.full_precision,
                                           "emit shortest round-trip decimals");
}

RunConfig build_config(const Flags& flags) {
  RunConfig config;
  if (!flags.config_file.empty()) {
    const auto kv = parse_config_file(flags.config_file);
    auto get = [&](const char* key) -> std::optional<std::string> {
      const auto it = kv.find(key);
      if (it == kv.end()) return std::nullopt;
      return it->second;
    };
    if (auto v = get("daily_dir")) config.daily_dir = *v;
    if (auto v = get("stations")) config.station_csv = *v;
    if (auto v = get("soi")) config.soi_csv = *v;
    if (auto v = get("out")) config.out_dir = *v;
    if (auto v = get("k")) config.k_list = parse_k_list(*v);
    if (auto v = get("quantile")) config.quantile = parse_double_field(*v, "config quantile");
    if (auto v = get("model")) config.model = *v;
    if (auto v = get("seed"))
      config.seed = static_cast<std::uint64_t>(parse_int_field(*v, "config seed"));
    if (auto v = get("shape_tie")) config.shape_tie = (*v == "1" || *v == "true");
    if (auto v = get("horizon")) config.horizon = static_cast<int>(parse_int_field(*v, "config horizon"));
    if (auto v = get("p")) config.p = parse_double_field(*v, "config p");
    if (auto v = get("scenario")) config.scenario_csv = *v;
    if (auto v = get("full_precision")) config.full_precision = (*v == "1" || *v == "true");
  }
  if (flags.opt_daily->count()) config.daily_dir = flags.daily_dir;
  if (flags.opt_stations->count()) config.station_csv = flags.stations;
  if (flags.opt_soi->count()) config.soi_csv = flags.soi;
  if (flags.opt_out->count()) config.out_dir = flags.out;
  if (flags.opt_k->count()) config.k_list = parse_k_list(flags.k_csv);
  if (flags.opt_quantile->count()) config.quantile = flags.quantile;
  if (flags.opt_model->count()) config.model = flags.model;
  if (flags.opt_seed->count()) config.seed = flags.seed;
  if (flags.opt_shape_tie->count()) config.shape_tie = flags.shape_tie;
  if (flags.opt_horizon->count()) config.horizon = flags.horizon;
  if (flags.opt_p->count()) config.p = flags.p;
  if (flags.opt_scenario->count()) config.scenario_csv = flags.scenario;
  if (flags.opt_full_precision->count()) config.full_precision = flags.full_precision;
  config.validate();
  return config;
}

std::vector<int> sorted_k(const RunConfig& config) {
  std::vector<int> k_list = config.k_list;
  std::sort(k_list.begin(), k_list.end());
  k_list.erase(std::unique(k_list.begin(), k_list.end()), k_list.end());
  return k_list;
}

int cmd_ingest(const RunConfig& config) {
  const Dataset dataset = load_dataset(config);
  std::size_t total_station_years = 0;
  for (const auto& station : dataset.stations) total_station_years += station.admissible_years.size();
  std::printf("stations: %zu\n", dataset.stations.size());
  std::printf("admissible station-years: %zu\n", total_station_years);
  for (const auto& station : dataset.stations)
    std::printf("  %s: %zu days, %zu admissible years\n", station.meta.station_id.c_str(),
                station.daily.size(), station.admissible_years.size());
  return 0;
}

int cmd_functional(const RunConfig& config) {
  const Dataset dataset = load_dataset(config);
  fs::create_directories(config.out_dir);
  for (int k : sorted_k(config)) {
    const FunctionalStage stage = functional_stage(dataset, k);
    const std::string name = "block_maxima_k" + std::to_string(k) + ".csv";
    write_block_maxima_csv(stage.table, (fs::path(config.out_dir) / name).string(),
                           config.full_precision);
    std::printf("%s: %zu rows, %zu skipped station-years\n", name.c_str(), stage.table.size(),
                stage.skipped.size());
    if (k > kWindowWarnAbove)
      std::fprintf(stderr,
                   "warning: k = %d exceeds %d; shape estimates degrade sharply for long runs\n",
                   k, kWindowWarnAbove);
  }
  return 0;
}

int cmd_ei(const RunConfig& config, const std::string& estimator) {
  const EstimatorForm form =
      estimator == "sum-squares" ? EstimatorForm::kSumSquares : EstimatorForm::kStandard;
  const Dataset dataset = load_dataset(config);
  fs::create_directories(config.out_dir);
  for (int k : sorted_k(config)) {
    std::vector<std::pair<std::string, ExtremalIndexEstimate>> rows;
    for (const auto& station : dataset.stations) {
      try {
        rows.push_back({station.meta.station_id,
                        theta_for_windowed(station.daily, k, config.quantile, form)});
      } catch (const DataError& e) {
        std::fprintf(stderr, "skipping %s at k=%d: %s\n", station.meta.station_id.c_str(), k,
                     e.what());
      }
    }
    const std::string name = "extremal_index_k" + std::to_string(k) + ".csv";
    write_extremal_csv(rows, k, (fs::path(config.out_dir) / name).string(),
                       config.full_precision);
    std::printf("%s: %zu stations\n", name.c_str(), rows.size());
  }
  return 0;
}

/// Shared fit/select flow for the standalone subcommands. Returns one entry
/// per requested k with the selection report and chosen model.
struct KFit {
  int k = 1;
  BlockMaximaTable table;
  SelectionReport report;
  int chosen_id = 0;
};

std::vector<KFit> fit_all_k(const RunConfig& config, const Dataset& dataset) {
  std::vector<KFit> results;
  std::optional<double> k1_xi;
  for (int k : sorted_k(config)) {
    KFit entry;
    entry.k = k;
    entry.table = functional_stage(dataset, k).table;
    if (entry.table.empty()) throw DataError("no block maxima at k = " + std::to_string(k));
    FitOptions options{.seed = substream_seed(config.seed, static_cast<std::uint64_t>(k))};
    if (config.shape_tie && k > 1) {
      if (!k1_xi.has_value()) throw DataError("shape-tie mode requires k = 1 in the k list");
      options.fixed_xi = *k1_xi;
    }
    entry.report = select(entry.table, build_ladder(), options);
    entry.chosen_id = config.model == "auto" ? entry.report.chosen_id : std::stoi(config.model);
    const FitResult* chosen = nullptr;
    for (const auto& model_entry : entry.report.entries)
      if (model_entry.id == entry.chosen_id && model_entry.fit.converged)
        chosen = &model_entry.fit;
    if (chosen == nullptr)
      throw NumericalError("model " + std::to_string(entry.chosen_id) + " unavailable at k = " +
                           std::to_string(k));
    if (k == 1) k1_xi = chosen->model.xi;
    results.push_back(std::move(entry));
  }
  return results;
}

const FitResult& chosen_fit(const KFit& entry) {
  for (const auto& model_entry : entry.report.entries)
    if (model_entry.id == entry.chosen_id) return model_entry.fit;
  throw DataError("chosen model missing");
}

int cmd_fit(const RunConfig& config) {
  const Dataset dataset = load_dataset(config);
  fs::create_directories(config.out_dir);
  for (const auto& entry : fit_all_k(config, dataset)) {
    const FitResult& fit = chosen_fit(entry);
    const std::string stem = "_k" + std::to_string(entry.k);
    write_coefficient_csv({{entry.k, &fit}},
                          (fs::path(config.out_dir) / ("coefficients" + stem + ".csv")).string(),
                          config.full_precision, false);
    write_coefficient_csv({{entry.k, &fit}},
                          (fs::path(config.out_dir) / ("standard_errors" + stem + ".csv")).string(),
                          config.full_precision, true);
    std::ofstream record(fs::path(config.out_dir) / ("fit" + stem + ".txt"));
    record << fit.to_text_record();
    std::printf("k=%d model=%d nll=%.6g converged=%d\n", entry.k, entry.chosen_id, fit.nll,
                fit.converged ? 1 : 0);
  }
  return 0;
}

int cmd_select(const RunConfig& config) {
  const Dataset dataset = load_dataset(config);
  fs::create_directories(config.out_dir);
  for (const auto& entry : fit_all_k(config, dataset)) {
    std::vector<std::pair<TestResult, TestResult>> tests;
    for (const auto& model_entry : entry.report.entries) {
      if (model_entry.fit.converged) {
        const StandardizedSample sample = standardize(entry.table, model_entry.fit, model_entry.id);
        tests.push_back({mann_kendall(sample), anderson_darling_gumbel(sample)});
      } else {
        tests.push_back({TestResult{"mann-kendall", 0, 1, 0, 0},
                         TestResult{"anderson-darling-gumbel", 0, 1, 0, 0}});
      }
    }
    const std::string name = "selection_k" + std::to_string(entry.k) + ".csv";
    write_selection_csv(entry.report, tests, entry.k,
                        (fs::path(config.out_dir) / name).string(), config.full_precision);
    std::printf("%s: chosen model %d\n", name.c_str(), entry.report.chosen_id);
  }
  return 0;
}

int cmd_diagnose(const RunConfig& config) {
  const Dataset dataset = load_dataset(config);
  fs::create_directories(config.out_dir);
  for (const auto& entry : fit_all_k(config, dataset)) {
    const FitResult& fit = chosen_fit(entry);
    const StandardizedSample sample = standardize(entry.table, fit, entry.chosen_id);
    const std::string stem = "_k" + std::to_string(entry.k);
    write_quantile_plot_csv(quantile_plot_data(sample),
                            (fs::path(config.out_dir) / ("quantile_plot" + stem + ".csv")).string(),
                            config.full_precision);
    const TestResult mk = mann_kendall(sample);
    const TestResult ad = anderson_darling_gumbel(sample);
    ordered_json diag;
    diag["k"] = entry.k;
    diag["model"] = entry.chosen_id;
    diag["n"] = sample.values.size();
    diag["n_excluded"] = sample.n_excluded;
    diag["mann_kendall"] = {{"statistic", mk.statistic}, {"p_value", mk.p_value}};
    diag["anderson_darling"] = {{"statistic", ad.statistic}, {"p_value", ad.p_value},
                                {"n_clipped", ad.n_clipped}};
    std::ofstream out(fs::path(config.out_dir) / ("diagnostics" + stem + ".json"));
    out << diag.dump(2) << "\n";
    std::printf("k=%d model=%d A-D p=%.4g M-K p=%.4g\n", entry.k, entry.chosen_id, ad.p_value,
                mk.p_value);
  }
  return 0;
}

std::vector<double> resolve_scenario(const RunConfig& config, const Dataset& dataset,
                                     int horizon) {
  if (config.scenario_csv.has_value()) {
    auto soi = read_scenario_csv(*config.scenario_csv);
    if (soi.size() != static_cast<std::size_t>(horizon))
      throw ValidationError("scenario file has " + std::to_string(soi.size()) +
                            " years, horizon is " + std::to_string(horizon));
    return soi;
  }
  return simulate_soi(dataset.yearly_soi_history(), horizon, substream_seed(config.seed, 202))
      .values;
}

int cmd_rl(const RunConfig& config, bool with_ci) {
  if (config.horizon < 1) throw ValidationError("rl: --horizon must be >= 1");
  const Dataset dataset = load_dataset(config);
  fs::create_directories(config.out_dir);
  const auto scenario_soi = resolve_scenario(config, dataset, config.horizon);
  const auto path = (fs::path(config.out_dir) / "return_levels.csv").string();
  std::size_t n_rows = 0;
  if (with_ci) {
    CsvWriter out(path,
                  {"station_id", "k", "horizon_years", "p", "return_level_mm", "ci_lo_mm",
                   "ci_hi_mm"},
                  config.full_precision);
    for (const auto& entry : fit_all_k(config, dataset)) {
      const FitResult& fit = chosen_fit(entry);
      for (const auto& station : dataset.stations) {
        const ReturnSpec spec{config.p, config.horizon, scenario_soi};
        const ReturnLevelInterval ci = aggregated_quantile_interval(spec, fit, station.meta);
        out.write_strings({station.meta.station_id, std::to_string(entry.k),
                           std::to_string(config.horizon), out.num(config.p),
                           out.num(ci.level), out.num(ci.lo), out.num(ci.hi)});
        ++n_rows;
      }
    }
  } else {
    std::vector<std::tuple<std::string, int, int, double, double>> rows;
    for (const auto& entry : fit_all_k(config, dataset)) {
      const FitResult& fit = chosen_fit(entry);
      for (const auto& station : dataset.stations) {
        const ReturnSpec spec{config.p, config.horizon, scenario_soi};
        rows.push_back({station.meta.station_id, entry.k, config.horizon, config.p,
                        aggregated_quantile(spec, fit, station.meta)});
      }
    }
    write_return_level_csv(rows, path, config.full_precision);
    n_rows = rows.size();
  }
  std::printf("return_levels.csv: %zu rows\n", n_rows);
  return 0;
}

int cmd_scenario(const RunConfig& config, int simulate_m) {
  const int horizon = simulate_m > 0 ? simulate_m : config.horizon;
  if (horizon < 1) throw ValidationError("scenario: provide --simulate m or --horizon");
  const Dataset dataset = load_dataset(config);
  fs::create_directories(config.out_dir);
  const auto scenario_soi = resolve_scenario(config, dataset, horizon);
  {
    CsvWriter out((fs::path(config.out_dir) / "scenario_soi.csv").string(), {"year", "soi"},
                  config.full_precision);
    for (std::size_t i = 0; i < scenario_soi.size(); ++i)
      out.write_strings({std::to_string(i + 1), out.num(scenario_soi[i])});
  }
  std::vector<std::tuple<std::string, int, int, double, double>> rows;
  for (const auto& entry : fit_all_k(config, dataset)) {
    const FitResult& fit = chosen_fit(entry);
    for (const auto& station : dataset.stations) {
      const ReturnSpec spec{config.p, horizon, scenario_soi};
      rows.push_back({station.meta.station_id, entry.k, horizon, config.p,
                      aggregated_quantile(spec, fit, station.meta)});
    }
  }
  write_return_level_csv(rows,
                         (fs::path(config.out_dir) / "scenario_return_levels.csv").string(),
                         config.full_precision);
  std::printf("scenario_soi.csv + scenario_return_levels.csv: %zu rows\n", rows.size());
  return 0;
}

int cmd_synth(const RunConfig& config, FixtureSpec spec) {
  spec.seed = config.seed;
  write_fixture(spec, config.out_dir);
  std::printf("fixture written to %s: %d stations x %d years (%s, model %d, seed %llu)\n",
              config.out_dir.c_str(), spec.n_stations, spec.n_years, spec.kind.c_str(),
              spec.model_id, static_cast<unsigned long long>(spec.seed));
  return 0;
}

int cmd_pipeline(const RunConfig& config) {
  const PipelineResult result = run_pipeline(config);
  std::printf("pipeline complete: %zu artifacts in %s\n", result.artifacts.size(),
              config.out_dir.c_str());
  for (const auto& [k, id] : result.chosen_model_by_k)
    std::printf("  k=%d chosen model %d\n", k, id);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiday precipitation extremes toolkit"};
  app.require_subcommand(1);

  // every subcommand owns its flag set; map nodes keep addresses stable
  std::map<CLI::App*, Flags> flags_by_cmd;
  auto add_cmd = [&](const char* name, const char* desc) {
    auto* cmd = app.add_subcommand(name, desc);
    add_common_options(cmd, flags_by_cmd[cmd]);
    return cmd;
  };

  std::string estimator = "standard";
  int simulate_m = 0;
  FixtureSpec synth_spec;

  auto* ingest = add_cmd("ingest", "parse and validate inputs, print a summary");
  auto* functional = add_cmd("functional", "windowed-min block maxima tables");
  auto* ei = add_cmd("ei", "extremal index per station");
  ei->add_option("--estimator", estimator, "standard | sum-squares")
      ->check(CLI::IsMember({"standard", "sum-squares"}));
  auto* fit = add_cmd("fit", "fit the chosen ladder model per k");
  auto* select_cmd = add_cmd("select", "nested-model ladder selection");
  auto* diagnose = add_cmd("diagnose", "quantile plot data and fit tests");
  auto* rl = add_cmd("rl", "scenario-aggregated return levels");
  bool rl_ci = false;
  rl->add_flag("--ci", rl_ci, "append delta-method 95% interval columns");
  auto* scenario = add_cmd("scenario", "explicit or simulated SOI scenario levels");
  scenario->add_option("--simulate", simulate_m, "simulate m scenario years from history");
  auto* synth = add_cmd("synth", "write a synthetic fixture dataset");
  synth->add_option("--n-stations", synth_spec.n_stations, "number of stations");
  synth->add_option("--years", synth_spec.n_years, "number of years");
  synth->add_option("--first-year", synth_spec.first_year, "first calendar year");
  synth->add_option("--model-id", synth_spec.model_id, "fixture covariate model 0-4");
  synth->add_option("--kind", synth_spec.kind, "linked | mm | iid | blockmax")
      ->check(CLI::IsMember({"linked", "mm", "iid", "blockmax"}));
  synth->add_option("--r", synth_spec.r, "moving-maximum order for kind=mm");
  auto* pipeline = add_cmd("pipeline", "full end-to-end run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    CLI::App* active = app.get_subcommands().front();
    const RunConfig config = build_config(flags_by_cmd.at(active));
    if (ingest->parsed()) return cmd_ingest(config);
    if (functional->parsed()) return cmd_functional(config);
    if (ei->parsed()) return cmd_ei(config, estimator);
    if (fit->parsed()) return cmd_fit(config);
    if (select_cmd->parsed()) return cmd_select(config);
    if (diagnose->parsed()) return cmd_diagnose(config);
    if (rl->parsed()) return cmd_rl(config, rl_ci);
    if (scenario->parsed()) return cmd_scenario(config, simulate_m);
    if (synth->parsed()) return cmd_synth(config, synth_spec);
    if (pipeline->parsed()) return cmd_pipeline(config);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
