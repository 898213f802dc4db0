#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mdx/csv.hpp"
#include "mdx/diagnostics.hpp"
#include "mdx/extremal.hpp"
#include "mdx/ingest.hpp"
#include "mdx/model_select.hpp"
#include "mdx/returns.hpp"
#include "mdx/synthetic.hpp"

namespace mdx {

using ordered_json = nlohmann::ordered_json;

/// Everything a full run needs. Loaded from a flat key-value config file
/// and/or command-line flags; flags override the file.
struct RunConfig {
  std::string daily_dir;     // directory of per-station daily CSVs
  std::string station_csv;   // station metadata
  std::string soi_csv;       // monthly index series
  std::vector<int> k_list{1, 2, 3};
  double quantile = 0.95;    // threshold level for extremal-index estimation
  std::string model = "auto";  // ladder id 0-4, or "auto" for AIC selection
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool shape_tie = false;    // pin k >= 2 shapes to the k = 1 estimate
  int horizon = 0;           // scenario horizon in years; 0 = no scenario stage
  double p = 0.01;           // per-block exceedance probability for return levels
  std::optional<std::string> scenario_csv;  // year,soi file; otherwise simulate
  bool full_precision = false;

  void validate() const {
    for (int k : k_list)
      if (k < 1 || k > kMaxWindow)
        throw ValidationError("config: k must be in [1, " + std::to_string(kMaxWindow) + "]");
    if (!(quantile > 0 && quantile < 1))
      throw ValidationError("config: quantile must be in (0,1)");
    if (!(p > 0 && p < 1)) throw ValidationError("config: p must be in (0,1)");
    if (model != "auto") {
      const long id = parse_int_field(model, "config model");
      if (id < 0 || id > 4) throw ValidationError("config: model must be 0..4 or 'auto'");
    }
  }
};

/// Flat `key = value` file mirroring the CLI flags; '#' starts a comment.
inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::map<std::string, std::string> kv;
  for (const auto& raw : read_lines(path)) {
    std::string line{strip_cr(raw)};
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto begin = s.find_first_not_of(" \t");
      const auto end = s.find_last_not_of(" \t");
      return begin == std::string::npos ? std::string{} : s.substr(begin, end - begin + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }
  return kv;
}

inline std::vector<int> parse_k_list(const std::string& text) {
  std::vector<int> out;
  for (const auto field : split_csv_line(text))
    out.push_back(static_cast<int>(parse_int_field(field, "k list")));
  return out;
}

/// One station's ingested data plus its admissible years.
struct StationData {
  StationMeta meta;
  DailySeries daily;
  std::set<int> admissible_years;
  std::vector<CovariateRow> covariates;
};

struct Dataset {
  std::vector<StationData> stations;  // sorted by station_id
  SoiSeries soi;

  std::vector<double> yearly_soi_history() const {
    std::set<int> years;
    for (const auto& s : stations) years.insert(s.admissible_years.begin(), s.admissible_years.end());
    std::vector<double> history;
    for (int y : years) history.push_back(yearly_soi(soi, y));
    return history;
  }
};

/// Loads and validates every input; stations are ordered by id so later
/// stages are deterministic. Stations whose admissible years lack full SOI
/// coverage lose those years rather than failing the run.
inline Dataset load_dataset(const RunConfig& config) {
  Dataset dataset;
  dataset.soi = parse_soi_csv(config.soi_csv);

  const auto metas = parse_station_csv(config.station_csv);
  std::map<std::string, StationMeta> meta_by_id;
  for (const auto& m : metas) meta_by_id[m.station_id] = m;

  if (!std::filesystem::is_directory(config.daily_dir))
    throw ValidationError("daily dir not found: " + config.daily_dir);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(config.daily_dir))
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no daily CSVs in " + config.daily_dir);

  for (const auto& file : files) {
    StationData station;
    station.daily = parse_daily_csv(file.string());
    const auto meta_it = meta_by_id.find(station.daily.station_id);
    if (meta_it == meta_by_id.end())
      throw ValidationError("no metadata for station " + station.daily.station_id + " (" +
                            file.string() + ")");
    station.meta = meta_it->second;
    for (int year : quality_filter(station.daily)) {
      bool soi_complete = true;
      for (int month = 1; month <= 12 && soi_complete; ++month)
        soi_complete = dataset.soi.has_month(year, month);
      if (soi_complete) station.admissible_years.insert(year);
    }
    station.covariates = build_covariates(station.meta, dataset.soi, station.admissible_years);
    dataset.stations.push_back(std::move(station));
  }
  std::sort(dataset.stations.begin(), dataset.stations.end(),
            [](const StationData& a, const StationData& b) {
              return a.meta.station_id < b.meta.station_id;
            });
  return dataset;
}

/// Pooled block-maxima table for one window size, plus the skip log.
struct FunctionalStage {
  BlockMaximaTable table;
  std::vector<std::pair<std::string, int>> skipped;  // (station, year) with no defined window
};

inline FunctionalStage functional_stage(const Dataset& dataset, int k) {
  FunctionalStage stage;
  for (const auto& station : dataset.stations) {
    const auto result = block_maxima(windowed_min(station.daily, k), station.admissible_years);
    const auto joined = join_covariates(result.rows, station.covariates);
    stage.table.insert(stage.table.end(), joined.begin(), joined.end());
    for (int year : result.skipped_years) stage.skipped.push_back({station.meta.station_id, year});
  }
  return stage;
}

// ---------------------------------------------------------------------------
// artifact writers (schemas documented in README)

inline void write_block_maxima_csv(const BlockMaximaTable& table, const std::string& path,
                                   bool full_precision) {
  CsvWriter out(path,
                {"station_id", "year", "k", "block_max_mm", "soi", "log_cdist", "lat", "lon"},
                full_precision);
  for (const auto& row : table)
    out.write_strings({row.station_id, std::to_string(row.year), std::to_string(row.k),
                       out.num(row.b), out.num(row.soi), out.num(row.log_cdist), out.num(row.lat),
                       out.num(row.lon)});
}

inline BlockMaximaTable read_block_maxima_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ParseError(path + ": empty file");
  BlockMaximaTable table;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = strip_cr(lines[i]);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string ctx = path + ":" + std::to_string(i + 1);
    if (fields.size() != 8) throw ParseError(ctx + ": expected 8 fields");
    BmRow row;
    row.station_id = std::string(fields[0]);
    row.year = static_cast<int>(parse_int_field(fields[1], ctx));
    row.k = static_cast<int>(parse_int_field(fields[2], ctx));
    row.b = parse_double_field(fields[3], ctx);
    row.soi = parse_double_field(fields[4], ctx);
    row.log_cdist = parse_double_field(fields[5], ctx);
    row.lat = parse_double_field(fields[6], ctx);
    row.lon = parse_double_field(fields[7], ctx);
    table.push_back(std::move(row));
  }
  return table;
}

inline void write_extremal_csv(const std::vector<std::pair<std::string, ExtremalIndexEstimate>>& rows,
                               int k, const std::string& path, bool full_precision) {
  CsvWriter out(path,
                {"station_id", "k", "quantile", "theta", "cluster_size", "n_exceedances",
                 "estimator_form"},
                full_precision);
  for (const auto& [station_id, est] : rows)
    out.write_strings({station_id, std::to_string(k), out.num(est.threshold_quantile),
                       out.num(est.theta), out.num(est.cluster_size),
                       std::to_string(est.n_exceedances),
                       estimator_form_name(est.form_used, est.fell_back)});
}

/// Selection table in the diagnostic-report shape: one row per ladder model
/// with criteria and goodness-of-fit columns.
inline void write_selection_csv(const SelectionReport& report,
                                const std::vector<std::pair<TestResult, TestResult>>& tests,
                                int k, const std::string& path, bool full_precision) {
  CsvWriter out(path, {"model", "k", "nll", "aic", "bic", "mk_stat", "mk_p", "ad_stat", "ad_p"},
                full_precision);
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    const auto& entry = report.entries[i];
    const auto& [mk, ad] = tests[i];
    out.write_strings({std::to_string(entry.id), std::to_string(k), out.num(entry.fit.nll),
                       out.num(entry.aic), out.num(entry.bic), out.num(mk.statistic),
                       out.num(mk.p_value), out.num(ad.statistic), out.num(ad.p_value)});
  }
}

/// Coefficient rows in the published table order:
/// k, mu0..mu4, sigma0..sigma4, xi. One row per k.
inline void write_coefficient_csv(const std::vector<std::pair<int, const FitResult*>>& fits,
                                  const std::string& path, bool full_precision,
                                  bool standard_errors) {
  CsvWriter out(path,
                {"k", "mu0", "mu1", "mu2", "mu3", "mu4", "sigma0", "sigma1", "sigma2", "sigma3",
                 "sigma4", "xi"},
                full_precision);
  for (const auto& [k, fit] : fits) {
    std::vector<std::string> row{std::to_string(k)};
    if (!standard_errors) {
      for (double c : fit->model.mu_coeffs) row.push_back(out.num(c));
      for (double c : fit->model.sigma_coeffs) row.push_back(out.num(c));
      row.push_back(out.num(fit->model.xi));
    } else {
      // expand packed SEs to the full coefficient grid; inactive -> 0
      const auto active = fit->model.active_flags();
      std::size_t at = 0;
      std::vector<std::string> mu_se, sigma_se;
      for (bool a : active) mu_se.push_back(a ? out.num(fit->std_errors[at++]) : out.num(0.0));
      for (bool a : active) sigma_se.push_back(a ? out.num(fit->std_errors[at++]) : out.num(0.0));
      const std::string xi_se = out.num(fit->std_errors[at]);
      for (auto& s : mu_se) row.push_back(std::move(s));
      for (auto& s : sigma_se) row.push_back(std::move(s));
      row.push_back(xi_se);
    }
    out.write_strings(row);
  }
}

inline void write_quantile_plot_csv(const QuantilePlotData& plot, const std::string& path,
                                    bool full_precision) {
  CsvWriter out(path, {"theoretical", "empirical"}, full_precision);
  for (std::size_t i = 0; i < plot.theoretical.size(); ++i)
    out.write_strings({out.num(plot.theoretical[i]), out.num(plot.empirical[i])});
}

inline void write_shape_drift_csv(const ShapeDriftTable& table, const std::string& path,
                                  bool full_precision) {
  CsvWriter out(path, {"k", "block_length", "n_blocks", "xi", "rel_err", "flagged", "available"},
                full_precision);
  for (const auto& cell : table)
    out.write_strings({std::to_string(cell.k), std::to_string(cell.block_length),
                       std::to_string(cell.n_blocks), out.num(cell.xi),
                       out.num(cell.relative_error), cell.flagged ? "1" : "0",
                       cell.available ? "1" : "0"});
}

inline void write_return_level_csv(
    const std::vector<std::tuple<std::string, int, int, double, double>>& rows,
    const std::string& path, bool full_precision) {
  CsvWriter out(path, {"station_id", "k", "horizon_years", "p", "return_level_mm"},
                full_precision);
  for (const auto& [station, k, horizon, p, level] : rows)
    out.write_strings({station, std::to_string(k), std::to_string(horizon), out.num(p),
                       out.num(level)});
}

inline std::vector<double> read_scenario_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ParseError(path + ": empty file");
  std::vector<double> soi;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = strip_cr(lines[i]);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string ctx = path + ":" + std::to_string(i + 1);
    if (fields.size() != 2) throw ParseError(ctx + ": expected year,soi");
    soi.push_back(parse_double_field(fields[1], ctx));
  }
  if (soi.empty()) throw ParseError(path + ": no scenario rows");
  return soi;
}

// ---------------------------------------------------------------------------

// ---------------------------------------------------------------------------
// synthetic fixture: a complete dataset in the standard file formats, so
// generated data flows through the identical pipeline as real data

struct FixtureSpec {
  int n_stations = 20;
  int n_years = 40;
  int first_year = 1980;
  std::uint64_t seed = 0;
  int model_id = 1;             // which fixture covariates actually act
  std::string kind = "linked";  // linked | mm | iid | blockmax
  int r = 3;                    // moving-maximum order for kind=mm
};

/// Daily-scale covariate model behind the "linked" fixture. Coefficients are
/// sized so that the GEV lower endpoint stays non-negative over the fixture's
/// covariate ranges (checked again at generation time).
inline LinkModel fixture_daily_model(int model_id) {
  const auto ladder = build_ladder();
  LinkModel model;
  model.mask = ladder.at(static_cast<std::size_t>(model_id)).mask;
  model.mu_coeffs = {30.0, model.mask.soi ? 0.8 : 0.0, model.mask.log_cdist ? -0.6 : 0.0,
                     model.mask.lat ? 0.15 : 0.0, model.mask.lon ? 0.05 : 0.0};
  model.sigma_coeffs = {3.0, model.mask.soi ? 0.1 : 0.0, model.mask.log_cdist ? -0.15 : 0.0,
                        model.mask.lat ? 0.03 : 0.0, model.mask.lon ? 0.01 : 0.0};
  model.xi = 0.3;
  return model;
}

/// The daily fixture model lifted to the one-year-maximum scale: the yearly
/// maximum of n i.i.d. GEV draws is GEV with mu' = mu + sigma (n^xi - 1)/xi
/// and sigma' = sigma n^xi, which keeps the links linear in the same
/// covariates.
inline LinkModel fixture_blockmax_model(int model_id, double n_per_block = 365.0) {
  const LinkModel daily = fixture_daily_model(model_id);
  LinkModel year = daily;
  const double growth = std::pow(n_per_block, daily.xi);
  for (std::size_t i = 0; i < 5; ++i) {
    year.mu_coeffs[i] = daily.mu_coeffs[i] + daily.sigma_coeffs[i] * (growth - 1.0) / daily.xi;
    year.sigma_coeffs[i] = daily.sigma_coeffs[i] * growth;
  }
  return year;
}

/// Writes stations.csv, soi.csv, and either daily/ CSVs or (kind=blockmax)
/// a block_maxima_k1.csv drawn directly from the year-scale linked model,
/// all in the standard pipeline formats.
inline void write_fixture(const FixtureSpec& spec, const std::string& out_dir) {
  if (spec.n_stations < 1 || spec.n_years < 1)
    throw ValidationError("fixture: stations and years must be >= 1");
  if (spec.kind != "linked" && spec.kind != "mm" && spec.kind != "iid" &&
      spec.kind != "blockmax")
    throw ValidationError("fixture: kind must be linked, mm, iid, or blockmax");
  if (spec.model_id < 0 || spec.model_id > 4)
    throw ValidationError("fixture: model id must be 0..4");

  const std::filesystem::path out(out_dir);
  const std::filesystem::path daily_dir = out / "daily";
  std::filesystem::create_directories(spec.kind == "blockmax" ? out : daily_dir);

  // yearly index values in a plausible band; written as 12 constant months
  // so the yearly average reproduces them exactly
  SplitMix64 soi_rng(substream_seed(spec.seed, 1));
  std::vector<double> yearly(static_cast<std::size_t>(spec.n_years));
  for (double& v : yearly) v = -10.0 + 20.0 * soi_rng.uniform();
  {
    CsvWriter writer((out / "soi.csv").string(), {"year", "month", "soi"},
                     /*full_precision=*/true);
    for (int y = 0; y < spec.n_years; ++y)
      for (int month = 1; month <= 12; ++month)
        writer.write_strings({std::to_string(spec.first_year + y), std::to_string(month),
                              writer.num(yearly[static_cast<std::size_t>(y)])});
  }

  SplitMix64 station_rng(substream_seed(spec.seed, 2));
  std::vector<StationMeta> stations;
  for (int s = 0; s < spec.n_stations; ++s) {
    StationMeta meta;
    char id[16];
    std::snprintf(id, sizeof id, "S%03d", s);
    meta.station_id = id;
    meta.lat = -38.0 + 18.0 * station_rng.uniform();
    meta.lon = 142.0 + 11.0 * station_rng.uniform();
    meta.cdist_km = 1.0 + 299.0 * station_rng.uniform();
    stations.push_back(meta);
  }
  {
    CsvWriter writer((out / "stations.csv").string(), {"station_id", "lat", "lon", "cdist_km"},
                     /*full_precision=*/true);
    for (const auto& meta : stations)
      writer.write_strings({meta.station_id, writer.num(meta.lat), writer.num(meta.lon),
                            writer.num(meta.cdist_km)});
  }

  if (spec.kind == "blockmax") {
    std::vector<CovariateRow> rows;
    for (const auto& meta : stations)
      for (int y = 0; y < spec.n_years; ++y)
        rows.push_back({meta.station_id, spec.first_year + y,
                        yearly[static_cast<std::size_t>(y)], std::log(meta.cdist_km), meta.lat,
                        meta.lon});
    const BlockMaximaTable table = sample_linked_gev(
        fixture_blockmax_model(spec.model_id), rows, substream_seed(spec.seed, 3));
    write_block_maxima_csv(table, (out / "block_maxima_k1.csv").string(),
                           /*full_precision=*/true);
    return;
  }

  const LinkModel daily_model = fixture_daily_model(spec.model_id);
  for (std::size_t s = 0; s < stations.size(); ++s) {
    const StationMeta& meta = stations[s];
    DailySeries series;
    series.station_id = meta.station_id;
    series.start = first_day_of_year(spec.first_year);

    if (spec.kind == "linked") {
      SplitMix64 rng(substream_seed(spec.seed, 1000 + s));
      for (int y = 0; y < spec.n_years; ++y) {
        BmRow row;
        row.soi = yearly[static_cast<std::size_t>(y)];
        row.log_cdist = std::log(meta.cdist_km);
        row.lat = meta.lat;
        row.lon = meta.lon;
        const GevParams params = daily_model.params_at(row);
        if (!(params.sigma > 0) || params.mu - params.sigma / params.xi < 0)
          throw InfeasibleError("fixture: parameters allow negative rainfall at " +
                                meta.station_id + " year " + std::to_string(spec.first_year + y));
        const int n_days = days_in_year(spec.first_year + y);
        for (int d = 0; d < n_days; ++d)
          series.values.push_back(gev_quantile(rng.uniform(), params));
      }
    } else {
      std::size_t total_days = 0;
      for (int y = 0; y < spec.n_years; ++y)
        total_days += static_cast<std::size_t>(days_in_year(spec.first_year + y));
      const GevParams marginal{10.0, 2.0, 0.2};  // lower endpoint exactly 0
      series.values =
          spec.kind == "mm"
              ? sample_moving_maximum(spec.r, total_days, substream_seed(spec.seed, 1000 + s),
                                      marginal)
              : sample_iid_gev(marginal, total_days, substream_seed(spec.seed, 1000 + s));
    }
    series.validate();
    write_daily_csv(series, (daily_dir / (meta.station_id + ".csv")).string());
  }
}

struct PipelineResult {
  std::vector<std::string> artifacts;  // relative paths under out_dir
  std::map<int, int> chosen_model_by_k;
  bool complete = false;
};

/// End-to-end run: ingest -> functionals -> extremal indices -> ladder fits,
/// selection and diagnostics -> shape drift -> optional scenario return
/// levels. Every artifact lands under config.out_dir; the manifest marks the
/// bundle complete only when every stage finished.
inline PipelineResult run_pipeline(const RunConfig& config) {
  config.validate();
  const std::filesystem::path out_dir(config.out_dir);
  std::filesystem::create_directories(out_dir);

  PipelineResult result;
  ordered_json manifest;
  manifest["config"] = {{"k", config.k_list},
                        {"quantile", config.quantile},
                        {"model", config.model},
                        {"seed", config.seed},
                        {"shape_tie", config.shape_tie},
                        {"p", config.p},
                        {"horizon", config.horizon}};
  manifest["complete"] = false;
  manifest["artifacts"] = ordered_json::array();

  auto flush_manifest = [&] {
    std::ofstream out(out_dir / "manifest.json");
    out << manifest.dump(2) << "\n";
  };
  auto add_artifact = [&](const std::string& name) {
    result.artifacts.push_back(name);
    manifest["artifacts"].push_back(name);
    flush_manifest();
  };

  try {
    const Dataset dataset = load_dataset(config);

    std::map<int, FitResult> chosen_fit_by_k;
    std::optional<double> k1_xi;  // shape-tie reference

    std::vector<int> k_list = config.k_list;
    std::sort(k_list.begin(), k_list.end());
    k_list.erase(std::unique(k_list.begin(), k_list.end()), k_list.end());

    for (int k : k_list) {
      const std::string suffix = "_k" + std::to_string(k) + ".csv";

      // functionals
      const FunctionalStage stage = functional_stage(dataset, k);
      if (stage.table.empty())
        throw DataError("no block maxima at k = " + std::to_string(k));
      write_block_maxima_csv(stage.table, (out_dir / ("block_maxima" + suffix)).string(),
                             config.full_precision);
      add_artifact("block_maxima" + suffix);

      // extremal indices per station
      std::vector<std::pair<std::string, ExtremalIndexEstimate>> theta_rows;
      for (const auto& station : dataset.stations) {
        try {
          theta_rows.push_back({station.meta.station_id,
                                theta_for_windowed(station.daily, k, config.quantile)});
        } catch (const DataError&) {
          // station too dry for this threshold; leave it out of the table
        }
      }
      write_extremal_csv(theta_rows, k, (out_dir / ("extremal_index" + suffix)).string(),
                         config.full_precision);
      add_artifact("extremal_index" + suffix);

      // ladder fits + selection + per-model diagnostics
      FitOptions fit_options{.seed = substream_seed(config.seed, static_cast<std::uint64_t>(k))};
      if (config.shape_tie && k > 1) {
        if (!k1_xi.has_value())
          throw DataError("shape-tie mode requires k = 1 in the k list, before other k");
        fit_options.fixed_xi = *k1_xi;
      }
      const SelectionReport report = select(stage.table, build_ladder(), fit_options);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      std::vector<std::pair<TestResult, TestResult>> tests;
      for (const auto& entry : report.entries) {
        // a rejected ladder model may standardize badly; report nan cells
        // rather than aborting the run over a model nobody chose
        try {
          if (!entry.fit.converged) throw NumericalError("fit did not converge");
          const StandardizedSample sample = standardize(stage.table, entry.fit, entry.id);
          tests.push_back({mann_kendall(sample), anderson_darling_gumbel(sample)});
        } catch (const NumericalError&) {
          tests.push_back({TestResult{"mann-kendall", nan, nan, 0, 0},
                           TestResult{"anderson-darling-gumbel", nan, nan, 0, 0}});
        }
      }
      write_selection_csv(report, tests, k, (out_dir / ("selection" + suffix)).string(),
                          config.full_precision);
      add_artifact("selection" + suffix);

      const int chosen_id =
          config.model == "auto" ? report.chosen_id : static_cast<int>(std::stol(config.model));
      const ModelEntry* chosen_entry = nullptr;
      for (const auto& entry : report.entries)
        if (entry.id == chosen_id) chosen_entry = &entry;
      if (chosen_entry == nullptr || !chosen_entry->fit.converged)
        throw NumericalError("chosen model " + std::to_string(chosen_id) +
                             " unavailable at k = " + std::to_string(k));
      result.chosen_model_by_k[k] = chosen_id;
      chosen_fit_by_k.emplace(k, chosen_entry->fit);
      if (k == 1) k1_xi = chosen_entry->fit.model.xi;

      write_coefficient_csv({{k, &chosen_entry->fit}},
                            (out_dir / ("coefficients" + suffix)).string(),
                            config.full_precision, false);
      add_artifact("coefficients" + suffix);
      write_coefficient_csv({{k, &chosen_entry->fit}},
                            (out_dir / ("standard_errors" + suffix)).string(),
                            config.full_precision, true);
      add_artifact("standard_errors" + suffix);

      {
        std::ofstream record(out_dir / ("fit_k" + std::to_string(k) + ".txt"));
        record << chosen_entry->fit.to_text_record();
      }
      add_artifact("fit_k" + std::to_string(k) + ".txt");

      // diagnostics for the chosen model
      const StandardizedSample sample = standardize(stage.table, chosen_entry->fit, chosen_id);
      write_quantile_plot_csv(quantile_plot_data(sample),
                              (out_dir / ("quantile_plot" + suffix)).string(),
                              config.full_precision);
      add_artifact("quantile_plot" + suffix);

      ordered_json diag;
      diag["k"] = k;
      diag["model"] = chosen_id;
      diag["n"] = sample.values.size();
      diag["n_excluded"] = sample.n_excluded;
      const TestResult mk = mann_kendall(sample);
      const TestResult ad = anderson_darling_gumbel(sample);
      diag["mann_kendall"] = {{"statistic", mk.statistic}, {"p_value", mk.p_value}};
      diag["anderson_darling"] = {{"statistic", ad.statistic}, {"p_value", ad.p_value},
                                  {"n_clipped", ad.n_clipped}};
      ordered_json skipped = ordered_json::array();
      for (const auto& [station, year] : stage.skipped)
        skipped.push_back(station + ":" + std::to_string(year));
      diag["skipped_station_years"] = skipped;
      {
        std::ofstream out(out_dir / ("diagnostics_k" + std::to_string(k) + ".json"));
        out << diag.dump(2) << "\n";
      }
      add_artifact("diagnostics_k" + std::to_string(k) + ".json");
    }

    // shape drift across the configured windows (pooled over stations)
    {
      std::vector<DailySeries> series_set;
      for (const auto& station : dataset.stations) series_set.push_back(station.daily);
      const int k_max = k_list.back();
      const ShapeDriftTable drift =
          shape_drift_report(series_set, k_max, {365, 730},
                             1.0, {.seed = substream_seed(config.seed, 101)});
      write_shape_drift_csv(drift, (out_dir / "shape_drift.csv").string(),
                            config.full_precision);
      add_artifact("shape_drift.csv");
    }

    // optional scenario stage
    if (config.horizon > 0) {
      std::vector<double> scenario_soi;
      if (config.scenario_csv.has_value()) {
        scenario_soi = read_scenario_csv(*config.scenario_csv);
        if (scenario_soi.size() != static_cast<std::size_t>(config.horizon))
          throw ValidationError("scenario file has " + std::to_string(scenario_soi.size()) +
                                " years, horizon is " + std::to_string(config.horizon));
      } else {
        scenario_soi =
            simulate_soi(dataset.yearly_soi_history(), config.horizon,
                         substream_seed(config.seed, 202))
                .values;
      }
      std::vector<std::tuple<std::string, int, int, double, double>> rl_rows;
      for (int k : k_list) {
        const FitResult& fit = chosen_fit_by_k.at(k);
        for (const auto& station : dataset.stations) {
          const ReturnSpec spec{config.p, config.horizon, scenario_soi};
          rl_rows.push_back({station.meta.station_id, k, config.horizon, config.p,
                             aggregated_quantile(spec, fit, station.meta)});
        }
      }
      write_return_level_csv(rl_rows, (out_dir / "scenario_return_levels.csv").string(),
                             config.full_precision);
      add_artifact("scenario_return_levels.csv");
    }

    manifest["complete"] = true;
    ordered_json chosen;
    for (const auto& [k, id] : result.chosen_model_by_k) chosen[std::to_string(k)] = id;
    manifest["chosen_model_by_k"] = chosen;
    flush_manifest();
    result.complete = true;
  } catch (...) {
    flush_manifest();  // partial artifacts stay on disk, manifest says incomplete
    throw;
  }
  return result;
}

}  // namespace mdx
