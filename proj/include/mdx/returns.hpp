#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mdx/extremal.hpp"
#include "mdx/fit.hpp"
#include "mdx/rng.hpp"

namespace mdx {

/// Level exceeded once per block on average with probability p:
///   z_p = mu - (sigma/xi)(1 - y_p^{-xi}),  y_p = -log(1 - p)
/// (mu - sigma log y_p at the xi switch).
inline double return_level(double p, const GevParams& params) {
  if (!(p > 0 && p < 1)) throw std::invalid_argument("return_level: p must be in (0,1)");
  if (!(params.sigma > 0)) throw std::invalid_argument("return_level: sigma must be > 0");
  const double log_yp = std::log(-std::log1p(-p));
  if (gev_is_gumbel(params.xi)) return params.mu - params.sigma * log_yp;
  return params.mu + params.sigma * std::expm1(-params.xi * log_yp) / params.xi;
}

/// Gradient of the return level with respect to (mu, sigma, xi), for
/// delta-method variances. Uses the series limit of the xi-derivative at the
/// Gumbel switch.
inline std::array<double, 3> return_level_gradient(double p, const GevParams& params) {
  if (!(p > 0 && p < 1)) throw std::invalid_argument("return_level_gradient: p in (0,1)");
  const double log_yp = std::log(-std::log1p(-p));
  if (gev_is_gumbel(params.xi))
    return {1.0, -log_yp, params.sigma * log_yp * log_yp / 2.0};
  const double decay = std::exp(-params.xi * log_yp);  // y_p^{-xi}
  const double d_sigma = std::expm1(-params.xi * log_yp) / params.xi;
  const double d_xi =
      -params.sigma * (d_sigma / params.xi + log_yp * decay / params.xi);
  return {1.0, d_sigma, d_xi};
}

/// Exceedance probability per block and covariate scenario over a fixed horizon.
struct ReturnSpec {
  double p = 0.01;                  // per-block exceedance probability
  int horizon_years = 1;            // m
  std::vector<double> scenario_soi; // one value per horizon year
};

/// Equal-weight average of the per-year return levels over the horizon.
/// Spatial covariates are frozen at the station's values; only the index
/// varies across scenario years.
inline double aggregated_quantile(const ReturnSpec& spec, const FitResult& fit,
                                  const StationMeta& station) {
  if (!fit.converged) throw NumericalError("aggregated_quantile: fit did not converge");
  if (spec.horizon_years < 1)
    throw std::invalid_argument("aggregated_quantile: horizon must be >= 1");
  if (spec.scenario_soi.size() != static_cast<std::size_t>(spec.horizon_years))
    throw std::invalid_argument("aggregated_quantile: scenario length must equal horizon");
  double sum = 0;
  for (int i = 0; i < spec.horizon_years; ++i) {
    BmRow row;
    row.station_id = station.station_id;
    row.soi = spec.scenario_soi[static_cast<std::size_t>(i)];
    row.log_cdist = std::log(station.cdist_km);
    row.lat = station.lat;
    row.lon = station.lon;
    const GevParams params = fit.model.params_at(row);
    if (!(params.sigma > 0))
      throw InfeasibleError("aggregated_quantile: scale non-positive in scenario year " +
                            std::to_string(i + 1) + " for station " + station.station_id);
    sum += return_level(spec.p, params);
  }
  return sum / static_cast<double>(spec.horizon_years);
}

struct ReturnLevelInterval {
  double level = 0;  // mm
  double se = 0;     // delta-method standard error, mm
  double lo = 0;
  double hi = 0;
};

/// Delta-method interval for the horizon-aggregated return level: the
/// aggregate is averaged over scenario years, so its gradient with respect
/// to the fitted coefficients is the average of the per-year gradients,
/// and var = g' Cov g over the fit's observed-information covariance. A
/// pinned shape is treated as a known constant.
inline ReturnLevelInterval aggregated_quantile_interval(const ReturnSpec& spec,
                                                        const FitResult& fit,
                                                        const StationMeta& station,
                                                        double z_critical = 1.959963984540054) {
  if (!fit.converged) throw NumericalError("aggregated_quantile_interval: fit did not converge");
  if (fit.covariance.empty())
    throw NumericalError("aggregated_quantile_interval: no parameter covariance available");
  if (spec.scenario_soi.size() != static_cast<std::size_t>(spec.horizon_years))
    throw std::invalid_argument("aggregated_quantile_interval: scenario length must equal horizon");

  const std::size_t p = static_cast<std::size_t>(fit.n_params);
  if (fit.covariance.size() != p * p)
    throw NumericalError("aggregated_quantile_interval: covariance size mismatch");
  const std::size_t n_active = 1 + static_cast<std::size_t>(fit.model.mask.n_active());
  const bool xi_estimated = p == 2 * n_active + 1;

  ReturnLevelInterval interval;
  std::vector<double> gradient(p, 0.0);
  const auto active = fit.model.active_flags();
  for (int i = 0; i < spec.horizon_years; ++i) {
    BmRow row;
    row.station_id = station.station_id;
    row.soi = spec.scenario_soi[static_cast<std::size_t>(i)];
    row.log_cdist = std::log(station.cdist_km);
    row.lat = station.lat;
    row.lon = station.lon;
    const GevParams params = fit.model.params_at(row);
    if (!(params.sigma > 0))
      throw InfeasibleError("aggregated_quantile_interval: scale non-positive in scenario year " +
                            std::to_string(i + 1));
    interval.level += return_level(spec.p, params);
    const auto [d_mu, d_sigma, d_xi] = return_level_gradient(spec.p, params);
    const std::array<double, 5> regressors{1.0, row.soi, row.log_cdist, row.lat, row.lon};
    std::size_t at = 0;
    for (std::size_t j = 0; j < 5; ++j)
      if (active[j]) gradient[at++] += d_mu * regressors[j];
    for (std::size_t j = 0; j < 5; ++j)
      if (active[j]) gradient[at++] += d_sigma * regressors[j];
    if (xi_estimated) gradient[at] += d_xi;
  }
  const double m = static_cast<double>(spec.horizon_years);
  interval.level /= m;
  for (double& g : gradient) g /= m;

  double variance = 0;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      variance += gradient[i] * fit.covariance[i * p + j] * gradient[j];
  if (!(variance >= 0))
    throw NumericalError("aggregated_quantile_interval: negative delta-method variance");
  interval.se = std::sqrt(variance);
  interval.lo = interval.level - z_critical * interval.se;
  interval.hi = interval.level + z_critical * interval.se;
  return interval;
}

/// P(block maximum > z) under the link-evaluated parameters of one
/// station-year.
inline double exceedance_probability(double z, const CovariateRow& covariates,
                                     const FitResult& fit) {
  if (!fit.converged) throw NumericalError("exceedance_probability: fit did not converge");
  BmRow row;
  row.station_id = covariates.station_id;
  row.soi = covariates.soi;
  row.log_cdist = covariates.log_cdist;
  row.lat = covariates.lat;
  row.lon = covariates.lon;
  const GevParams params = fit.model.params_at(row);
  if (!(params.sigma > 0))
    throw InfeasibleError("exceedance_probability: non-positive scale for station " +
                          covariates.station_id);
  return 1.0 - gev_cdf(z, params);
}

/// Difference in percentage points; relative change is available separately.
inline double percent_increase(double p_la_nina, double p_el_nino) {
  if (!(p_la_nina > 0 && p_la_nina < 1) || !(p_el_nino > 0 && p_el_nino < 1))
    throw std::invalid_argument("percent_increase: probabilities must be in (0,1)");
  return 100.0 * (p_la_nina - p_el_nino);
}

inline double relative_increase_percent(double p_la_nina, double p_el_nino) {
  if (!(p_la_nina > 0 && p_la_nina < 1) || !(p_el_nino > 0 && p_el_nino < 1))
    throw std::invalid_argument("relative_increase_percent: probabilities must be in (0,1)");
  return 100.0 * (p_la_nina - p_el_nino) / p_el_nino;
}

struct SoiScenario {
  std::uint64_t seed = 0;
  std::vector<double> values;  // one simulated yearly index value per horizon year
};

/// m independent draws with replacement from the historical yearly values.
inline SoiScenario simulate_soi(std::span<const double> history, int horizon_years,
                                std::uint64_t seed) {
  if (history.empty()) throw std::invalid_argument("simulate_soi: empty history");
  if (horizon_years < 1) throw std::invalid_argument("simulate_soi: horizon must be >= 1");
  SoiScenario scenario;
  scenario.seed = seed;
  scenario.values.reserve(static_cast<std::size_t>(horizon_years));
  SplitMix64 rng(seed);
  for (int i = 0; i < horizon_years; ++i)
    scenario.values.push_back(history[rng.uniform_index(history.size())]);
  return scenario;
}

struct ShapeDriftCell {
  int k = 1;
  std::size_t block_length = 0;  // days
  std::size_t n_blocks = 0;
  double xi = std::numeric_limits<double>::quiet_NaN();
  double relative_error = std::numeric_limits<double>::quiet_NaN();  // vs the k = 1 fit
  bool flagged = false;      // relative error above the threshold
  bool available = true;     // false when too few blocks to fit
};

using ShapeDriftTable = std::vector<ShapeDriftCell>;

/// Stationary shape estimates of the windowed-min block maxima across window
/// sizes and block lengths, pooled over all series. The shape should hold
/// still in k; cells whose relative drift from the k = 1 estimate exceeds
/// the threshold (default 100%) are flagged as numerically untrustworthy.
inline ShapeDriftTable shape_drift_report(const std::vector<DailySeries>& series_set, int k_max,
                                          const std::vector<std::size_t>& block_length_grid,
                                          double flag_threshold = 1.0,
                                          const FitOptions& fit_options = {}) {
  if (k_max < 1) throw std::invalid_argument("shape_drift_report: k_max must be >= 1");
  if (series_set.empty()) throw DataError("shape_drift_report: no series");
  ShapeDriftTable table;
  for (std::size_t block_len : block_length_grid) {
    double xi_reference = std::numeric_limits<double>::quiet_NaN();
    for (int k = 1; k <= k_max; ++k) {
      std::vector<double> maxima;
      for (const auto& series : series_set) {
        const auto block_maxes = fixed_block_maxima(windowed_min(series, k), block_len);
        maxima.insert(maxima.end(), block_maxes.begin(), block_maxes.end());
      }
      ShapeDriftCell cell;
      cell.k = k;
      cell.block_length = block_len;
      cell.n_blocks = maxima.size();
      if (maxima.size() < 30) {
        cell.available = false;
        table.push_back(cell);
        continue;
      }
      FitOptions opts = fit_options;
      opts.compute_std_errors = false;  // only the shape estimate is reported
      const FitResult fit = fit_stationary(maxima, opts);
      if (!fit.converged) {
        cell.available = false;
        table.push_back(cell);
        continue;
      }
      cell.xi = fit.model.xi;
      if (k == 1) {
        xi_reference = cell.xi;
        cell.relative_error = 0.0;
      } else if (std::isfinite(xi_reference) && xi_reference != 0) {
        cell.relative_error = std::fabs(cell.xi - xi_reference) / std::fabs(xi_reference);
      }
      cell.flagged = std::isfinite(cell.relative_error) && cell.relative_error > flag_threshold;
      table.push_back(cell);
    }
  }
  return table;
}

}  // namespace mdx
