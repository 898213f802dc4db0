#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mdx/functionals.hpp"
#include "mdx/gev.hpp"
#include "mdx/link_model.hpp"
#include "mdx/rng.hpp"

// Seeded generators with analytically known extreme-value behaviour. These
// back every oracle test: i.i.d. sequences have extremal index 1, the
// moving-maximum construction of order r has extremal index exactly 1/r, and
// the linked generator draws block maxima from an explicit covariate model.

namespace mdx {

/// Inverse-CDF sampling; extremal index 1 by construction.
inline std::vector<double> sample_iid_gev(const GevParams& params, std::size_t n,
                                          std::uint64_t seed) {
  if (!(params.sigma > 0)) throw std::invalid_argument("sample_iid_gev: sigma must be > 0");
  std::vector<double> out;
  out.reserve(n);
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) out.push_back(gev_quantile(rng.uniform(), params));
  return out;
}

/// Order-r moving maximum with a Fréchet-type marginal. Built as
/// U_t = max_{j<r} (1/r) W_{t-j} over i.i.d. unit Fréchet noise
/// (W = -1/log(u)), which is unit Fréchet marginally, then pushed through
/// the increasing map x -> mu + sigma (x^xi - 1)/xi so the marginal matches
/// the requested parameters. Monotone maps preserve the exceedance
/// structure, so the extremal index is exactly 1/r.
inline std::vector<double> sample_moving_maximum(int r, std::size_t n, std::uint64_t seed,
                                                 const GevParams& marginal) {
  if (r < 1) throw std::invalid_argument("sample_moving_maximum: order r must be >= 1");
  if (!(marginal.sigma > 0))
    throw std::invalid_argument("sample_moving_maximum: sigma must be > 0");
  if (!(marginal.xi > 0))
    throw std::invalid_argument("sample_moving_maximum: marginal must be Fréchet type (xi > 0)");

  SplitMix64 rng(seed);
  const std::size_t n_noise = n + static_cast<std::size_t>(r) - 1;
  std::vector<double> noise(n_noise);
  for (double& w : noise) w = -1.0 / std::log(rng.uniform());

  std::vector<double> out;
  out.reserve(n);
  const double weight = 1.0 / static_cast<double>(r);
  for (std::size_t t = 0; t < n; ++t) {
    double u = noise[t];
    for (int j = 1; j < r; ++j) u = std::max(u, noise[t + static_cast<std::size_t>(j)]);
    u *= weight;
    out.push_back(marginal.mu + marginal.sigma * std::expm1(marginal.xi * std::log(u)) / marginal.xi);
  }
  return out;
}

/// One block-maximum draw per covariate row from the linked model.
inline BlockMaximaTable sample_linked_gev(const LinkModel& model,
                                          const std::vector<CovariateRow>& covariates,
                                          std::uint64_t seed) {
  SplitMix64 rng(seed);
  BlockMaximaTable table;
  table.reserve(covariates.size());
  for (std::size_t i = 0; i < covariates.size(); ++i) {
    const CovariateRow& c = covariates[i];
    BmRow row;
    row.station_id = c.station_id;
    row.year = c.year;
    row.soi = c.soi;
    row.log_cdist = c.log_cdist;
    row.lat = c.lat;
    row.lon = c.lon;
    const GevParams params = model.params_at(row);
    if (!(params.sigma > 0))
      throw InfeasibleError("sample_linked_gev: non-positive scale at row " + std::to_string(i) +
                            " (station " + c.station_id + ", year " + std::to_string(c.year) + ")");
    row.b = gev_quantile(rng.uniform(), params);
    table.push_back(std::move(row));
  }
  return table;
}

/// Wraps a raw value sequence as a fully observed daily series starting at
/// Jan 1 of the given year, for feeding synthetic data through the same
/// machinery as real data. Values must be >= 0.
inline DailySeries as_daily_series(std::vector<double> values, const std::string& station_id,
                                   int start_year = 2000) {
  DailySeries series;
  series.station_id = station_id;
  series.start = first_day_of_year(start_year);
  series.values = std::move(values);
  series.validate();
  return series;
}

}  // namespace mdx
