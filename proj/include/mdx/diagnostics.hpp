#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mdx/fit.hpp"
#include "mdx/special.hpp"

namespace mdx {

/// Block maxima transformed to a common stationary scale: standard Gumbel
/// exactly when the fitted model is correct.
struct StandardizedSample {
  std::vector<double> values;      // sorted by (year, station_id): the pooled time order
  std::vector<int> years;          // parallel to values
  int model_id = -1;
  std::size_t n_excluded = 0;      // rows outside the fitted support
};

/// (1/xi) * log(1 + xi (z - mu_t)/sigma_t) per row, with the linear form at
/// the xi switch. Rows violating the support constraint are excluded and
/// counted; more than 1% exclusions is a hard failure.
inline StandardizedSample standardize(const BlockMaximaTable& table, const LinkModel& model,
                                      int model_id = -1) {
  if (table.empty()) throw DataError("standardize: empty table");

  std::vector<std::size_t> order(table.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (table[a].year != table[b].year) return table[a].year < table[b].year;
    return table[a].station_id < table[b].station_id;
  });

  StandardizedSample sample;
  sample.model_id = model_id;
  sample.values.reserve(table.size());
  sample.years.reserve(table.size());
  for (std::size_t idx : order) {
    const BmRow& row = table[idx];
    const GevParams p = model.params_at(row);
    if (!(p.sigma > 0)) {
      ++sample.n_excluded;
      continue;
    }
    const double x = (row.b - p.mu) / p.sigma;
    if (gev_is_gumbel(p.xi)) {
      sample.values.push_back(x);
    } else {
      const double s = 1.0 + p.xi * x;
      if (s <= 0) {
        ++sample.n_excluded;
        continue;
      }
      sample.values.push_back(std::log1p(p.xi * x) / p.xi);
    }
    sample.years.push_back(row.year);
  }
  if (static_cast<double>(sample.n_excluded) > 0.01 * static_cast<double>(table.size()))
    throw NumericalError("standardize: " + std::to_string(sample.n_excluded) + " of " +
                         std::to_string(table.size()) +
                         " rows outside the fitted support (> 1%)");
  return sample;
}

inline StandardizedSample standardize(const BlockMaximaTable& table, const FitResult& fit,
                                      int model_id = -1) {
  if (!fit.converged) throw NumericalError("standardize: fit did not converge");
  return standardize(table, fit.model, model_id);
}

struct QuantilePlotData {
  std::vector<double> theoretical;  // standard Gumbel quantiles at i/(n+1)
  std::vector<double> empirical;    // order statistics
};

inline QuantilePlotData quantile_plot_data(const StandardizedSample& sample) {
  const std::size_t n = sample.values.size();
  if (n < 2) throw DataError("quantile_plot_data: need at least 2 values");
  QuantilePlotData plot;
  plot.theoretical.reserve(n);
  plot.empirical = sample.values;
  std::sort(plot.empirical.begin(), plot.empirical.end());
  for (std::size_t i = 1; i <= n; ++i)
    plot.theoretical.push_back(
        gumbel_std_quantile(static_cast<double>(i) / (static_cast<double>(n) + 1.0)));
  return plot;
}

struct TestResult {
  std::string name;
  double statistic = 0;
  double p_value = 1;
  std::size_t n = 0;
  std::size_t n_clipped = 0;  // A-D probability clips, if any
};

/// Anderson-Darling against the fixed standard Gumbel null:
///   A^2 = -n - (1/n) sum (2i-1)[ln u_(i) + ln(1 - u_(n+1-i))]
/// with u the null CDF of the sorted sample. The p-value treats the null as
/// fully specified.
inline TestResult anderson_darling_gumbel(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw DataError("anderson_darling_gumbel: need at least 2 values");
  std::vector<double> u(values.begin(), values.end());
  std::sort(u.begin(), u.end());
  TestResult result;
  result.name = "anderson-darling-gumbel";
  result.n = n;
  for (double& v : u) {
    v = gumbel_std_cdf(v);
    if (v < 1e-12) {
      v = 1e-12;
      ++result.n_clipped;
    } else if (v > 1.0 - 1e-12) {
      v = 1.0 - 1e-12;
      ++result.n_clipped;
    }
  }
  double sum = 0;
  for (std::size_t i = 1; i <= n; ++i)
    sum += (2.0 * static_cast<double>(i) - 1.0) * (std::log(u[i - 1]) + std::log(1.0 - u[n - i]));
  const double dn = static_cast<double>(n);
  result.statistic = -dn - sum / dn;
  result.p_value = anderson_darling_p_value(result.statistic, static_cast<int>(n));
  return result;
}

inline TestResult anderson_darling_gumbel(const StandardizedSample& sample) {
  if (sample.values.size() < 5)
    throw DataError("anderson_darling_gumbel: need at least 5 values");
  return anderson_darling_gumbel(std::span<const double>(sample.values));
}

/// Monotone-trend test on a sequence taken in temporal order. Reports
/// Kendall's tau = S / (n(n-1)/2) as the statistic and a two-sided p-value
/// from the normal approximation with tie-corrected variance and continuity
/// correction.
inline TestResult mann_kendall(std::span<const double> values_in_time_order) {
  const std::size_t n = values_in_time_order.size();
  if (n < 8) throw DataError("mann_kendall: need at least 8 values for the normal approximation");
  TestResult result;
  result.name = "mann-kendall";
  result.n = n;

  long long s = 0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double diff = values_in_time_order[j] - values_in_time_order[i];
      if (diff > 0) ++s;
      else if (diff < 0) --s;
    }
  const double pairs = 0.5 * static_cast<double>(n) * (static_cast<double>(n) - 1.0);
  result.statistic = static_cast<double>(s) / pairs;

  std::map<double, std::size_t> tie_groups;
  for (double v : values_in_time_order) ++tie_groups[v];
  const double dn = static_cast<double>(n);
  double variance = dn * (dn - 1.0) * (2.0 * dn + 5.0);
  for (const auto& [value, count] : tie_groups) {
    if (count < 2) continue;
    const double t = static_cast<double>(count);
    variance -= t * (t - 1.0) * (2.0 * t + 5.0);
  }
  variance /= 18.0;

  if (s == 0 || variance <= 0) {
    result.p_value = 1.0;
    return result;
  }
  const double z = (static_cast<double>(s) - (s > 0 ? 1.0 : -1.0)) / std::sqrt(variance);
  result.p_value = 2.0 * (1.0 - normal_cdf(std::fabs(z)));
  return result;
}

inline TestResult mann_kendall(const StandardizedSample& sample) {
  return mann_kendall(std::span<const double>(sample.values));
}

}  // namespace mdx
