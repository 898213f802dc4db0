#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mdx/errors.hpp"
#include "mdx/functionals.hpp"
#include "mdx/series.hpp"

namespace mdx {

/// Linear-interpolation empirical quantile of the present values
/// (R type 7 / numpy "linear"). Scale-equivariant by construction.
inline double empirical_quantile(std::span<const double> values, double level) {
  if (!(level > 0 && level < 1))
    throw std::invalid_argument("empirical_quantile: level must be in (0,1)");
  std::vector<double> present;
  present.reserve(values.size());
  for (double v : values)
    if (!is_missing(v)) present.push_back(v);
  if (present.empty()) throw DataError("empirical_quantile: no present values");
  std::sort(present.begin(), present.end());
  const double h = (static_cast<double>(present.size()) - 1.0) * level;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= present.size()) return present.back();
  return present[lo] + (h - static_cast<double>(lo)) * (present[lo + 1] - present[lo]);
}

/// Exceedances of a high empirical-quantile threshold and the wait times
/// between them. Times are 1-based day indices on the series' calendar axis,
/// so gaps spanning missing days keep their true length.
struct ExceedanceRecord {
  double threshold = 0;                    // mm
  double quantile_level = 0;               // probability level that set the threshold
  std::vector<std::size_t> exceedance_times;  // 1-based indices, strictly increasing
  std::vector<double> inter_times;         // T_j = t_{j+1} - t_j, all >= 1

  std::size_t n_exceedances() const { return exceedance_times.size(); }
  std::size_t n_inter() const { return inter_times.size(); }
};

inline ExceedanceRecord exceedances_from_values(std::span<const double> values,
                                                double quantile_level) {
  ExceedanceRecord record;
  record.quantile_level = quantile_level;
  record.threshold = empirical_quantile(values, quantile_level);
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!is_missing(values[i]) && values[i] > record.threshold)
      record.exceedance_times.push_back(i + 1);
  if (record.exceedance_times.size() < 2)
    throw DataError("exceedances: fewer than 2 exceedances above the " +
                    std::to_string(quantile_level) + " quantile; extremal index not estimable");
  record.inter_times.reserve(record.exceedance_times.size() - 1);
  for (std::size_t j = 1; j < record.exceedance_times.size(); ++j)
    record.inter_times.push_back(
        static_cast<double>(record.exceedance_times[j] - record.exceedance_times[j - 1]));
  return record;
}

inline ExceedanceRecord exceedances(const DailySeries& series, double quantile_level) {
  return exceedances_from_values(series.values, quantile_level);
}

/// Which moment-ratio formula produced the estimate.
enum class EstimatorForm {
  kStandard,       // 2 (sum T)^2 / (N sum T^2), used when max T <= 2
  kBiasCorrected,  // 2 (sum(T-1))^2 / (N sum (T-1)(T-2)), used when max T > 2
  kSumSquares,     // 2 (sum T^2) / (N sum T(T-1)), opt-in variant
};

inline const char* estimator_form_name(EstimatorForm f, bool fallback) {
  switch (f) {
    case EstimatorForm::kStandard: return fallback ? "fallback-standard" : "standard";
    case EstimatorForm::kBiasCorrected: return fallback ? "fallback-bias-corrected" : "bias-corrected";
    case EstimatorForm::kSumSquares: return "sum-squares";
  }
  return "?";
}

struct ExtremalIndexEstimate {
  double theta = 1;            // in (0, 1]
  double cluster_size = 1;     // 1 / theta
  double threshold_quantile = 0;
  std::size_t n_exceedances = 0;
  EstimatorForm form_used = EstimatorForm::kStandard;
  bool clamped = false;        // raw ratio exceeded 1
  bool fell_back = false;      // opt-in variant had a zero denominator
};

/// Moment-ratio estimate of the extremal index from inter-exceedance times.
///
/// Default behaviour picks between the two standard inter-exceedance forms by
/// max T (the bias-corrected one needs a wait time > 2 to be defined) and
/// clamps the ratio to 1. The opt-in sum-of-squares variant (numerator
/// sum(T^2), denominator sum T(T-1)) is kept for cross-tool comparison; its
/// denominator vanishes when every wait time is 1, in which case we fall
/// back to the default pair and flag it.
inline ExtremalIndexEstimate ferro_segers(const ExceedanceRecord& record,
                                          EstimatorForm requested = EstimatorForm::kStandard) {
  const auto& T = record.inter_times;
  const std::size_t N = T.size();
  if (N < 2) throw DataError("ferro_segers: need at least 2 inter-exceedance times");

  double sum_t = 0, sum_t2 = 0, sum_tm1 = 0, sum_tm1_tm2 = 0, sum_t_tm1 = 0, max_t = 0;
  for (double t : T) {
    sum_t += t;
    sum_t2 += t * t;
    sum_tm1 += t - 1.0;
    sum_tm1_tm2 += (t - 1.0) * (t - 2.0);
    sum_t_tm1 += t * (t - 1.0);
    max_t = std::max(max_t, t);
  }

  ExtremalIndexEstimate est;
  est.threshold_quantile = record.quantile_level;
  est.n_exceedances = record.n_exceedances();

  double raw = 0;
  bool fell_back = false;
  EstimatorForm form = requested;
  if (requested == EstimatorForm::kSumSquares && sum_t_tm1 <= 0) {
    form = EstimatorForm::kStandard;  // all T_j = 1; variant undefined
    fell_back = true;
  }
  if (form == EstimatorForm::kSumSquares) {
    raw = 2.0 * sum_t2 / (static_cast<double>(N) * sum_t_tm1);
  } else {
    if (max_t > 2.0) {
      form = EstimatorForm::kBiasCorrected;
      raw = 2.0 * sum_tm1 * sum_tm1 / (static_cast<double>(N) * sum_tm1_tm2);
    } else {
      form = EstimatorForm::kStandard;
      raw = 2.0 * sum_t * sum_t / (static_cast<double>(N) * sum_t2);
    }
  }

  est.form_used = form;
  est.fell_back = fell_back;
  est.clamped = raw > 1.0;
  est.theta = est.clamped ? 1.0 : raw;
  est.cluster_size = 1.0 / est.theta;
  return est;
}

/// Extremal index of the k-day windowed-minimum process (k = 1 is the raw
/// daily series).
inline ExtremalIndexEstimate theta_for_windowed(const DailySeries& series, int k,
                                                double quantile_level,
                                                EstimatorForm form = EstimatorForm::kStandard) {
  const WindowedSeries windowed = windowed_min(series, k);
  return ferro_segers(exceedances_from_values(windowed.values, quantile_level), form);
}

}  // namespace mdx
