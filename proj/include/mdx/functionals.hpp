#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "mdx/errors.hpp"
#include "mdx/series.hpp"

#include <set>

namespace mdx {

/// Window sizes above this draw a documented warning: shape-parameter error
/// grows past usability for longer runs at one-year blocks.
inline constexpr int kMaxWindow = 7;
inline constexpr int kWindowWarnAbove = 3;

/// Moving minimum over a k-day window, value i anchored to the date of the
/// i-th base day. Undefined wherever the window touches a missing day or
/// runs off the end of the series.
struct WindowedSeries {
  std::string station_id;
  Date start{};
  int k = 1;
  std::vector<double> values;  // length = base length - k + 1, kMissing where undefined

  std::size_t size() const { return values.size(); }
  Date date_at(std::size_t i) const { return start + std::chrono::days{static_cast<long>(i)}; }

  std::size_t defined_count() const {
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [](double v) { return !is_missing(v); }));
  }
};

inline WindowedSeries windowed_min(const DailySeries& series, int k) {
  if (k < 1) throw std::invalid_argument("windowed_min: k must be >= 1");
  WindowedSeries out;
  out.station_id = series.station_id;
  out.start = series.start;
  out.k = k;
  const std::size_t n = series.size();
  if (n + 1 <= static_cast<std::size_t>(k)) return out;  // shorter than any window
  out.values.assign(n - static_cast<std::size_t>(k) + 1, kMissing);
  for (std::size_t j = 0; j < out.values.size(); ++j) {
    double m = series.values[j];
    if (is_missing(m)) continue;
    bool ok = true;
    for (int offset = 1; offset < k; ++offset) {
      const double x = series.values[j + static_cast<std::size_t>(offset)];
      if (is_missing(x)) {
        ok = false;
        break;
      }
      m = std::min(m, x);
    }
    if (ok) out.values[j] = m;
  }
  return out;
}

struct BlockMaxRow {
  std::string station_id;
  int year = 0;
  int k = 1;
  double b = 0;  // mm
};

struct BlockMaximaResult {
  std::vector<BlockMaxRow> rows;
  std::vector<int> skipped_years;  // admissible years with no defined window
};

/// Calendar-year block maxima of the windowed series. A window belongs to
/// the year of its anchor (first) day, so late-December windows that reach
/// into January still count toward the earlier year.
inline BlockMaximaResult block_maxima(const WindowedSeries& windowed,
                                      const std::set<int>& admissible_years) {
  std::map<int, double> best;
  for (std::size_t i = 0; i < windowed.size(); ++i) {
    const double y = windowed.values[i];
    if (is_missing(y)) continue;
    const int year = year_of(windowed.date_at(i));
    if (!admissible_years.count(year)) continue;
    auto [it, inserted] = best.emplace(year, y);
    if (!inserted) it->second = std::max(it->second, y);
  }
  BlockMaximaResult result;
  for (int year : admissible_years) {
    const auto it = best.find(year);
    if (it == best.end()) {
      result.skipped_years.push_back(year);
      continue;
    }
    result.rows.push_back({windowed.station_id, year, windowed.k, it->second});
  }
  return result;
}

/// Maxima over consecutive fixed-length blocks of anchors (block lengths in
/// days), for shape-vs-block-length studies. Blocks with no defined window
/// are dropped.
inline std::vector<double> fixed_block_maxima(const WindowedSeries& windowed,
                                              std::size_t block_len) {
  if (block_len == 0) throw std::invalid_argument("fixed_block_maxima: block_len must be >= 1");
  std::vector<double> maxima;
  for (std::size_t begin = 0; begin + block_len <= windowed.size(); begin += block_len) {
    double m = kMissing;
    for (std::size_t i = begin; i < begin + block_len; ++i) {
      const double y = windowed.values[i];
      if (is_missing(y)) continue;
      m = is_missing(m) ? y : std::max(m, y);
    }
    if (!is_missing(m)) maxima.push_back(m);
  }
  return maxima;
}

/// One block maximum joined with its station-year regressors.
struct BmRow {
  std::string station_id;
  int year = 0;
  int k = 1;
  double b = 0;          // mm
  double soi = 0;
  double log_cdist = 0;
  double lat = 0;
  double lon = 0;
};

using BlockMaximaTable = std::vector<BmRow>;

/// Joins block maxima with covariate rows on (station_id, year). Every block
/// maximum must have a covariate row; extra covariate rows are ignored.
inline BlockMaximaTable join_covariates(const std::vector<BlockMaxRow>& rows,
                                        const std::vector<CovariateRow>& covariates) {
  std::map<std::pair<std::string, int>, const CovariateRow*> index;
  for (const auto& c : covariates) index[{c.station_id, c.year}] = &c;
  BlockMaximaTable table;
  table.reserve(rows.size());
  for (const auto& r : rows) {
    const auto it = index.find({r.station_id, r.year});
    if (it == index.end())
      throw DataError("no covariates for station " + r.station_id + " year " +
                      std::to_string(r.year));
    const CovariateRow& c = *it->second;
    table.push_back({r.station_id, r.year, r.k, r.b, c.soi, c.log_cdist, c.lat, c.lon});
  }
  return table;
}

}  // namespace mdx
