#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mdx/dates.hpp"
#include "mdx/errors.hpp"

namespace mdx {

/// Missing observations are carried in-band as quiet NaN so a series is
/// always one value per calendar day of its span.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double x) { return std::isnan(x); }

/// One station's daily precipitation record. Day i is start + i days;
/// gaps in the source file appear as missing values, never as skipped days.
struct DailySeries {
  std::string station_id;
  Date start{};
  std::vector<double> values;  // mm, >= 0 when present

  std::size_t size() const { return values.size(); }
  Date date_at(std::size_t i) const { return start + std::chrono::days{static_cast<long>(i)}; }

  /// Enforces the type invariants; call after any manual construction.
  void validate() const {
    if (station_id.empty()) throw ValidationError("DailySeries: empty station_id");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!is_missing(values[i]) && values[i] < 0.0)
        throw ValidationError("negative precipitation at " + format_date(date_at(i)) +
                              " (station " + station_id + ")");
    }
  }
};

struct StationMeta {
  std::string station_id;
  double lat = 0;        // degrees, southern hemisphere negative
  double lon = 0;        // degrees
  double cdist_km = 0;   // distance to coast, strictly positive

  void validate() const {
    if (station_id.empty()) throw ValidationError("StationMeta: empty station_id");
    if (!(cdist_km > 0))
      throw ValidationError("station " + station_id + ": coastal distance must be > 0");
    if (lat < -90 || lat > 90)
      throw ValidationError("station " + station_id + ": latitude out of [-90,90]");
    if (lon < -180 || lon > 180)
      throw ValidationError("station " + station_id + ": longitude out of [-180,180]");
  }
};

/// Contiguous monthly climate-index record starting at (first_year, first_month).
struct SoiSeries {
  int first_year = 0;
  int first_month = 1;  // 1..12
  std::vector<double> values;

  std::size_t size() const { return values.size(); }

  bool has_month(int year, int month) const {
    const long idx = index_of(year, month);
    return idx >= 0 && idx < static_cast<long>(values.size());
  }

  double at(int year, int month) const {
    if (!has_month(year, month))
      throw DataError("SOI value missing for " + std::to_string(year) + "-" +
                      std::to_string(month));
    return values[static_cast<std::size_t>(index_of(year, month))];
  }

 private:
  long index_of(int year, int month) const {
    return (static_cast<long>(year) - first_year) * 12 + (month - first_month);
  }
};

/// Per station-year regressor vector: (SOI, log coastal distance, lat, lon).
struct CovariateRow {
  std::string station_id;
  int year = 0;
  double soi = 0;
  double log_cdist = 0;
  double lat = 0;
  double lon = 0;
};

}  // namespace mdx
