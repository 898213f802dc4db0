#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mdx/csv.hpp"
#include "mdx/dates.hpp"
#include "mdx/errors.hpp"
#include "mdx/series.hpp"

namespace mdx {

/// Parses a daily precipitation file (header `date,prcp_mm`, empty value
/// field = missing). Calendar gaps between rows are filled with missing
/// markers so the result covers every day of the span. The station id is
/// the file name stem unless overridden.
inline void expect_header(const std::vector<std::string>& lines, const std::string& header,
                          const std::string& path) {
  if (lines.empty()) throw ParseError(path + ": empty file");
  if (std::string(strip_cr(lines[0])) != header)
    throw ParseError(path + ": expected header '" + header + "', got '" +
                     std::string(strip_cr(lines[0])) + "'");
}

inline DailySeries parse_daily_csv(const std::string& path, std::string station_id = "") {
  if (station_id.empty()) station_id = std::filesystem::path(path).stem().string();
  const auto lines = read_lines(path);
  expect_header(lines, "date,prcp_mm", path);

  DailySeries series;
  series.station_id = station_id;
  bool have_prev = false;
  Date prev{};

  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::string_view line = strip_cr(lines[row]);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string ctx = path + ":" + std::to_string(row + 1);
    if (fields.size() != 2) throw ParseError(ctx + ": expected 2 fields, got " +
                                             std::to_string(fields.size()));
    Date d;
    try {
      d = parse_date(fields[0]);
    } catch (const ParseError& e) {
      throw ParseError(ctx + ": " + e.what());
    }
    if (have_prev && d <= prev)
      throw ValidationError(ctx + ": dates not strictly increasing");

    double value = kMissing;
    if (!fields[1].empty()) {
      value = parse_double_field(fields[1], ctx);
      if (value < 0)
        throw ValidationError(ctx + ": negative precipitation " + std::string(fields[1]));
    }

    if (!have_prev) {
      series.start = d;
    } else {
      // gap days become explicit missing entries
      for (auto gap = prev + std::chrono::days{1}; gap < d; gap += std::chrono::days{1})
        series.values.push_back(kMissing);
    }
    series.values.push_back(value);
    prev = d;
    have_prev = true;
  }
  if (series.values.empty()) throw ParseError(path + ": no data rows");
  series.validate();
  return series;
}

/// Writes the same format back; missing days serialize as an empty value
/// field, so parse(write(s)) == s.
inline void write_daily_csv(const DailySeries& series, const std::string& path,
                            bool full_precision = true) {
  CsvWriter out(path, {"date", "prcp_mm"}, full_precision);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double v = series.values[i];
    out.write_strings({format_date(series.date_at(i)),
                       is_missing(v) ? std::string{} : out.num(v)});
  }
}

/// Station metadata file: header `station_id,lat,lon,cdist_km`.
inline std::vector<StationMeta> parse_station_csv(const std::string& path) {
  const auto lines = read_lines(path);
  expect_header(lines, "station_id,lat,lon,cdist_km", path);
  std::vector<StationMeta> out;
  std::set<std::string> seen;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::string_view line = strip_cr(lines[row]);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string ctx = path + ":" + std::to_string(row + 1);
    if (fields.size() != 4) throw ParseError(ctx + ": expected 4 fields");
    StationMeta meta;
    meta.station_id = std::string(fields[0]);
    meta.lat = parse_double_field(fields[1], ctx);
    meta.lon = parse_double_field(fields[2], ctx);
    meta.cdist_km = parse_double_field(fields[3], ctx);
    meta.validate();
    if (!seen.insert(meta.station_id).second)
      throw ValidationError(ctx + ": duplicate station_id " + meta.station_id);
    out.push_back(std::move(meta));
  }
  return out;
}

/// Monthly index file: header `year,month,soi`, rows in strict month order
/// with no holes inside the covered span.
inline SoiSeries parse_soi_csv(const std::string& path) {
  const auto lines = read_lines(path);
  expect_header(lines, "year,month,soi", path);
  SoiSeries soi;
  bool first = true;
  int expect_year = 0, expect_month = 0;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::string_view line = strip_cr(lines[row]);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string ctx = path + ":" + std::to_string(row + 1);
    if (fields.size() != 3) throw ParseError(ctx + ": expected 3 fields");
    const int year = static_cast<int>(parse_int_field(fields[0], ctx));
    const int month = static_cast<int>(parse_int_field(fields[1], ctx));
    if (month < 1 || month > 12) throw ValidationError(ctx + ": month out of 1..12");
    const double value = parse_double_field(fields[2], ctx);
    if (first) {
      soi.first_year = year;
      soi.first_month = month;
      first = false;
    } else if (year != expect_year || month != expect_month) {
      throw ValidationError(ctx + ": months not contiguous (expected " +
                            std::to_string(expect_year) + "-" + std::to_string(expect_month) + ")");
    }
    soi.values.push_back(value);
    expect_month = month + 1;
    expect_year = year;
    if (expect_month == 13) {
      expect_month = 1;
      ++expect_year;
    }
  }
  if (soi.values.empty()) throw ParseError(path + ": no data rows");
  return soi;
}

/// Calendar years whose missing-day fraction is strictly below 1%.
/// Days outside the series' covered span count as missing, and leap years
/// use a 366-day denominator.
inline std::set<int> quality_filter(const DailySeries& series) {
  if (series.values.empty()) return {};
  std::map<int, int> missing_by_year;
  const int first_year = year_of(series.date_at(0));
  const int last_year = year_of(series.date_at(series.size() - 1));
  for (int y = first_year; y <= last_year; ++y) missing_by_year[y] = 0;
  for (std::size_t i = 0; i < series.size(); ++i)
    if (is_missing(series.values[i])) ++missing_by_year[year_of(series.date_at(i))];

  // uncovered leading/trailing portions of the edge years
  const Date span_begin = series.date_at(0);
  const Date span_end = series.date_at(series.size() - 1);
  missing_by_year[first_year] += static_cast<int>((span_begin - first_day_of_year(first_year)).count());
  missing_by_year[last_year] +=
      static_cast<int>((first_day_of_year(last_year + 1) - std::chrono::days{1} - span_end).count());

  std::set<int> admissible;
  for (const auto& [year, n_missing] : missing_by_year) {
    const double fraction = static_cast<double>(n_missing) / days_in_year(year);
    if (fraction < 0.01) admissible.insert(year);
  }
  return admissible;
}

/// Arithmetic mean of the 12 monthly index values of a calendar year.
inline double yearly_soi(const SoiSeries& soi, int year) {
  double sum = 0;
  for (int month = 1; month <= 12; ++month) sum += soi.at(year, month);
  return sum / 12.0;
}

/// Assembles one regressor row per station-year.
inline std::vector<CovariateRow> build_covariates(const StationMeta& meta,
                                                  const SoiSeries& soi,
                                                  const std::set<int>& years) {
  std::vector<CovariateRow> rows;
  rows.reserve(years.size());
  for (int year : years) {
    CovariateRow row;
    row.station_id = meta.station_id;
    row.year = year;
    row.soi = yearly_soi(soi, year);
    row.log_cdist = std::log(meta.cdist_km);
    row.lat = meta.lat;
    row.lon = meta.lon;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mdx
