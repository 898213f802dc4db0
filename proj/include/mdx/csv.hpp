#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "mdx/errors.hpp"

// Minimal comma-delimited I/O. All file formats in this project are plain
// UTF-8 CSV with '.' decimal separators and no quoting, so a field split on
// ',' is the whole grammar.

namespace mdx {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline double parse_double_field(std::string_view field, const std::string& context) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ParseError(context + ": bad numeric field '" + std::string(field) + "'");
  return v;
}

inline long parse_int_field(std::string_view field, const std::string& context) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ParseError(context + ": bad integer field '" + std::string(field) + "'");
  return v;
}

/// Default numeric serialization: 6 significant digits.
/// Full precision mode emits the shortest decimal that round-trips.
inline std::string format_number(double x, bool full_precision = false) {
  char buf[40];
  if (full_precision) {
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
  }
  const int n = std::snprintf(buf, sizeof buf, "%.6g", x);
  return std::string(buf, static_cast<std::size_t>(n));
}

/// Row-oriented CSV writer that pins the column count at construction and
/// refuses rows that do not match it (the emit-time schema self-check).
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header,
            bool full_precision = false)
      : out_(path), n_cols_(header.size()), full_precision_(full_precision), path_(path) {
    if (!out_) throw ValidationError("cannot open for writing: " + path);
    write_strings(header);
  }

  void write_strings(const std::vector<std::string>& fields) {
    if (fields.size() != n_cols_)
      throw ValidationError(path_ + ": row has " + std::to_string(fields.size()) +
                            " fields, schema has " + std::to_string(n_cols_));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  std::string num(double x) const { return format_number(x, full_precision_); }

 private:
  std::ofstream out_;
  std::size_t n_cols_;
  bool full_precision_;
  std::string path_;
};

/// Reads all lines of a text file; throws with the path on failure.
inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace mdx
