#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "mdx/functionals.hpp"

using namespace mdx;

namespace {

DailySeries series_from(std::vector<double> values, int start_year = 2001,
                        const std::string& id = "F") {
  DailySeries s;
  s.station_id = id;
  s.start = first_day_of_year(start_year);
  s.values = std::move(values);
  s.validate();
  return s;
}

/// Independent oracle: minimum over every window by direct enumeration.
std::vector<double> brute_force_windowed_min(const std::vector<double>& x, int k) {
  std::vector<double> out;
  for (std::size_t j = 0; j + static_cast<std::size_t>(k) <= x.size(); ++j) {
    double m = x[j];
    bool ok = !is_missing(x[j]);
    for (int t = 1; t < k && ok; ++t) {
      if (is_missing(x[j + static_cast<std::size_t>(t)]))
        ok = false;
      else
        m = std::min(m, x[j + static_cast<std::size_t>(t)]);
    }
    out.push_back(ok ? m : kMissing);
  }
  return out;
}

}  // namespace

TEST_CASE("windowed_min pairwise example") {
  const auto w = windowed_min(series_from({3, 1, 4, 1, 5}), 2);
  REQUIRE(w.values == std::vector<double>{1, 1, 1, 1});
}

TEST_CASE("windowed_min with k = 1 is the identity") {
  const std::vector<double> x{3, 1, 4, 1, 5, 9, 2, 6};
  const auto w = windowed_min(series_from(x), 1);
  CHECK(w.values == x);
}

TEST_CASE("windowed_min matches brute force") {
  CHECK(windowed_min(series_from({3, 1, 4, 1, 5}), 3).values == std::vector<double>{1, 1, 1});
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> amount(0.0, 50.0);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> x;
    for (int i = 0; i < 60; ++i) x.push_back(gen() % 7 == 0 ? kMissing : amount(gen));
    x.front() = 1.0;  // keep validate() happy about nothing; present edges not required
    for (int k = 1; k <= 5; ++k) {
      const auto got = windowed_min(series_from(x), k).values;
      const auto want = brute_force_windowed_min(x, k);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        if (is_missing(want[i]))
          CHECK(is_missing(got[i]));
        else
          CHECK(got[i] == want[i]);
      }
    }
  }
}

TEST_CASE("windowed_min argument and edge handling") {
  CHECK_THROWS_AS(windowed_min(series_from({1, 2, 3}), 0), std::invalid_argument);
  // k longer than every contiguous run: defined nowhere, but not an error
  const auto w = windowed_min(series_from({1, kMissing, 2}), 2);
  CHECK(w.defined_count() == 0);
  // series shorter than k
  CHECK(windowed_min(series_from({1, 2}), 5).values.empty());
}

TEST_CASE("windowed_min is not shuffle-invariant for k >= 2") {
  std::vector<double> x{9, 1, 8, 2, 7, 3, 6, 4, 5, 10};
  const auto base = windowed_min(series_from(x), 2).values;
  std::vector<double> shuffled = x;
  std::mt19937 gen(5);
  std::shuffle(shuffled.begin(), shuffled.end(), gen);
  REQUIRE(shuffled != x);
  const auto permuted = windowed_min(series_from(shuffled), 2).values;
  CHECK(base != permuted);  // would pass for a sorted/order-free implementation
}

TEST_CASE("block_maxima basic examples") {
  SECTION("single year, constant windowed values") {
    const auto w = windowed_min(series_from({3, 1, 4, 1, 5}), 2);
    const auto result = block_maxima(w, {2001});
    REQUIRE(result.rows.size() == 1);
    CHECK(result.rows[0].b == 1.0);
    CHECK(result.rows[0].year == 2001);
  }
  SECTION("maximum of mixed values") {
    const auto w = windowed_min(series_from({0, 12.4, 3.3}), 1);
    const auto result = block_maxima(w, {2001});
    REQUIRE(result.rows.size() == 1);
    CHECK(result.rows[0].b == 12.4);
  }
}

TEST_CASE("block_maxima enumerates calendar-year blocks") {
  // 2001 has 365 days; put [5,7] at its end and [2] at the start of 2002
  std::vector<double> x(800, 0.1);
  x[363] = 5;
  x[364] = 7;
  x[365] = 2;  // first day of 2002
  const auto w = windowed_min(series_from(x), 1);
  const auto result = block_maxima(w, {2001, 2002});
  REQUIRE(result.rows.size() == 2);
  CHECK(result.rows[0].year == 2001);
  CHECK(result.rows[0].b == 7.0);
  CHECK(result.rows[1].year == 2002);
  CHECK(result.rows[1].b == 2.0);
}

TEST_CASE("year-boundary windows count toward the anchor year") {
  // 366 days of 2004 + 2 days of 2005; a large minimum stretch across Dec 31
  std::vector<double> x(368, 1.0);
  x[365] = 50;  // 2004-12-31
  x[366] = 60;  // 2005-01-01
  const auto w = windowed_min(series_from(x, 2004), 2);
  const auto result = block_maxima(w, {2004});
  REQUIRE(result.rows.size() == 1);
  // window anchored at Dec 31 spans into January and still belongs to 2004
  CHECK(result.rows[0].b == 50.0);
}

TEST_CASE("block_maxima records years with no defined windows") {
  std::vector<double> x(365, kMissing);
  x[100] = 3.0;
  const auto w = windowed_min(series_from(x), 2);  // no 2-day run exists
  const auto result = block_maxima(w, {2001});
  CHECK(result.rows.empty());
  REQUIRE(result.skipped_years == std::vector<int>{2001});
}

TEST_CASE("block maxima are non-increasing in window size") {
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> amount(0.0, 100.0);
  std::vector<double> x(3 * 365);
  for (auto& v : x) v = amount(gen);
  const DailySeries s = series_from(x);
  const std::set<int> years{2001, 2002, 2003};
  std::vector<double> previous;
  for (int k = 1; k <= kMaxWindow; ++k) {
    const auto result = block_maxima(windowed_min(s, k), years);
    REQUIRE(result.rows.size() == 3);
    std::vector<double> current;
    for (const auto& row : result.rows) current.push_back(row.b);
    if (!previous.empty())
      for (std::size_t i = 0; i < current.size(); ++i) CHECK(current[i] <= previous[i]);
    previous = current;
  }
}

TEST_CASE("windowed_min yields n - k + 1 values on a fully observed run") {
  for (int n : {10, 365}) {
    std::vector<double> x(static_cast<std::size_t>(n), 2.0);
    for (int k = 1; k <= std::min(n, 7); ++k) {
      const auto w = windowed_min(series_from(x), k);
      CHECK(w.values.size() == static_cast<std::size_t>(n - k + 1));
      CHECK(w.defined_count() == static_cast<std::size_t>(n - k + 1));
    }
  }
}

TEST_CASE("fixed_block_maxima ignores empty blocks and truncates the tail") {
  std::vector<double> x{1, 5, 2, 8, 3, 9, 4};  // block_len 2 -> blocks {1,5},{2,8},{3,9}; 4 dropped
  const auto w = windowed_min(series_from(x), 1);
  CHECK(fixed_block_maxima(w, 2) == std::vector<double>{5, 8, 9});
  std::vector<double> gappy{1, kMissing, kMissing, kMissing, 7, 2};
  const auto wg = windowed_min(series_from(gappy), 1);
  CHECK(fixed_block_maxima(wg, 2) == std::vector<double>{1, 7});
}

TEST_CASE("join_covariates matches on station and year") {
  std::vector<BlockMaxRow> rows{{"S1", 2001, 1, 42.0}};
  std::vector<CovariateRow> covs{{"S1", 2001, 0.5, 2.3, -27.0, 153.0},
                                 {"S1", 2002, 0.1, 2.3, -27.0, 153.0}};
  const auto table = join_covariates(rows, covs);
  REQUIRE(table.size() == 1);
  CHECK(table[0].b == 42.0);
  CHECK(table[0].soi == 0.5);

  std::vector<BlockMaxRow> missing{{"S2", 2001, 1, 1.0}};
  CHECK_THROWS_AS(join_covariates(missing, covs), DataError);
}
