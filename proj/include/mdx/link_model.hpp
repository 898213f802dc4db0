#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mdx/errors.hpp"
#include "mdx/functionals.hpp"
#include "mdx/gev.hpp"

namespace mdx {

/// Which regressors (beyond the intercept) enter the location and scale
/// links. The shape is always a single scalar with no covariates.
struct CovariateMask {
  bool soi = false;
  bool log_cdist = false;
  bool lat = false;
  bool lon = false;

  int n_active() const {
    return int(soi) + int(log_cdist) + int(lat) + int(lon);
  }
  /// Estimated parameters: intercept + active slopes for each of mu and
  /// sigma, plus the shared shape.
  int n_params() const { return 2 * (1 + n_active()) + 1; }

  bool contains(const CovariateMask& other) const {
    return (!other.soi || soi) && (!other.log_cdist || log_cdist) &&
           (!other.lat || lat) && (!other.lon || lon);
  }
  bool operator==(const CovariateMask&) const = default;
};

/// Linear links on the regressor vector (1, SOI, log cdist, lat, lon):
///   mu_t    = mu0 + mu1*SOI + mu2*log(cdist) + mu3*lat + mu4*lon
///   sigma_t = sigma0 + ... (same regressors)
///   xi      = xi
/// Inactive coefficients are pinned to exactly 0.
struct LinkModel {
  std::array<double, 5> mu_coeffs{};
  std::array<double, 5> sigma_coeffs{};
  double xi = 0;
  CovariateMask mask;

  GevParams params_at(const BmRow& row) const {
    const std::array<double, 5> regressors{1.0, row.soi, row.log_cdist, row.lat, row.lon};
    double mu = 0, sigma = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      mu += mu_coeffs[i] * regressors[i];
      sigma += sigma_coeffs[i] * regressors[i];
    }
    return {mu, sigma, xi};
  }

  /// Active-coefficient vector in the optimizer's layout:
  /// [mu intercept, active mu slopes..., sigma intercept, active sigma slopes..., xi].
  std::vector<double> pack() const {
    std::vector<double> packed;
    const std::array<bool, 5> active = active_flags();
    for (std::size_t i = 0; i < 5; ++i)
      if (active[i]) packed.push_back(mu_coeffs[i]);
    for (std::size_t i = 0; i < 5; ++i)
      if (active[i]) packed.push_back(sigma_coeffs[i]);
    packed.push_back(xi);
    return packed;
  }

  static LinkModel unpack(std::span<const double> packed, const CovariateMask& mask) {
    LinkModel model;
    model.mask = mask;
    const std::array<bool, 5> active{true, mask.soi, mask.log_cdist, mask.lat, mask.lon};
    std::size_t at = 0;
    for (std::size_t i = 0; i < 5; ++i)
      if (active[i]) model.mu_coeffs[i] = packed[at++];
    for (std::size_t i = 0; i < 5; ++i)
      if (active[i]) model.sigma_coeffs[i] = packed[at++];
    model.xi = packed[at++];
    if (at != packed.size()) throw std::invalid_argument("LinkModel::unpack: size mismatch");
    return model;
  }

  std::array<bool, 5> active_flags() const {
    return {true, mask.soi, mask.log_cdist, mask.lat, mask.lon};
  }

  /// Names of the packed coefficients, for reports.
  std::vector<std::string> param_names() const {
    static const char* base[5] = {"0", "1_soi", "2_logcdist", "3_lat", "4_lon"};
    std::vector<std::string> names;
    const std::array<bool, 5> active = active_flags();
    for (std::size_t i = 0; i < 5; ++i)
      if (active[i]) names.push_back(std::string("mu") + base[i]);
    for (std::size_t i = 0; i < 5; ++i)
      if (active[i]) names.push_back(std::string("sigma") + base[i]);
    names.push_back("xi");
    return names;
  }
};

namespace detail {

/// Large finite penalty handed to the optimizer when a parameter point is
/// infeasible; graded by the violation so the simplex can slide back in.
inline constexpr double kPenaltyBase = 1e9;

inline double penalty(double violation) { return kPenaltyBase + 1e3 * violation; }

/// Negative log density of one observation, or a penalty contribution.
/// Returns false through `ok` when the point is infeasible.
inline double neg_log_density(double z, double mu, double sigma, double xi, bool& ok) {
  if (!(sigma > 0) || !std::isfinite(sigma) || !std::isfinite(mu)) {
    ok = false;
    return 1.0 + std::fabs(sigma);
  }
  const double x = (z - mu) / sigma;
  if (std::fabs(xi) < kXiSwitchTol) {
    ok = true;
    return std::log(sigma) + x + std::exp(-x);
  }
  const double s = 1.0 + xi * x;
  if (s <= 0) {
    ok = false;
    return 1.0 - s;
  }
  const double log_s = std::log1p(xi * x);
  ok = true;
  return std::log(sigma) + (1.0 + 1.0 / xi) * log_s + std::exp(-log_s / xi);
}

}  // namespace detail

/// Sum of negative log GEV densities over a plain sample. Feasibility
/// violations surface as a large graded penalty rather than an error, so the
/// optimizer can traverse infeasible regions.
inline double nll_stationary(std::span<const double> data, const GevParams& p) {
  if (data.empty()) throw DataError("nll_stationary: empty data");
  if (!std::isfinite(p.xi)) return detail::penalty(1.0);
  double nll = 0, violation = 0;
  bool any_bad = false;
  for (double z : data) {
    bool ok = true;
    const double contribution = detail::neg_log_density(z, p.mu, p.sigma, p.xi, ok);
    if (!ok) {
      any_bad = true;
      violation += contribution;
    } else {
      nll += contribution;
    }
  }
  if (any_bad || !std::isfinite(nll)) return detail::penalty(violation);
  return nll;
}

/// Covariate-linked negative log-likelihood over a block-maxima table.
/// Missing values on an active regressor are a data error (named by row);
/// infeasible parameter points get the same graded penalty as above.
inline double nll_linked(const BlockMaximaTable& table, const LinkModel& model) {
  if (table.empty()) throw DataError("nll_linked: empty table");
  if (!std::isfinite(model.xi)) return detail::penalty(1.0);
  const CovariateMask& m = model.mask;
  double nll = 0, violation = 0;
  bool any_bad = false;
  for (const BmRow& row : table) {
    if ((m.soi && std::isnan(row.soi)) || (m.log_cdist && std::isnan(row.log_cdist)) ||
        (m.lat && std::isnan(row.lat)) || (m.lon && std::isnan(row.lon)))
      throw DataError("nll_linked: missing covariate for station " + row.station_id +
                      " year " + std::to_string(row.year));
    const GevParams p = model.params_at(row);
    bool ok = true;
    const double contribution = detail::neg_log_density(row.b, p.mu, p.sigma, p.xi, ok);
    if (!ok) {
      any_bad = true;
      violation += contribution;
    } else {
      nll += contribution;
    }
  }
  if (any_bad || !std::isfinite(nll)) return detail::penalty(violation);
  return nll;
}

}  // namespace mdx
