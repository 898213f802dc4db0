#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mdx {

/// |xi| below this routes to the Gumbel-limit formulas.
inline constexpr double kXiSwitchTol = 1e-8;

struct GevParams {
  double mu = 0;     // location, mm
  double sigma = 1;  // scale, mm, > 0
  double xi = 0;     // shape

  bool feasible() const { return sigma > 0 && std::isfinite(mu) && std::isfinite(sigma) && std::isfinite(xi); }
};

inline bool gev_is_gumbel(double xi) { return std::fabs(xi) < kXiSwitchTol; }

/// 1 + xi * (z - mu) / sigma; the distribution's support requires this > 0.
inline double gev_support_term(double z, const GevParams& p) {
  return 1.0 + p.xi * (z - p.mu) / p.sigma;
}

inline double gev_cdf(double z, const GevParams& p) {
  if (!(p.sigma > 0)) throw std::invalid_argument("gev_cdf: sigma must be > 0");
  const double x = (z - p.mu) / p.sigma;
  if (gev_is_gumbel(p.xi)) return std::exp(-std::exp(-x));
  const double s = 1.0 + p.xi * x;
  if (s <= 0) return p.xi > 0 ? 0.0 : 1.0;  // below/above the support endpoint
  return std::exp(-std::exp(-std::log1p(p.xi * x) / p.xi));
}

/// Log density; -inf outside the support.
inline double gev_log_pdf(double z, const GevParams& p) {
  if (!(p.sigma > 0)) throw std::invalid_argument("gev_log_pdf: sigma must be > 0");
  const double x = (z - p.mu) / p.sigma;
  if (gev_is_gumbel(p.xi)) return -std::log(p.sigma) - x - std::exp(-x);
  const double s = 1.0 + p.xi * x;
  if (s <= 0) return -std::numeric_limits<double>::infinity();
  const double log_s = std::log1p(p.xi * x);
  const double t = std::exp(-log_s / p.xi);  // [1 + xi x]^{-1/xi}
  return -std::log(p.sigma) - (1.0 + 1.0 / p.xi) * log_s - t;
}

inline double gev_pdf(double z, const GevParams& p) { return std::exp(gev_log_pdf(z, p)); }

/// Inverse CDF at non-exceedance probability p in (0, 1).
inline double gev_quantile(double p, const GevParams& params) {
  if (!(p > 0 && p < 1)) throw std::invalid_argument("gev_quantile: p must be in (0,1)");
  if (!(params.sigma > 0)) throw std::invalid_argument("gev_quantile: sigma must be > 0");
  const double log_y = std::log(-std::log(p));  // log of the Gumbel variate's negative
  if (gev_is_gumbel(params.xi)) return params.mu - params.sigma * log_y;
  // mu + sigma * ((-log p)^{-xi} - 1) / xi, written with expm1 for small xi
  return params.mu + params.sigma * std::expm1(-params.xi * log_y) / params.xi;
}

/// Parameters of the max-limit of a weakly dependent sequence with extremal
/// index theta, given the parameters fitted to its independent core:
///   sigma* = sigma * theta^xi,  mu* = mu - (sigma/xi)(1 - theta^xi),
/// with the log-limit mu* = mu + sigma*log(theta) when xi ~ 0.
inline GevParams dependent_from_iid(const GevParams& iid, double theta) {
  if (!(theta > 0 && theta <= 1))
    throw std::invalid_argument("dependent_from_iid: theta must be in (0,1]");
  if (gev_is_gumbel(iid.xi))
    return {iid.mu + iid.sigma * std::log(theta), iid.sigma, iid.xi};
  const double theta_pow = std::pow(theta, iid.xi);
  return {iid.mu - iid.sigma / iid.xi * (1.0 - theta_pow), iid.sigma * theta_pow, iid.xi};
}

}  // namespace mdx
