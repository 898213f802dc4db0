#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <future>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mdx/link_model.hpp"
#include "mdx/nelder_mead.hpp"
#include "mdx/rng.hpp"

namespace mdx {

struct FitOptions {
  std::uint64_t seed = 0;       // drives restart perturbations only
  int n_restarts = 3;
  NelderMeadOptions nm{};
  std::optional<double> fixed_xi;  // shape-tied mode: pin xi, do not estimate it
  bool compute_std_errors = true;
};

struct FitTrace {
  int total_evaluations = 0;
  int restarts_run = 0;
  std::string stop_reason;
};

struct FitResult {
  LinkModel model;
  double nll = 0;
  std::vector<double> std_errors;  // aligned with model.param_names(); NaN when unavailable
  std::vector<double> covariance;  // row-major p x p over the estimated parameters; empty
                                   // when the information matrix was unusable
  int n_params = 0;                // estimated parameters (excludes a pinned shape)
  std::size_t n_obs = 0;
  bool converged = false;
  FitTrace trace;

  /// Versioned self-describing text record, one coefficient per line.
  std::string to_text_record() const {
    std::ostringstream out;
    out.precision(17);
    out << "mdx_fit v1\n";
    out << "mask soi=" << model.mask.soi << " log_cdist=" << model.mask.log_cdist
        << " lat=" << model.mask.lat << " lon=" << model.mask.lon << "\n";
    const auto names = model.param_names();
    const auto packed = model.pack();
    for (std::size_t i = 0; i < names.size(); ++i) {
      out << names[i] << " " << packed[i] << " ";
      if (i < std_errors.size() && std::isfinite(std_errors[i]))
        out << std_errors[i];
      else
        out << "nan";
      out << "\n";
    }
    out << "nll " << nll << "\n";
    out << "n_params " << n_params << "\n";
    out << "n_obs " << n_obs << "\n";
    out << "converged " << (converged ? 1 : 0) << "\n";
    return out.str();
  }
};

namespace detail {

/// Moment-based starting point: location from the Gumbel mean relation,
/// scale from the sample SD, mild positive shape.
inline GevParams moment_start(std::span<const double> values) {
  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  const double sd = std::sqrt(var);
  GevParams start;
  start.sigma = sd > 0 ? sd * std::sqrt(6.0) / M_PI : 1e-3;
  start.mu = mean - 0.45 * sd;
  start.xi = 0.1;
  return start;
}

inline std::vector<double> extract_b(const BlockMaximaTable& table) {
  std::vector<double> b;
  b.reserve(table.size());
  for (const auto& row : table) b.push_back(row.b);
  return b;
}

}  // namespace detail

/// Maximum-likelihood fit of a covariate-linked GEV by simplex descent with
/// seeded random restarts around the incumbent best point (run concurrently;
/// reduced by lowest NLL, then restart index). Standard errors come from the
/// inverse of a central-finite-difference Hessian of the NLL at the optimum.
inline FitResult fit_mle(const BlockMaximaTable& table, const CovariateMask& mask,
                         const FitOptions& options = {},
                         const std::optional<LinkModel>& init = std::nullopt) {
  const bool xi_pinned = options.fixed_xi.has_value();
  const int n_params = mask.n_params() - (xi_pinned ? 1 : 0);
  if (table.size() < static_cast<std::size_t>(10 * n_params))
    throw DataError("fit_mle: " + std::to_string(table.size()) + " rows cannot support " +
                    std::to_string(n_params) + " parameters (need 10 per parameter)");

  FitResult result;
  result.n_obs = table.size();
  result.n_params = n_params;

  const std::vector<double> b = detail::extract_b(table);
  const GevParams start = detail::moment_start(b);
  const bool degenerate = [&] {
    for (double v : b)
      if (v != b.front()) return false;
    return true;
  }();
  if (degenerate) {
    LinkModel model;
    model.mask = mask;
    model.mu_coeffs[0] = b.front();
    model.sigma_coeffs[0] = start.sigma;
    model.xi = xi_pinned ? *options.fixed_xi : 0.0;
    result.model = model;
    result.nll = std::numeric_limits<double>::quiet_NaN();
    result.std_errors.assign(static_cast<std::size_t>(mask.n_params()),
                             std::numeric_limits<double>::quiet_NaN());
    result.converged = false;
    result.trace.stop_reason = "degenerate data: zero variance";
    return result;
  }

  LinkModel init_model;
  if (init.has_value()) {
    init_model = *init;
    init_model.mask = mask;
  } else {
    init_model.mask = mask;
    init_model.mu_coeffs[0] = start.mu;
    init_model.sigma_coeffs[0] = start.sigma;
    init_model.xi = start.xi;
  }
  if (xi_pinned) init_model.xi = *options.fixed_xi;

  // Optimizer coordinates: packed coefficients, minus xi when it is pinned.
  const std::vector<double> packed_init_full = init_model.pack();
  const std::size_t dim = packed_init_full.size() - (xi_pinned ? 1 : 0);
  std::vector<double> x0(packed_init_full.begin(),
                         packed_init_full.begin() + static_cast<long>(dim));

  // Thread-safe objective: the full coefficient buffer lives on the stack
  // (at most 11 packed coefficients), so concurrent restarts share nothing.
  const double pinned_xi = xi_pinned ? *options.fixed_xi : 0.0;
  const auto objective = [&table, &mask, xi_pinned, pinned_xi](const std::vector<double>& x) {
    std::array<double, 11> buffer{};
    std::copy(x.begin(), x.end(), buffer.begin());
    std::size_t n = x.size();
    if (xi_pinned) buffer[n++] = pinned_xi;
    return nll_linked(table, LinkModel::unpack(std::span(buffer.data(), n), mask));
  };

  std::vector<double> steps(dim);
  for (std::size_t i = 0; i < dim; ++i) steps[i] = 0.1 * (1.0 + std::fabs(x0[i]));

  NelderMeadResult best = nelder_mead(objective, x0, steps, options.nm);
  int total_evals = best.evaluations;
  int restarts_run = 0;

  // Restarts perturb a snapshot of the base optimum, never the evolving
  // best, so start points are independent of completion order.
  const std::vector<double> base_point = best.x;
  auto run_restart = [&objective, &base_point, &options, dim](int index) {
    SplitMix64 rng(substream_seed(options.seed, static_cast<std::uint64_t>(index)));
    std::vector<double> perturbed = base_point;
    std::vector<double> restart_steps(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      perturbed[i] += 0.1 * (1.0 + std::fabs(perturbed[i])) * (2.0 * rng.uniform() - 1.0);
      restart_steps[i] = 0.02 * (1.0 + std::fabs(perturbed[i]));
    }
    return nelder_mead(objective, perturbed, restart_steps, options.nm);
  };

  std::vector<std::future<NelderMeadResult>> futures;
  futures.reserve(static_cast<std::size_t>(options.n_restarts));
  for (int r = 1; r <= options.n_restarts; ++r)
    futures.push_back(std::async(std::launch::async, run_restart, r));
  for (auto& fut : futures) {
    const NelderMeadResult candidate = fut.get();
    ++restarts_run;
    total_evals += candidate.evaluations;
    if (candidate.fx < best.fx ||
        (candidate.fx == best.fx && !best.converged && candidate.converged))
      best = candidate;
  }

  // polish: one more descent from the incumbent with a tight simplex, so
  // nested and full models reach comparable optimization depth
  {
    std::vector<double> polish_steps(dim);
    for (std::size_t i = 0; i < dim; ++i)
      polish_steps[i] = 1e-3 * (1.0 + std::fabs(best.x[i]));
    const NelderMeadResult polished = nelder_mead(objective, best.x, polish_steps, options.nm);
    total_evals += polished.evaluations;
    if (polished.fx <= best.fx) best = polished;
  }

  std::array<double, 11> final_buffer{};
  std::copy(best.x.begin(), best.x.end(), final_buffer.begin());
  std::size_t full_size = best.x.size();
  if (xi_pinned) final_buffer[full_size++] = pinned_xi;
  result.model = LinkModel::unpack(std::span(final_buffer.data(), full_size), mask);
  result.nll = best.fx;
  result.converged = best.converged && best.fx < detail::kPenaltyBase;
  result.trace.total_evaluations = total_evals;
  result.trace.restarts_run = restarts_run;
  result.trace.stop_reason = best.converged ? "simplex diameter tolerance" : "evaluation budget";

  result.std_errors.assign(full_size, std::numeric_limits<double>::quiet_NaN());
  if (result.converged && options.compute_std_errors) {
    // Observed information: central finite differences of the NLL. Steps
    // start at 1e-4*(1+|coef|) and shrink per coordinate when a probe lands
    // outside the support (the fitted endpoint often sits near the sample
    // minimum, so a fixed step can fall off the likelihood surface).
    const std::size_t p = dim;
    std::vector<double> x = best.x;
    Eigen::MatrixXd hessian(p, p);
    std::vector<double> h(p);
    const double f0 = objective(x);
    auto eval_shifted = [&](std::size_t i, double di, std::size_t j, double dj) {
      std::vector<double> y = x;
      y[i] += di;
      if (i != j || dj != 0.0) y[j] += dj;
      return objective(y);
    };
    bool fd_ok = true;
    for (std::size_t i = 0; i < p; ++i) {
      h[i] = 1e-4 * (1.0 + std::fabs(x[i]));
      for (int shrink = 0; shrink < 12; ++shrink) {
        if (eval_shifted(i, h[i], i, 0.0) < detail::kPenaltyBase / 2 &&
            eval_shifted(i, -h[i], i, 0.0) < detail::kPenaltyBase / 2)
          break;
        h[i] *= 0.25;
      }
    }
    for (std::size_t i = 0; i < p && fd_ok; ++i) {
      for (std::size_t j = i; j < p && fd_ok; ++j) {
        double value;
        if (i == j) {
          value = (eval_shifted(i, h[i], i, 0.0) - 2.0 * f0 + eval_shifted(i, -h[i], i, 0.0)) /
                  (h[i] * h[i]);
        } else {
          value = (eval_shifted(i, h[i], j, h[j]) - eval_shifted(i, h[i], j, -h[j]) -
                   eval_shifted(i, -h[i], j, h[j]) + eval_shifted(i, -h[i], j, -h[j])) /
                  (4.0 * h[i] * h[j]);
        }
        if (!std::isfinite(value) || std::fabs(value) >= detail::kPenaltyBase / 2) fd_ok = false;
        hessian(static_cast<long>(i), static_cast<long>(j)) = value;
        hessian(static_cast<long>(j), static_cast<long>(i)) = value;
      }
    }
    if (fd_ok) {
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const Eigen::MatrixXd covariance =
            ldlt.solve(Eigen::MatrixXd::Identity(static_cast<long>(p), static_cast<long>(p)));
        result.covariance.assign(p * p, 0.0);
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t j = 0; j < p; ++j)
            result.covariance[i * p + j] = covariance(static_cast<long>(i), static_cast<long>(j));
          const double var = covariance(static_cast<long>(i), static_cast<long>(i));
          if (var > 0) result.std_errors[i] = std::sqrt(var);
        }
      } else {
        result.trace.stop_reason += "; information matrix not positive definite";
      }
    } else {
      result.trace.stop_reason += "; non-finite curvature at optimum";
    }
  }
  return result;
}

/// Stationary fit of a plain block-maxima sample.
inline FitResult fit_stationary(std::span<const double> values, const FitOptions& options = {}) {
  BlockMaximaTable table;
  table.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    BmRow row;
    row.station_id = "sample";
    row.year = static_cast<int>(i);
    row.b = values[i];
    table.push_back(std::move(row));
  }
  return fit_mle(table, CovariateMask{}, options);
}

/// Convenience accessor for a stationary fit's parameters.
inline GevParams stationary_params(const FitResult& fit) {
  return {fit.model.mu_coeffs[0], fit.model.sigma_coeffs[0], fit.model.xi};
}

}  // namespace mdx
