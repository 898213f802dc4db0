#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mdx/fit.hpp"
#include "mdx/special.hpp"

namespace mdx {

struct LadderModel {
  int id = 0;
  CovariateMask mask;
  std::string label;
};

/// The nested-model ladder, ids 0-4:
///   0: stationary                                     (3 params)
///   1: SOI in mu and sigma                            (5)
///   2: log(cdist) in mu and sigma                     (5)
///   3: log(cdist) + lat + lon in mu and sigma         (9)
///   4: SOI + log(cdist) + lat + lon in mu and sigma   (11)
/// Models 1 and 2 share a parameter count, so the strictly-increasing chain
/// used for likelihood-ratio tests is 0 -> 2 -> 3 -> 4; model 1 is tested
/// against model 0.
inline std::vector<LadderModel> build_ladder() {
  return {
      {0, CovariateMask{}, "stationary"},
      {1, CovariateMask{.soi = true}, "soi"},
      {2, CovariateMask{.log_cdist = true}, "cdist"},
      {3, CovariateMask{.log_cdist = true, .lat = true, .lon = true}, "cdist+lat+lon"},
      {4, CovariateMask{.soi = true, .log_cdist = true, .lat = true, .lon = true},
       "soi+cdist+lat+lon"},
  };
}

/// Largest nested predecessor within the ladder (for LR reporting).
inline int ladder_parent(int id) {
  switch (id) {
    case 1: return 0;
    case 2: return 0;
    case 3: return 2;
    case 4: return 3;
    default: return -1;
  }
}

struct Criteria {
  double aic = 0;
  double bic = 0;
};

/// AIC = 2p + 2 NLL; BIC = p ln(n) + 2 NLL.
inline Criteria criteria(const FitResult& fit, std::size_t n_obs) {
  if (!fit.converged)
    throw NumericalError("criteria: fit did not converge (" + fit.trace.stop_reason + ")");
  const double p = fit.n_params;
  return {2.0 * p + 2.0 * fit.nll,
          p * std::log(static_cast<double>(n_obs)) + 2.0 * fit.nll};
}

struct LikelihoodRatio {
  double deviance = 0;
  int df = 0;
  double p_value = 1;
};

/// Accepts optimizer slack of 1e-4 on the full model's NLL before declaring
/// an impossible (nested better than full) comparison.
inline constexpr double kNllSlack = 1e-4;

inline LikelihoodRatio likelihood_ratio(const FitResult& nested, const FitResult& full) {
  if (!full.model.mask.contains(nested.model.mask) || nested.model.mask == full.model.mask)
    throw std::invalid_argument("likelihood_ratio: models are not strictly nested");
  if (full.nll > nested.nll + kNllSlack)
    throw NumericalError("likelihood_ratio: full model NLL exceeds nested NLL beyond slack; "
                         "optimizer failure");
  LikelihoodRatio lr;
  lr.df = full.n_params - nested.n_params;
  lr.deviance = std::max(0.0, 2.0 * (nested.nll - full.nll));
  lr.p_value = chi_square_sf(lr.deviance, lr.df);
  return lr;
}

struct ModelEntry {
  int id = 0;
  FitResult fit;
  double aic = std::numeric_limits<double>::quiet_NaN();
  double bic = std::numeric_limits<double>::quiet_NaN();
  std::optional<LikelihoodRatio> lr_vs_parent;
};

struct SelectionReport {
  std::vector<ModelEntry> entries;  // ladder order
  int chosen_id = -1;               // argmin AIC over converged fits; ties -> fewer params

  const ModelEntry& chosen() const {
    for (const auto& e : entries)
      if (e.id == chosen_id) return e;
    throw DataError("SelectionReport: no chosen model");
  }
};

/// Fits every ladder model on the table and selects by AIC. Larger models
/// warm-start from their ladder parent's coefficients. Non-convergent fits
/// stay in the report but are excluded from the argmin.
inline SelectionReport select(const BlockMaximaTable& table,
                              const std::vector<LadderModel>& ladder,
                              const FitOptions& options = {}) {
  SelectionReport report;
  report.entries.reserve(ladder.size());
  for (const auto& spec : ladder) {
    std::optional<LinkModel> warm;
    const int parent = ladder_parent(spec.id);
    if (parent >= 0) {
      for (const auto& done : report.entries)
        if (done.id == parent && done.fit.converged) warm = done.fit.model;
    }
    ModelEntry entry;
    entry.id = spec.id;
    entry.fit = fit_mle(table, spec.mask, options, warm);
    if (entry.fit.converged) {
      const Criteria c = criteria(entry.fit, table.size());
      entry.aic = c.aic;
      entry.bic = c.bic;
    }
    report.entries.push_back(std::move(entry));
  }

  for (auto& entry : report.entries) {
    const int parent = ladder_parent(entry.id);
    if (parent < 0 || !entry.fit.converged) continue;
    for (const auto& other : report.entries)
      if (other.id == parent && other.fit.converged) {
        try {
          entry.lr_vs_parent = likelihood_ratio(other.fit, entry.fit);
        } catch (const NumericalError&) {
          // slack breach: leave the comparison empty, keep the fits
        }
      }
  }

  double best_aic = std::numeric_limits<double>::infinity();
  int best_params = std::numeric_limits<int>::max();
  for (const auto& entry : report.entries) {
    if (!entry.fit.converged) continue;
    if (entry.aic < best_aic ||
        (entry.aic == best_aic && entry.fit.n_params < best_params)) {
      best_aic = entry.aic;
      best_params = entry.fit.n_params;
      report.chosen_id = entry.id;
    }
  }
  if (report.chosen_id < 0) throw NumericalError("select: no ladder model converged");
  return report;
}

}  // namespace mdx
