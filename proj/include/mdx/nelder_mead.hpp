#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace mdx {

struct NelderMeadOptions {
  double relative_diameter_tol = 1e-8;
  int max_evaluations = 50000;
};

struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0;
  int evaluations = 0;
  bool converged = false;  // diameter criterion met before the budget ran out
};

/// Derivative-free simplex descent (standard reflection/expansion/contraction
/// coefficients). Stops when the simplex' infinity-norm diameter shrinks
/// below relative_diameter_tol * (1 + |best point|) or the evaluation budget
/// is exhausted. Objective may return +inf / large penalties.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& x0,
                                    const std::vector<double>& initial_step,
                                    const NelderMeadOptions& options = {}) {
  const std::size_t n = x0.size();
  const double alpha = 1.0, gamma = 2.0, rho = 0.5, shrink = 0.5;

  std::vector<std::vector<double>> simplex(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) {
    double step = initial_step[i];
    if (step == 0) step = 1e-4;
    simplex[i + 1][i] += step;
  }

  int evals = 0;
  std::vector<double> fvals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    fvals[i] = f(simplex[i]);
    ++evals;
  }

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
  };

  auto diameter = [&]() {
    const auto& best = simplex[order[0]];
    double norm_best = 0;
    for (double v : best) norm_best = std::max(norm_best, std::fabs(v));
    double diam = 0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        diam = std::max(diam, std::fabs(simplex[order[i]][j] - best[j]));
    return diam / (1.0 + norm_best);
  };

  NelderMeadResult result;
  std::vector<double> centroid(n), candidate(n);

  while (true) {
    sort_simplex();
    if (diameter() < options.relative_diameter_tol) {
      result.converged = true;
      break;
    }
    if (evals >= options.max_evaluations) break;

    const std::size_t worst = order[n];
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[order[i]][j];
    for (double& c : centroid) c /= static_cast<double>(n);

    auto point_along = [&](double coeff) {
      for (std::size_t j = 0; j < n; ++j)
        candidate[j] = centroid[j] + coeff * (simplex[worst][j] - centroid[j]);
      ++evals;
      return f(candidate);
    };

    const double f_best = fvals[order[0]];
    const double f_second_worst = fvals[order[n - 1]];

    const double f_reflect = point_along(-alpha);
    if (f_reflect < f_best) {
      const std::vector<double> reflected = candidate;
      const double f_expand = point_along(-alpha * gamma);
      if (f_expand < f_reflect) {
        simplex[worst] = candidate;
        fvals[worst] = f_expand;
      } else {
        simplex[worst] = reflected;
        fvals[worst] = f_reflect;
      }
    } else if (f_reflect < f_second_worst) {
      simplex[worst] = candidate;
      fvals[worst] = f_reflect;
    } else {
      const bool outside = f_reflect < fvals[worst];
      const double f_contract = point_along(outside ? -alpha * rho : rho);
      if (f_contract < std::min(f_reflect, fvals[worst])) {
        simplex[worst] = candidate;
        fvals[worst] = f_contract;
      } else {
        // shrink toward the best vertex
        const auto& best = simplex[order[0]];
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == order[0]) continue;
          for (std::size_t j = 0; j < n; ++j)
            simplex[i][j] = best[j] + shrink * (simplex[i][j] - best[j]);
          fvals[i] = f(simplex[i]);
          ++evals;
        }
      }
    }
  }

  sort_simplex();
  result.x = simplex[order[0]];
  result.fx = fvals[order[0]];
  result.evaluations = evals;
  return result;
}

}  // namespace mdx
