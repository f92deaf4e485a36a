// Copyright 2026 The Arena Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Box-constrained limited-memory quasi-Newton minimizer.
//
// Each iteration fixes the variables that sit on a bound with the gradient
// pointing outward, builds an L-BFGS direction on the remaining free
// variables, and backtracks along the projected path P(x + a d) until the
// Armijo condition holds. Stops when the sup-norm of the projected gradient
// drops below `pgtol`, or when the relative decrease of f over one
// iteration falls below `ftol` (the same two tests L-BFGS-B uses).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace arena {

struct BoundedLbfgsOptions {
  double pgtol = 1e-7;
  double ftol = 1e-10;
  int max_iterations = 1000;
  int memory = 10;
  int max_backtracks = 60;
  double armijo = 1e-4;
};

struct BoundedLbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  double projected_gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

namespace detail {

inline double Dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double ProjectedGradientNorm(std::span<const double> x,
                                    std::span<const double> g,
                                    std::span<const double> lower,
                                    std::span<const double> upper) {
  double norm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double moved = std::clamp(x[i] - g[i], lower[i], upper[i]);
    norm = std::max(norm, std::abs(moved - x[i]));
  }
  return norm;
}

}  // namespace detail

// Minimizes `objective` over lower <= x <= upper. The objective has the
// signature double(std::span<const double> x, std::span<double> grad) and
// must fill grad. Bounds may be infinite.
template <typename Objective>
BoundedLbfgsResult MinimizeBounded(Objective&& objective,
                                   std::vector<double> x0,
                                   std::span<const double> lower,
                                   std::span<const double> upper,
                                   const BoundedLbfgsOptions& options = {}) {
  const std::size_t n = x0.size();
  BoundedLbfgsResult result;
  std::vector<double> x = std::move(x0);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);

  std::vector<double> g(n), g_new(n), x_new(n), d(n), q(n);
  std::vector<char> free_var(n);
  double f = objective(std::span<const double>(x), std::span<double>(g));

  struct Correction {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Correction> memory;

  auto finish = [&](bool converged, std::string message) {
    result.x = x;
    result.value = f;
    result.projected_gradient_norm =
        detail::ProjectedGradientNorm(x, g, lower, upper);
    result.converged = converged;
    result.message = std::move(message);
    return result;
  };

  if (!std::isfinite(f)) return finish(false, "objective not finite at start");

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    if (detail::ProjectedGradientNorm(x, g, lower, upper) < options.pgtol) {
      result.iterations = iter;
      return finish(true, "projected gradient below tolerance");
    }

    // Variables pinned at a bound with the descent direction leaving the box.
    for (std::size_t i = 0; i < n; ++i) {
      const bool at_lower = x[i] <= lower[i] && g[i] > 0;
      const bool at_upper = x[i] >= upper[i] && g[i] < 0;
      free_var[i] = !(at_lower || at_upper);
    }

    // Two-loop recursion on the free subspace.
    for (std::size_t i = 0; i < n; ++i) q[i] = free_var[i] ? g[i] : 0.0;
    std::vector<double> alphas(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;) {
      const Correction& c = memory[k];
      double sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (free_var[i]) sq += c.s[i] * q[i];
      }
      alphas[k] = c.rho * sq;
      for (std::size_t i = 0; i < n; ++i) {
        if (free_var[i]) q[i] -= alphas[k] * c.y[i];
      }
    }
    double gamma = 1.0;
    if (!memory.empty()) {
      const Correction& last = memory.back();
      gamma = detail::Dot(last.s, last.y) / detail::Dot(last.y, last.y);
    }
    for (std::size_t i = 0; i < n; ++i) q[i] *= gamma;
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const Correction& c = memory[k];
      double yq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (free_var[i]) yq += c.y[i] * q[i];
      }
      const double beta = c.rho * yq;
      for (std::size_t i = 0; i < n; ++i) {
        if (free_var[i]) q[i] += (alphas[k] - beta) * c.s[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = free_var[i] ? -q[i] : 0.0;

    double slope = detail::Dot(g, d);
    if (!(slope < 0)) {
      memory.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = free_var[i] ? -g[i] : 0.0;
      slope = detail::Dot(g, d);
      if (!(slope < 0)) return finish(true, "no descent direction");
    }

    // First steepest-descent step is scaled to unit length.
    double step = 1.0;
    if (memory.empty()) {
      const double dnorm = std::sqrt(detail::Dot(d, d));
      if (dnorm > 1.0) step = 1.0 / dnorm;
    }

    double f_new = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) {
        x_new[i] = std::clamp(x[i] + step * d[i], lower[i], upper[i]);
      }
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (x_new[i] - x[i]);
      f_new = objective(std::span<const double>(x_new),
                        std::span<double>(g_new));
      if (std::isfinite(f_new) && f_new <= f + options.armijo * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      return finish(false, "line search failed");
    }

    Correction c{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      c.s[i] = x_new[i] - x[i];
      c.y[i] = g_new[i] - g[i];
    }
    const double sy = detail::Dot(c.s, c.y);
    const double relative_decrease =
        (f - f_new) / std::max({std::abs(f), std::abs(f_new), 1.0});
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    if (sy > 1e-12 * std::sqrt(detail::Dot(c.s, c.s) * detail::Dot(c.y, c.y))) {
      c.rho = 1.0 / sy;
      memory.push_back(std::move(c));
      if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
    }
    if (relative_decrease <= options.ftol) {
      return finish(true, "relative reduction of f below tolerance");
    }
  }
  return finish(false, "maximum iterations reached");
}

}  // namespace arena
