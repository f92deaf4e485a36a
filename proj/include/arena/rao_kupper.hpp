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

// Rao-Kupper paired comparison model with ties.
//
//   P(i beats j) = p_i / (p_i + theta p_j)
//   P(i ties j)  = p_i p_j (theta^2 - 1) / ((p_i + theta p_j)(theta p_i + p_j))
//
// With merits v = ln p and tolerance tau = ln theta, and writing
// a = tau + v_j - v_i, b = tau + v_i - v_j:
//
//   ln P(i beats j) = -softplus(a)
//   ln P(j beats i) = -softplus(b)
//   ln P(tie)       = ln(expm1(2 tau)) - softplus(a) - softplus(b)
//
// so the log-likelihood of one pair is
//
//   -(n_ij + t_ij) softplus(a) - (n_ji + t_ij) softplus(b)
//     + t_ij ln(expm1(2 tau)).
//
// Everything below evaluates that form, which stays finite for extreme
// strength ratios where the ratio form would underflow.

#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arena/domain.hpp"

namespace arena {

// Real-valued counts of one metric. Integer tallies convert exactly; the
// smoothing fallback adds fractional pseudo-counts.
struct PairCounts {
  std::size_t size = 0;
  std::vector<double> wins;  // wins[i * size + j]: i preferred over j
  std::vector<double> ties;  // symmetric

  explicit PairCounts(std::size_t n = 0)
      : size(n), wins(n * n, 0.0), ties(n * n, 0.0) {}

  double win(std::size_t i, std::size_t j) const { return wins[i * size + j]; }
  double tie(std::size_t i, std::size_t j) const { return ties[i * size + j]; }

  double Comparisons(std::size_t i, std::size_t j) const {
    return win(i, j) + win(j, i) + tie(i, j);
  }
};

// Converts a slice; pseudo_count > 0 adds that many wins in both directions
// on every pair.
inline PairCounts CountsOf(const TallySlice& slice, double pseudo_count = 0.0) {
  PairCounts c(slice.size());
  for (std::size_t i = 0; i < c.size; ++i) {
    for (std::size_t j = 0; j < c.size; ++j) {
      if (i == j) continue;
      c.wins[i * c.size + j] =
          static_cast<double>(slice.wins(i, j)) + pseudo_count;
      c.ties[i * c.size + j] = static_cast<double>(slice.ties(i, j));
    }
  }
  return c;
}

namespace detail {

// ln(1 + e^x) without overflow.
inline double Softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline void CheckProbabilityArgs(double p_i, double p_j, double theta) {
  if (!(p_i > 0) || !(p_j > 0) || !std::isfinite(p_i) ||
      !std::isfinite(p_j)) {
    throw std::domain_error("strengths must be positive and finite");
  }
  if (!(theta >= 1.0) || !std::isfinite(theta)) {
    throw std::domain_error("theta must be finite and >= 1");
  }
}

}  // namespace detail

inline double ProbWin(double p_i, double p_j, double theta) {
  detail::CheckProbabilityArgs(p_i, p_j, theta);
  return p_i / (p_i + theta * p_j);
}

inline double ProbTie(double p_i, double p_j, double theta) {
  detail::CheckProbabilityArgs(p_i, p_j, theta);
  return p_i * p_j * (theta * theta - 1.0) /
         ((p_i + theta * p_j) * (theta * p_i + p_j));
}

// Log-likelihood and its gradient in (v, tau) coordinates. `grad`, when
// non-empty, receives t + 1 entries: d/dv_0 .. d/dv_{t-1}, d/dtau.
inline double LogLikelihoodLogSpace(const PairCounts& counts,
                                    std::span<const double> v, double tau,
                                    std::span<double> grad = {}) {
  const std::size_t t = counts.size;
  if (v.size() != t) {
    throw std::invalid_argument("merit vector size does not match tally");
  }
  if (!grad.empty()) {
    if (grad.size() != t + 1) {
      throw std::invalid_argument("gradient buffer must hold t + 1 entries");
    }
    std::fill(grad.begin(), grad.end(), 0.0);
  }
  double total_ties = 0.0;
  double value = 0.0;
  double dtau = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = i + 1; j < t; ++j) {
      const double n_ij = counts.win(i, j);
      const double n_ji = counts.win(j, i);
      const double ties = counts.tie(i, j);
      if (n_ij == 0 && n_ji == 0 && ties == 0) continue;
      const double a = tau + v[j] - v[i];
      const double b = tau + v[i] - v[j];
      const double wa = n_ij + ties;
      const double wb = n_ji + ties;
      value -= wa * detail::Softplus(a) + wb * detail::Softplus(b);
      total_ties += ties;
      if (!grad.empty()) {
        const double sa = wa * detail::Sigmoid(a);
        const double sb = wb * detail::Sigmoid(b);
        grad[i] += sa - sb;
        grad[j] += sb - sa;
        dtau -= sa + sb;
      }
    }
  }
  if (total_ties > 0) {
    if (!(tau > 0)) {
      throw std::domain_error(
          "theta must exceed 1 when the tally contains ties");
    }
    value += total_ties * std::log(std::expm1(2.0 * tau));
    // d/dtau ln(e^{2 tau} - 1) = 2 / (1 - e^{-2 tau})
    dtau += total_ties * 2.0 / -std::expm1(-2.0 * tau);
  }
  if (!grad.empty()) grad[t] = dtau;
  return value;
}

namespace detail {

inline std::vector<double> LogStrengths(std::span<const double> p) {
  std::vector<double> v(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0) || !std::isfinite(p[i])) {
      throw std::domain_error("strengths must be positive and finite");
    }
    v[i] = std::log(p[i]);
  }
  return v;
}

inline double LogTheta(double theta) {
  if (!(theta >= 1.0) || !std::isfinite(theta)) {
    throw std::domain_error("theta must be finite and >= 1");
  }
  return std::log(theta);
}

}  // namespace detail

// Sum over i < j of n_ij ln P(i>j) + n_ji ln P(j>i) + t_ij ln P(i~j).
inline double LogLikelihood(const PairCounts& counts,
                             std::span<const double> p, double theta) {
  return LogLikelihoodLogSpace(counts, detail::LogStrengths(p),
                               detail::LogTheta(theta));
}

inline double LogLikelihood(const TallySlice& slice,
                             std::span<const double> p, double theta) {
  return LogLikelihood(CountsOf(slice), p, theta);
}

// Partial derivatives with respect to p_0 .. p_{t-1} and theta.
inline std::vector<double> LikelihoodGradient(const PairCounts& counts,
                                               std::span<const double> p,
                                               double theta) {
  const std::vector<double> v = detail::LogStrengths(p);
  const double tau = detail::LogTheta(theta);
  std::vector<double> grad(p.size() + 1);
  LogLikelihoodLogSpace(counts, v, tau, grad);
  // Chain rule: dl/dp = (dl/dv) / p, dl/dtheta = (dl/dtau) / theta.
  for (std::size_t i = 0; i < p.size(); ++i) grad[i] /= p[i];
  grad[p.size()] /= theta;
  return grad;
}

inline std::vector<double> LikelihoodGradient(const TallySlice& slice,
                                               std::span<const double> p,
                                               double theta) {
  return LikelihoodGradient(CountsOf(slice), p, theta);
}

}  // namespace arena
