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

// Maximum-likelihood strengths under the Rao-Kupper model, one independent
// fit (strengths and theta) per metric.
//
// The optimizer works on merits v = ln p and tolerance tau = ln theta with
// the box p_i >= 0.01, theta in [e^0.01, e^10]. The likelihood only depends
// on strength ratios, so the fitted vector is rescaled afterwards to a
// geometric mean of 1. If that would push the weakest model below 0.01 the
// whole vector is lifted until it sits exactly on the bound again.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "arena/bounded_lbfgs.hpp"
#include "arena/domain.hpp"
#include "arena/rao_kupper.hpp"

namespace arena {

inline constexpr double kMinStrength = 0.01;
inline constexpr double kMinLogTheta = 0.01;
inline constexpr double kMaxLogTheta = 10.0;
inline constexpr double kInitialTheta = 1.5;
inline constexpr double kDefaultPseudoCount = 0.1;

struct FitOptions {
  double pgtol = 1e-7;
  double ftol = 1e-10;
  int max_iterations = 1000;
  // Add pseudo-wins in both directions on every pair instead of failing on
  // a disconnected comparison graph.
  bool smoothing = false;
  double pseudo_count = kDefaultPseudoCount;
};

struct MetricEstimate {
  std::vector<double> strengths;  // aligned with StrengthEstimate::model_ids
  double theta = kInitialTheta;
  double log_likelihood = 0.0;
  std::vector<std::string> ranking;  // strongest first
  bool converged = false;
  int iterations = 0;
  bool smoothed = false;

  friend bool operator==(const MetricEstimate&,
                         const MetricEstimate&) = default;
};

struct StrengthEstimate {
  std::vector<std::string> model_ids;
  std::map<MetricId, MetricEstimate> metrics;

  bool AllConverged() const {
    return std::all_of(metrics.begin(), metrics.end(),
                       [](const auto& kv) { return kv.second.converged; });
  }

  friend bool operator==(const StrengthEstimate&,
                         const StrengthEstimate&) = default;
};

// Descending strength; equal strengths ordered by model id.
inline std::vector<std::string> RankByStrength(
    const std::vector<std::string>& model_ids,
    const std::vector<double>& strengths) {
  std::vector<std::size_t> order(model_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (strengths[a] != strengths[b]) return strengths[a] > strengths[b];
    return model_ids[a] < model_ids[b];
  });
  std::vector<std::string> ranking;
  ranking.reserve(order.size());
  for (std::size_t i : order) ranking.push_back(model_ids[i]);
  return ranking;
}

// Connected components of the graph with an edge wherever two models were
// compared at least once. Components and members are sorted.
inline std::vector<std::vector<std::string>> ComparisonComponents(
    const PairCounts& counts, const std::vector<std::string>& model_ids) {
  const std::size_t t = counts.size;
  std::vector<std::size_t> parent(t);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = i + 1; j < t; ++j) {
      if (counts.Comparisons(i, j) > 0) parent[find(i)] = find(j);
    }
  }
  std::map<std::size_t, std::vector<std::string>> by_root;
  for (std::size_t i = 0; i < t; ++i) by_root[find(i)].push_back(model_ids[i]);
  std::vector<std::vector<std::string>> components;
  for (auto& [root, members] : by_root) {
    std::sort(members.begin(), members.end());
    components.push_back(std::move(members));
  }
  std::sort(components.begin(), components.end());
  return components;
}

// Divides by the geometric mean, then lifts the vector if the minimum falls
// below kMinStrength.
inline std::vector<double> CanonicalScale(std::vector<double> strengths) {
  if (strengths.empty()) return strengths;
  double mean_log = 0.0;
  for (double p : strengths) mean_log += std::log(p);
  mean_log /= static_cast<double>(strengths.size());
  const double gm = std::exp(mean_log);
  for (double& p : strengths) p /= gm;
  const double lowest = *std::min_element(strengths.begin(), strengths.end());
  if (lowest < kMinStrength) {
    const double lift = kMinStrength / lowest;
    for (double& p : strengths) p = std::max(p * lift, kMinStrength);
  }
  return strengths;
}

// Fits one metric from real-valued counts. Throws DisconnectedGraphError
// when the comparison graph has several components.
inline MetricEstimate FitCounts(const PairCounts& counts,
                                const std::vector<std::string>& model_ids,
                                MetricId metric,
                                const FitOptions& options = {}) {
  const std::size_t t = counts.size;
  if (t < 2) throw ValidationError("at least two models are required");
  const auto components = ComparisonComponents(counts, model_ids);
  if (components.size() > 1) {
    throw DisconnectedGraphError(std::string(MetricName(metric)), components);
  }

  std::vector<double> lower(t + 1, std::log(kMinStrength));
  std::vector<double> upper(t + 1, std::numeric_limits<double>::infinity());
  lower[t] = kMinLogTheta;
  upper[t] = kMaxLogTheta;
  std::vector<double> start(t + 1, 0.0);
  start[t] = std::log(kInitialTheta);

  auto negative_ll = [&](std::span<const double> x, std::span<double> grad) {
    const double value =
        LogLikelihoodLogSpace(counts, x.first(t), x[t], grad);
    for (double& g : grad) g = -g;
    return -value;
  };
  BoundedLbfgsOptions lbfgs;
  lbfgs.pgtol = options.pgtol;
  lbfgs.ftol = options.ftol;
  lbfgs.max_iterations = options.max_iterations;
  const BoundedLbfgsResult fit =
      MinimizeBounded(negative_ll, std::move(start), lower, upper, lbfgs);

  MetricEstimate out;
  std::vector<double> strengths(t);
  for (std::size_t i = 0; i < t; ++i) strengths[i] = std::exp(fit.x[i]);
  out.strengths = CanonicalScale(std::move(strengths));
  out.theta = std::exp(fit.x[t]);
  out.log_likelihood = -fit.value;
  out.converged = fit.converged;
  out.iterations = fit.iterations;
  out.ranking = RankByStrength(model_ids, out.strengths);
  return out;
}

inline MetricEstimate FitSlice(const TallySlice& slice,
                               const std::vector<std::string>& model_ids,
                               MetricId metric, const FitOptions& options = {}) {
  if (!options.smoothing) {
    return FitCounts(CountsOf(slice), model_ids, metric, options);
  }
  PairCounts raw = CountsOf(slice);
  if (ComparisonComponents(raw, model_ids).size() <= 1) {
    return FitCounts(raw, model_ids, metric, options);
  }
  MetricEstimate est = FitCounts(CountsOf(slice, options.pseudo_count),
                                 model_ids, metric, options);
  est.smoothed = true;
  return est;
}

// Fits every metric that has at least one judgment.
inline StrengthEstimate FitMle(const ComparisonTally& tally,
                               const FitOptions& options = {}) {
  StrengthEstimate estimate;
  estimate.model_ids = tally.model_ids();
  for (MetricId m : kAllMetrics) {
    const TallySlice& slice = tally.slice(m);
    if (slice.Total() == 0) continue;
    estimate.metrics.emplace(m, FitSlice(slice, tally.model_ids(), m, options));
  }
  return estimate;
}

// Baseline score: (wins + ties / 2) / comparisons. Absent for a model that
// was never compared under that metric.
inline std::map<MetricId, std::vector<std::optional<double>>> WinRatio(
    const ComparisonTally& tally) {
  std::map<MetricId, std::vector<std::optional<double>>> out;
  const std::size_t t = tally.num_models();
  for (MetricId m : kAllMetrics) {
    const TallySlice& s = tally.slice(m);
    std::vector<std::optional<double>> ratios(t);
    for (std::size_t i = 0; i < t; ++i) {
      double wins = 0.0;
      double ties = 0.0;
      double comparisons = 0.0;
      for (std::size_t j = 0; j < t; ++j) {
        if (i == j) continue;
        wins += static_cast<double>(s.wins(i, j));
        ties += static_cast<double>(s.ties(i, j));
        comparisons += static_cast<double>(s.Comparisons(i, j));
      }
      if (comparisons > 0) ratios[i] = (wins + 0.5 * ties) / comparisons;
    }
    out.emplace(m, std::move(ratios));
  }
  return out;
}

inline Json ToJson(const MetricEstimate& est,
                   const std::vector<std::string>& model_ids) {
  Json j;
  Json strengths = Json::object();
  for (std::size_t i = 0; i < model_ids.size(); ++i) {
    strengths[model_ids[i]] = est.strengths[i];
  }
  j["strengths"] = std::move(strengths);
  j["theta"] = est.theta;
  j["log_likelihood"] = est.log_likelihood;
  j["ranking"] = est.ranking;
  j["converged"] = est.converged;
  j["iterations"] = est.iterations;
  j["smoothed"] = est.smoothed;
  return j;
}

inline Json ToJson(const StrengthEstimate& estimate) {
  Json j;
  j["models"] = estimate.model_ids;
  Json metrics = Json::object();
  for (const auto& [m, est] : estimate.metrics) {
    metrics[std::string(MetricName(m))] = ToJson(est, estimate.model_ids);
  }
  j["metrics"] = std::move(metrics);
  return j;
}

inline StrengthEstimate EstimateFromJson(const Json& j) {
  try {
    StrengthEstimate estimate;
    estimate.model_ids = j.at("models").get<std::vector<std::string>>();
    for (const auto& [name, mj] : j.at("metrics").items()) {
      MetricEstimate est;
      for (const std::string& id : estimate.model_ids) {
        est.strengths.push_back(mj.at("strengths").at(id).get<double>());
      }
      est.theta = mj.at("theta").get<double>();
      est.log_likelihood = mj.at("log_likelihood").get<double>();
      est.ranking = mj.at("ranking").get<std::vector<std::string>>();
      est.converged = mj.at("converged").get<bool>();
      est.iterations = mj.value("iterations", 0);
      est.smoothed = mj.value("smoothed", false);
      estimate.metrics.emplace(ParseMetric(name), std::move(est));
    }
    return estimate;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("invalid estimate JSON: ") + e.what());
  }
}

}  // namespace arena
