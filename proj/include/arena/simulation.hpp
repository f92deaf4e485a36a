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

// Simulated annotators that sample verdicts from a known Rao-Kupper truth,
// and the experiment drivers built on them.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "arena/domain.hpp"
#include "arena/estimation.hpp"
#include "arena/random.hpp"
#include "arena/rao_kupper.hpp"
#include "arena/scheduler.hpp"
#include "arena/text_io.hpp"

namespace arena {

struct MetricTruth {
  std::map<std::string, double> strengths;  // model id -> p*
  double theta = 1.3;

  friend bool operator==(const MetricTruth&, const MetricTruth&) = default;
};

struct GroundTruth {
  std::map<MetricId, MetricTruth> metrics;  // all six
  std::map<std::string, double> annotator_lambda;  // theta_a = theta^lambda

  std::vector<std::string> Models() const {
    std::vector<std::string> out;
    for (const auto& [id, p] : metrics.begin()->second.strengths) {
      out.push_back(id);
    }
    return out;
  }

  double Lambda(const std::string& annotator) const {
    const auto it = annotator_lambda.find(annotator);
    return it == annotator_lambda.end() ? 1.0 : it->second;
  }

  // Keeps only the given models.
  GroundTruth Restrict(const std::vector<std::string>& models) const {
    GroundTruth out;
    out.annotator_lambda = annotator_lambda;
    for (const auto& [m, t] : metrics) {
      MetricTruth r;
      r.theta = t.theta;
      for (const std::string& id : models) r.strengths[id] = t.strengths.at(id);
      out.metrics[m] = std::move(r);
    }
    return out;
  }

  void Validate() const {
    if (metrics.size() != kNumMetrics) {
      throw ValidationError("truth must cover all six metrics");
    }
    std::vector<std::string> models;
    for (const auto& [m, t] : metrics) {
      std::vector<std::string> ids;
      for (const auto& [id, p] : t.strengths) {
        ValidateIdentifier(id, "model");
        if (!(p > 0.0) || !std::isfinite(p)) {
          throw ValidationError("truth strength for '" + id + "' in " +
                                std::string(MetricName(m)) +
                                " must be positive");
        }
        ids.push_back(id);
      }
      if (ids.size() < 2) {
        throw ValidationError("truth needs at least two models");
      }
      if (models.empty()) models = ids;
      if (ids != models) {
        throw ValidationError("truth metrics disagree on the model set");
      }
      if (!(t.theta >= 1.0) || !std::isfinite(t.theta)) {
        throw ValidationError("truth theta for " + std::string(MetricName(m)) +
                              " must be >= 1");
      }
    }
    for (const auto& [a, lambda] : annotator_lambda) {
      if (!(lambda > 0.0)) {
        throw ValidationError("lambda for annotator '" + a +
                              "' must be positive");
      }
    }
  }

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

// Same log-strengths and theta on every metric.
inline GroundTruth UniformTruth(const std::vector<std::string>& models,
                                const std::vector<double>& log_strengths,
                                double theta) {
  GroundTruth truth;
  for (MetricId m : kAllMetrics) {
    MetricTruth t;
    t.theta = theta;
    for (std::size_t i = 0; i < models.size(); ++i) {
      t.strengths[models[i]] = std::exp(log_strengths[i]);
    }
    truth.metrics[m] = std::move(t);
  }
  truth.Validate();
  return truth;
}

// {"metrics": {"<metric>": {"theta": x, "strengths": {"<model>": p}}},
//  "default": {...}, "log_scale": false, "annotators": {"<id>": lambda}}
// "default" fills metrics that are not listed. With "log_scale": true the
// strengths are read as ln p.
inline GroundTruth GroundTruthFromJson(const Json& j) {
  try {
    GroundTruth truth;
    const bool log_scale = j.value("log_scale", false);
    auto read = [&](const Json& mj) {
      MetricTruth t;
      t.theta = mj.value("theta", 1.3);
      for (const auto& [id, v] : mj.at("strengths").items()) {
        const double x = v.get<double>();
        t.strengths[id] = log_scale ? std::exp(x) : x;
      }
      return t;
    };
    const Json metrics = j.value("metrics", Json::object());
    for (const auto& [name, mj] : metrics.items()) {
      truth.metrics[ParseMetric(name)] = read(mj);
    }
    if (j.contains("default")) {
      const MetricTruth fallback = read(j.at("default"));
      for (MetricId m : kAllMetrics) truth.metrics.emplace(m, fallback);
    }
    if (j.contains("annotators")) {
      for (const auto& [id, v] : j.at("annotators").items()) {
        truth.annotator_lambda[id] = v.get<double>();
      }
    }
    truth.Validate();
    return truth;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("invalid truth: ") + e.what());
  }
}

inline Json ToJson(const GroundTruth& truth) {
  Json metrics = Json::object();
  for (const auto& [m, t] : truth.metrics) {
    Json strengths = Json::object();
    for (const auto& [id, p] : t.strengths) strengths[id] = p;
    metrics[std::string(MetricName(m))] = {{"theta", t.theta},
                                           {"strengths", strengths}};
  }
  Json j{{"metrics", metrics}};
  if (!truth.annotator_lambda.empty()) j["annotators"] = truth.annotator_lambda;
  return j;
}

// Categorical draw from the three Rao-Kupper probabilities using one
// uniform u in [0, 1).
inline Outcome OutcomeFromUniform(double u, double p_a, double p_b,
                                  double theta) {
  const double win = ProbWin(p_a, p_b, theta);
  if (u < win) return Outcome::kAWins;
  if (u < win + ProbTie(p_a, p_b, theta)) return Outcome::kTie;
  return Outcome::kBWins;
}

inline Outcome SampleJudgment(const std::string& model_a,
                              const std::string& model_b, MetricId metric,
                              const GroundTruth& truth, RandomStream& rng,
                              double lambda = 1.0) {
  const MetricTruth& t = truth.metrics.at(metric);
  const auto a = t.strengths.find(model_a);
  const auto b = t.strengths.find(model_b);
  if (a == t.strengths.end() || b == t.strengths.end()) {
    throw ValidationError("model '" +
                          (a == t.strengths.end() ? model_a : model_b) +
                          "' is not in the truth");
  }
  return OutcomeFromUniform(rng.Uniform(), a->second, b->second,
                            std::pow(t.theta, lambda));
}

// Verdicts are a pure function of (seed, annotator, pair, metric), so the
// same annotator gives the same answer no matter which run asks.
class SimulatedAnnotator {
 public:
  SimulatedAnnotator(std::shared_ptr<const GroundTruth> truth,
                     std::uint64_t seed, std::string annotator_id = "sim")
      : truth_(std::move(truth)),
        seed_(DeriveSeed(seed, annotator_id)),
        lambda_(truth_->Lambda(annotator_id)),
        annotator_id_(std::move(annotator_id)) {}

  Outcome Judge(const VideoPair& pair, MetricId metric) const {
    const std::uint64_t h = SplitMix64(
        DeriveSeed(seed_, pair.pair_id + "|" + std::string(MetricName(metric))));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    const MetricTruth& t = truth_->metrics.at(metric);
    return OutcomeFromUniform(u, t.strengths.at(pair.video_a.model_id),
                              t.strengths.at(pair.video_b.model_id),
                              std::pow(t.theta, lambda_));
  }

  Verdicts operator()(const VideoPair& pair, const ServedPair&) const {
    Verdicts v;
    for (MetricId m : kAllMetrics) v[MetricIndex(m)] = Judge(pair, m);
    return v;
  }

  const std::string& annotator_id() const { return annotator_id_; }

 private:
  std::shared_ptr<const GroundTruth> truth_;
  std::uint64_t seed_;
  double lambda_;
  std::string annotator_id_;
};

struct StudyOptions {
  int n_prompts = 200;
  double feature_noise = 0.3;  // sd of the feature score around the truth
};

// One video per (prompt, model). The feature score is the model's mean true
// log-strength plus Gaussian noise.
inline std::vector<Video> SyntheticVideos(const GroundTruth& truth,
                                          const StudyOptions& options,
                                          std::uint64_t seed) {
  RandomStream rng(DeriveSeed(seed, "videos"));
  std::map<std::string, double> mean_log;
  for (const auto& [m, t] : truth.metrics) {
    for (const auto& [id, p] : t.strengths) {
      mean_log[id] += std::log(p) / static_cast<double>(truth.metrics.size());
    }
  }
  std::vector<Video> videos;
  char prompt[32];
  for (int k = 0; k < options.n_prompts; ++k) {
    std::snprintf(prompt, sizeof(prompt), "prompt%04d", k);
    for (const auto& [id, s] : mean_log) {
      Video v;
      v.id = std::string(prompt) + "_" + id;
      v.prompt_id = prompt;
      v.model_id = id;
      v.uri = "media/" + v.id + ".mp4";
      v.feature_score = s + options.feature_noise * rng.Normal();
      videos.push_back(std::move(v));
    }
  }
  return videos;
}

struct CostRow {
  std::uint64_t seed = 0;
  std::size_t total_pairs = 0;
  std::size_t served = 0;
  double served_fraction = 0.0;
  int updates = 0;
  SessionStatus status = SessionStatus::kActive;
  std::map<MetricId, bool> ranking_match;  // dynamic vs full annotation
};

struct CostReport {
  std::vector<CostRow> rows;
  double mean_served_fraction = 0.0;
  std::map<MetricId, int> seeds_matching;  // per metric

  int MinSeedsMatching() const {
    int lo = static_cast<int>(rows.size());
    for (const auto& [m, n] : seeds_matching) lo = std::min(lo, n);
    return lo;
  }
};

inline CostRow RunCostSeed(const GroundTruth& truth,
                           const StudyOptions& study,
                           const SchedulerConfig& config, std::uint64_t seed) {
  auto shared_truth = std::make_shared<const GroundTruth>(truth);
  SchedulerConfig c = config;
  c.seed = seed;
  auto plan = std::make_shared<const SchedulePlan>(
      BuildPlan(SyntheticVideos(truth, study, seed), c));
  const SimulatedAnnotator annotator(shared_truth, DeriveSeed(seed, "judge"));
  const RunResult full = RunFull(*plan, annotator);
  const RunResult dynamic =
      RunDynamic(plan, annotator, DeriveSeed(seed, "discard"));
  CostRow row;
  row.seed = seed;
  row.total_pairs = dynamic.total_pairs;
  row.served = dynamic.judged_pairs;
  row.served_fraction = dynamic.ServedFraction();
  row.updates = dynamic.updates;
  row.status = dynamic.status;
  for (MetricId m : kAllMetrics) {
    row.ranking_match[m] =
        dynamic.estimate && dynamic.estimate->metrics.count(m) &&
        full.estimate->metrics.at(m).ranking ==
            dynamic.estimate->metrics.at(m).ranking;
  }
  return row;
}

inline CostReport ExperimentCost(const GroundTruth& truth,
                                 const StudyOptions& study,
                                 const SchedulerConfig& config,
                                 const std::vector<std::uint64_t>& seeds) {
  CostReport report;
  for (MetricId m : kAllMetrics) report.seeds_matching[m] = 0;
  for (std::uint64_t seed : seeds) {
    CostRow row = RunCostSeed(truth, study, config, seed);
    report.mean_served_fraction += row.served_fraction;
    for (const auto& [m, match] : row.ranking_match) {
      report.seeds_matching[m] += match ? 1 : 0;
    }
    report.rows.push_back(std::move(row));
  }
  if (!seeds.empty()) {
    report.mean_served_fraction /= static_cast<double>(seeds.size());
  }
  return report;
}

inline Json ToJson(const CostReport& r) {
  Json rows = Json::array();
  for (const CostRow& row : r.rows) {
    Json match = Json::object();
    for (const auto& [m, ok] : row.ranking_match) {
      match[std::string(MetricName(m))] = ok;
    }
    rows.push_back({{"seed", row.seed},
                    {"total_pairs", row.total_pairs},
                    {"served", row.served},
                    {"served_fraction", row.served_fraction},
                    {"updates", row.updates},
                    {"status", StatusName(row.status)},
                    {"ranking_match", match}});
  }
  Json matching = Json::object();
  for (const auto& [m, n] : r.seeds_matching) {
    matching[std::string(MetricName(m))] = n;
  }
  return Json{{"experiment", "cost"},
              {"mean_served_fraction", r.mean_served_fraction},
              {"seeds_matching", matching},
              {"rows", rows}};
}

// Runs the dynamic scheduler on every model subset of the given sizes and
// averages judged pairs over the seeds.
inline SubsetSweepReport ExperimentGrowth(
    const GroundTruth& truth, const StudyOptions& study,
    const SchedulerConfig& config, const std::vector<std::uint64_t>& seeds,
    const std::vector<int>& sizes = {2, 3, 4}) {
  return SubsetSweep(
      truth.Models(), sizes,
      [&](const std::vector<std::string>& subset)
          -> std::pair<double, std::size_t> {
        const GroundTruth sub = truth.Restrict(subset);
        auto shared_truth = std::make_shared<const GroundTruth>(sub);
        std::string key;
        for (const auto& m : subset) key += m + ",";
        double judged = 0.0;
        std::size_t total = 0;
        for (std::uint64_t seed : seeds) {
          const std::uint64_t s = DeriveSeed(seed, key);
          SchedulerConfig c = config;
          c.seed = s;
          auto plan = std::make_shared<const SchedulePlan>(
              BuildPlan(SyntheticVideos(sub, study, s), c));
          const SimulatedAnnotator annotator(shared_truth,
                                             DeriveSeed(s, "judge"));
          const RunResult run =
              RunDynamic(plan, annotator, DeriveSeed(s, "discard"));
          judged += static_cast<double>(run.judged_pairs);
          total = run.total_pairs;
        }
        return {judged / static_cast<double>(seeds.size()), total};
      });
}

}  // namespace arena
