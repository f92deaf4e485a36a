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

// Percentile bootstrap for strengths. Each resample draws, for every
// annotator separately, as many records as that annotator contributed, with
// replacement. The draws are pooled and refitted.
//
// Resample r uses its own stream seeded from (seed, r), so resamples are
// independent of each other and of evaluation order.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "arena/domain.hpp"
#include "arena/estimation.hpp"
#include "arena/random.hpp"
#include "arena/scheduler.hpp"
#include "arena/text_io.hpp"

namespace arena {

enum class RerunMode { kEstimateOnly, kFullDynamic };

constexpr std::string_view RerunModeName(RerunMode m) {
  return m == RerunMode::kEstimateOnly ? "ESTIMATE_ONLY" : "FULL_DYNAMIC";
}

inline RerunMode ParseRerunMode(std::string_view name) {
  if (name == "ESTIMATE_ONLY") return RerunMode::kEstimateOnly;
  if (name == "FULL_DYNAMIC") return RerunMode::kFullDynamic;
  throw ValidationError("unknown rerun mode '" + std::string(name) + "'");
}

struct BootstrapConfig {
  int n_resamples = 1000;
  double ci_lower_pct = 2.5;
  double ci_upper_pct = 97.5;
  std::uint64_t seed = 0;
  RerunMode rerun_mode = RerunMode::kEstimateOnly;

  void Validate() const {
    if (n_resamples < 1) throw ValidationError("n_resamples must be >= 1");
    if (!(ci_lower_pct > 0.0 && ci_lower_pct < ci_upper_pct &&
          ci_upper_pct < 100.0)) {
      throw ValidationError("need 0 < ci_lower_pct < ci_upper_pct < 100");
    }
  }
};

// Linear interpolation between order statistics at h = (n - 1) * pct / 100.
inline double Percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw ValidationError("percentile of an empty sample");
  if (!(pct >= 0.0 && pct <= 100.0)) {
    throw ValidationError("percentile must lie in [0, 100]");
  }
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * pct / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) *
                          (values[lo + 1] - values[lo]);
}

// Orders records so results do not depend on input order.
inline void SortCanonically(std::vector<JudgmentRecord>& records) {
  auto key = [](const JudgmentRecord& r) {
    return std::tie(r.annotator_id, r.session_id, r.pair_id, r.metric,
                    r.outcome, r.phase, r.batch_index, r.timestamp);
  };
  std::sort(records.begin(), records.end(),
            [&](const JudgmentRecord& a, const JudgmentRecord& b) {
              return key(a) < key(b);
            });
}

// Records grouped by annotator, canonical order inside each group.
inline std::map<std::string, std::vector<JudgmentRecord>> GroupByAnnotator(
    std::vector<JudgmentRecord> records) {
  SortCanonically(records);
  std::map<std::string, std::vector<JudgmentRecord>> groups;
  for (JudgmentRecord& r : records) {
    groups[r.annotator_id].push_back(std::move(r));
  }
  return groups;
}

// Draws resample r: per annotator, indices into that annotator's group.
inline std::map<std::string, std::vector<std::size_t>> ResampleIndices(
    const std::map<std::string, std::vector<JudgmentRecord>>& groups,
    std::uint64_t seed, int r) {
  RandomStream rng(DeriveSeed(seed, static_cast<std::uint64_t>(r)));
  std::map<std::string, std::vector<std::size_t>> out;
  for (const auto& [annotator, records] : groups) {
    if (records.empty()) {
      throw ValidationError("annotator '" + annotator + "' has no records");
    }
    auto& idx = out[annotator];
    idx.reserve(records.size());
    for (std::size_t k = 0; k < records.size(); ++k) {
      idx.push_back(rng.Below(records.size()));
    }
  }
  return out;
}

// Materialized resample r, pooled across annotators.
inline std::vector<JudgmentRecord> ResampleRecords(
    const std::vector<JudgmentRecord>& records, std::uint64_t seed, int r) {
  const auto groups = GroupByAnnotator(records);
  std::vector<JudgmentRecord> out;
  for (const auto& [annotator, idx] : ResampleIndices(groups, seed, r)) {
    for (std::size_t k : idx) out.push_back(groups.at(annotator)[k]);
  }
  return out;
}

struct ModelInterval {
  std::string model_id;
  double point_estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;

  friend bool operator==(const ModelInterval&, const ModelInterval&) = default;
};

struct ConfidenceReport {
  std::map<MetricId, std::vector<ModelInterval>> metrics;
  int n_resamples = 0;
  int flagged_resamples = 0;  // needed the smoothing fallback
  double ci_lower_pct = 2.5;
  double ci_upper_pct = 97.5;
  std::uint64_t seed = 0;
  RerunMode rerun_mode = RerunMode::kEstimateOnly;

  const ModelInterval& Interval(MetricId m, std::string_view model) const {
    for (const ModelInterval& i : metrics.at(m)) {
      if (i.model_id == model) return i;
    }
    throw NotFoundError("no interval for model '" + std::string(model) + "'");
  }

  friend bool operator==(const ConfidenceReport&,
                         const ConfidenceReport&) = default;
};

inline Json ToJson(const ConfidenceReport& r) {
  Json metrics = Json::object();
  for (const auto& [m, intervals] : r.metrics) {
    Json models = Json::object();
    for (const ModelInterval& i : intervals) {
      models[i.model_id] = {{"point_estimate", i.point_estimate},
                            {"ci_low", i.ci_low},
                            {"ci_high", i.ci_high}};
    }
    metrics[std::string(MetricName(m))] = std::move(models);
  }
  return Json{{"n_resamples", r.n_resamples},
              {"ci_lower_pct", r.ci_lower_pct},
              {"ci_upper_pct", r.ci_upper_pct},
              {"seed", r.seed},
              {"rerun_mode", RerunModeName(r.rerun_mode)},
              {"flagged_resamples", r.flagged_resamples},
              {"metrics", std::move(metrics)}};
}

inline ConfidenceReport ConfidenceReportFromJson(const Json& j) {
  try {
    ConfidenceReport r;
    r.n_resamples = j.at("n_resamples").get<int>();
    r.ci_lower_pct = j.at("ci_lower_pct").get<double>();
    r.ci_upper_pct = j.at("ci_upper_pct").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.rerun_mode = ParseRerunMode(j.at("rerun_mode").get<std::string>());
    r.flagged_resamples = j.at("flagged_resamples").get<int>();
    for (const auto& [name, models] : j.at("metrics").items()) {
      auto& intervals = r.metrics[ParseMetric(name)];
      for (const auto& [id, v] : models.items()) {
        intervals.push_back({id, v.at("point_estimate").get<double>(),
                             v.at("ci_low").get<double>(),
                             v.at("ci_high").get<double>()});
      }
    }
    return r;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("invalid confidence report: ") +
                          e.what());
  }
}

namespace detail {

// One record reduced to tally coordinates.
struct CompactRecord {
  MetricId metric;
  std::size_t a;
  std::size_t b;
  Outcome outcome;
};

inline FitOptions ResampleFitOptions(FitOptions options) {
  options.smoothing = true;
  return options;
}

inline bool AnySmoothed(const StrengthEstimate& est) {
  return std::any_of(est.metrics.begin(), est.metrics.end(),
                     [](const auto& kv) { return kv.second.smoothed; });
}

// Replays each annotator's resampled records through their own scheduler;
// a served pair takes the first resampled verdict per metric, if any.
inline ComparisonTally ReplayDynamic(
    const std::shared_ptr<const SchedulePlan>& plan,
    const std::map<std::string, std::vector<JudgmentRecord>>& groups,
    const std::map<std::string, std::vector<std::size_t>>& draws,
    std::uint64_t resample_seed, const FitOptions& fit_options) {
  ComparisonTally pooled(plan->model_ids);
  for (const auto& [annotator, idx] : draws) {
    std::map<std::string, Verdicts> pool;
    for (std::size_t k : idx) {
      const JudgmentRecord& r = groups.at(annotator)[k];
      auto& slot = pool[r.pair_id][MetricIndex(r.metric)];
      if (!slot) slot = r.outcome;
    }
    auto source = [&](const VideoPair& p, const ServedPair&) {
      const auto it = pool.find(p.pair_id);
      return it == pool.end() ? Verdicts{} : it->second;
    };
    DynamicScheduler scheduler(plan, DeriveSeed(resample_seed, annotator),
                               fit_options);
    while (const auto served = scheduler.Next()) {
      scheduler.Record(served->pair->pair_id, source(*served->pair, *served));
    }
    const ComparisonTally& t = scheduler.tally();
    for (MetricId m : kAllMetrics) {
      for (std::size_t i = 0; i < t.num_models(); ++i) {
        for (std::size_t j = 0; j < t.num_models(); ++j) {
          if (i == j) continue;
          if (t.slice(m).wins(i, j)) {
            pooled.slice(m).AddWin(i, j, t.slice(m).wins(i, j));
          }
          if (i < j && t.slice(m).ties(i, j)) {
            pooled.slice(m).AddTie(i, j, t.slice(m).ties(i, j));
          }
        }
      }
    }
  }
  return pooled;
}

}  // namespace detail

// Point estimates come from the full record set; intervals from the
// resamples. All strengths are on the geometric-mean-1 scale. FULL_DYNAMIC
// needs the plan the records were collected under.
inline ConfidenceReport BootstrapCi(
    const std::vector<JudgmentRecord>& records, const BootstrapConfig& config,
    std::shared_ptr<const SchedulePlan> plan = nullptr,
    const FitOptions& fit_options = {}) {
  config.Validate();
  if (records.empty()) throw ValidationError("bootstrap needs records");
  if (config.rerun_mode == RerunMode::kFullDynamic && !plan) {
    throw ValidationError("FULL_DYNAMIC bootstrap needs the schedule plan");
  }
  const auto groups = GroupByAnnotator(records);
  const std::vector<std::string> models =
      plan ? plan->model_ids : ModelsInJudgments(records);

  std::map<std::string, std::vector<detail::CompactRecord>> compact;
  for (const auto& [annotator, rs] : groups) {
    ComparisonTally probe(models);
    auto& out = compact[annotator];
    for (const JudgmentRecord& r : rs) {
      const PairKey key = ParsePairId(r.pair_id);
      const auto a = probe.IndexOf(key.model_a);
      const auto b = probe.IndexOf(key.model_b);
      if (!a || !b) {
        throw ValidationError("record for pair '" + r.pair_id +
                              "' names a model outside the study");
      }
      out.push_back({r.metric, *a, *b, r.outcome});
    }
  }

  const FitOptions resample_options = detail::ResampleFitOptions(fit_options);
  const StrengthEstimate point =
      FitMle(TallyFromJudgments(records, models), resample_options);

  ConfidenceReport report;
  report.n_resamples = config.n_resamples;
  report.ci_lower_pct = config.ci_lower_pct;
  report.ci_upper_pct = config.ci_upper_pct;
  report.seed = config.seed;
  report.rerun_mode = config.rerun_mode;

  // samples[metric][model] -> strengths across resamples
  std::map<MetricId, std::vector<std::vector<double>>> samples;
  for (int r = 0; r < config.n_resamples; ++r) {
    const auto draws = ResampleIndices(groups, config.seed, r);
    ComparisonTally tally(models);
    if (config.rerun_mode == RerunMode::kEstimateOnly) {
      for (const auto& [annotator, idx] : draws) {
        const auto& rows = compact.at(annotator);
        for (std::size_t k : idx) {
          tally.Add(rows[k].metric, rows[k].a, rows[k].b, rows[k].outcome);
        }
      }
    } else {
      tally = detail::ReplayDynamic(
          plan, groups, draws,
          DeriveSeed(config.seed, static_cast<std::uint64_t>(r)),
          fit_options);
    }
    const StrengthEstimate est = FitMle(tally, resample_options);
    if (detail::AnySmoothed(est)) ++report.flagged_resamples;
    for (const auto& [m, e] : est.metrics) {
      auto& per_model = samples[m];
      per_model.resize(models.size());
      for (std::size_t i = 0; i < models.size(); ++i) {
        per_model[i].push_back(e.strengths[i]);
      }
    }
  }

  for (const auto& [m, e] : point.metrics) {
    const auto it = samples.find(m);
    if (it == samples.end()) continue;
    auto& intervals = report.metrics[m];
    for (std::size_t i = 0; i < models.size(); ++i) {
      ModelInterval interval;
      interval.model_id = models[i];
      interval.point_estimate = e.strengths[i];
      interval.ci_low = Percentile(it->second[i], config.ci_lower_pct);
      interval.ci_high = Percentile(it->second[i], config.ci_upper_pct);
      intervals.push_back(std::move(interval));
    }
  }
  return report;
}

}  // namespace arena
