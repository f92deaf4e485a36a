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

// Pair scheduling: proximity pre-sorting of prompt groups, a static phase,
// then batched dynamic annotation with probabilistic discards driven by the
// current strength gaps.
//
//   f(x, a) = exp(-a x)      pair score from the feature-score gap
//   g(x, a) = 1 - exp(-a x)  discard probability from the log-strength gap
//
// DynamicScheduler is a single-writer state machine. It never calls back into
// the judgment source; the caller pulls Next() and pushes Record().

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "arena/domain.hpp"
#include "arena/estimation.hpp"
#include "arena/random.hpp"
#include "arena/text_io.hpp"

namespace arena {

enum class DrivingScore { kPerMetricMean, kSingleMetric };

struct SchedulerConfig {
  double alpha = 1.0;
  int n0_pairs = 200;
  int batch_groups = 8;
  int update_every_batches = 5;
  int stability_window = 5;
  std::uint64_t seed = 0;
  DrivingScore driving_score = DrivingScore::kPerMetricMean;
  MetricId driving_metric = MetricId::kHumanPreference;  // kSingleMetric only

  void Validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw ValidationError("alpha must be positive and finite");
    }
    if (n0_pairs < 1 || batch_groups < 1 || update_every_batches < 1 ||
        stability_window < 1) {
      throw ValidationError(
          "n0_pairs, batch_groups, update_every_batches and stability_window "
          "must be >= 1");
    }
  }

  friend bool operator==(const SchedulerConfig&,
                         const SchedulerConfig&) = default;
};

inline Json ToJson(const SchedulerConfig& c) {
  Json j{{"alpha", c.alpha},
         {"n0_pairs", c.n0_pairs},
         {"batch_groups", c.batch_groups},
         {"update_every_batches", c.update_every_batches},
         {"stability_window", c.stability_window},
         {"seed", c.seed}};
  if (c.driving_score == DrivingScore::kPerMetricMean) {
    j["driving_score"] = "PER_METRIC_MEAN";
  } else {
    j["driving_score"] = "SINGLE_METRIC";
    j["driving_metric"] = MetricName(c.driving_metric);
  }
  return j;
}

// Missing keys keep their defaults.
inline SchedulerConfig SchedulerConfigFromJson(const Json& j) {
  SchedulerConfig c;
  try {
    c.alpha = j.value("alpha", c.alpha);
    c.n0_pairs = j.value("n0_pairs", c.n0_pairs);
    c.batch_groups = j.value("batch_groups", c.batch_groups);
    c.update_every_batches =
        j.value("update_every_batches", c.update_every_batches);
    c.stability_window = j.value("stability_window", c.stability_window);
    c.seed = j.value("seed", c.seed);
    const std::string driving = j.value("driving_score", "PER_METRIC_MEAN");
    if (driving == "PER_METRIC_MEAN") {
      c.driving_score = DrivingScore::kPerMetricMean;
    } else if (driving == "SINGLE_METRIC") {
      c.driving_score = DrivingScore::kSingleMetric;
      c.driving_metric = ParseMetric(j.at("driving_metric").get<std::string>());
    } else {
      throw ValidationError("unknown driving_score '" + driving + "'");
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("invalid scheduler config: ") +
                          e.what());
  }
  c.Validate();
  return c;
}

inline double PairScore(double delta_s, double alpha) {
  if (!(delta_s >= 0.0)) throw std::domain_error("negative feature gap");
  return std::exp(-alpha * delta_s);
}

inline double DiscardProbability(double strength_gap, double alpha) {
  if (!(strength_gap >= 0.0)) throw std::domain_error("negative strength gap");
  return -std::expm1(-alpha * strength_gap);
}

struct SchedulePlan {
  SchedulerConfig config;
  std::vector<std::string> model_ids;  // sorted
  std::vector<Group> groups;           // sorted, highest group_score first
  std::vector<std::vector<double>> pair_scores;  // parallel to groups
  std::size_t static_groups = 0;
  std::vector<std::vector<std::size_t>> batches;  // group indices

  std::size_t TotalPairs() const {
    std::size_t n = 0;
    for (const Group& g : groups) n += g.pairs.size();
    return n;
  }
  std::size_t StaticPairs() const {
    std::size_t n = 0;
    for (std::size_t g = 0; g < static_groups; ++g) n += groups[g].pairs.size();
    return n;
  }
};

// Orders groups by proximity and splits them into the static phase and
// dynamic batches. Every video needs a feature score.
inline SchedulePlan BuildPlan(std::vector<Group> groups,
                              const SchedulerConfig& config) {
  config.Validate();
  std::vector<std::string> missing;
  std::set<std::string> models;
  for (const Group& g : groups) {
    for (const VideoPair& p : g.pairs) {
      for (const Video* v : {&p.video_a, &p.video_b}) {
        models.insert(v->model_id);
        if (!v->feature_score &&
            std::find(missing.begin(), missing.end(), v->id) ==
                missing.end()) {
          missing.push_back(v->id);
        }
      }
    }
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& v : missing) names += (names.empty() ? "" : ", ") + v;
    throw ValidationError("missing feature score for videos: " + names);
  }
  std::erase_if(groups, [](const Group& g) { return g.pairs.empty(); });

  for (Group& g : groups) {
    g.group_score = 0.0;
    for (const VideoPair& p : g.pairs) {
      g.group_score += PairScore(
          std::abs(*p.video_a.feature_score - *p.video_b.feature_score),
          config.alpha);
    }
  }
  std::sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
    if (a.group_score != b.group_score) return a.group_score > b.group_score;
    return a.prompt_id < b.prompt_id;
  });

  SchedulePlan plan;
  plan.config = config;
  plan.model_ids.assign(models.begin(), models.end());
  for (const Group& g : groups) {
    std::vector<double> scores;
    for (const VideoPair& p : g.pairs) {
      scores.push_back(PairScore(
          std::abs(*p.video_a.feature_score - *p.video_b.feature_score),
          config.alpha));
    }
    plan.pair_scores.push_back(std::move(scores));
  }
  std::size_t accumulated = 0;
  while (plan.static_groups < groups.size() &&
         accumulated < static_cast<std::size_t>(config.n0_pairs)) {
    accumulated += groups[plan.static_groups++].pairs.size();
  }
  for (std::size_t g = plan.static_groups; g < groups.size(); ++g) {
    if ((g - plan.static_groups) % config.batch_groups == 0) {
      plan.batches.emplace_back();
    }
    plan.batches.back().push_back(g);
  }
  plan.groups = std::move(groups);
  return plan;
}

inline SchedulePlan BuildPlan(const std::vector<Video>& videos,
                              const SchedulerConfig& config) {
  return BuildPlan(BuildGroups(videos), config);
}

namespace detail {

inline Json VideoJson(const Video& v) {
  Json j{{"id", v.id},
         {"prompt_id", v.prompt_id},
         {"model_id", v.model_id},
         {"uri", v.uri}};
  if (v.feature_score) j["feature_score"] = *v.feature_score;
  return j;
}

inline Video VideoOf(const Json& j) {
  Video v;
  v.id = j.at("id").get<std::string>();
  v.prompt_id = j.at("prompt_id").get<std::string>();
  v.model_id = j.at("model_id").get<std::string>();
  v.uri = j.value("uri", "");
  if (j.contains("feature_score")) {
    v.feature_score = j["feature_score"].get<double>();
  }
  return v;
}

}  // namespace detail

inline Json ToJson(const SchedulePlan& plan) {
  Json groups = Json::array();
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    Json pairs = Json::array();
    for (std::size_t k = 0; k < plan.groups[g].pairs.size(); ++k) {
      const VideoPair& p = plan.groups[g].pairs[k];
      pairs.push_back({{"pair_id", p.pair_id},
                       {"pair_score", plan.pair_scores[g][k]},
                       {"video_a", detail::VideoJson(p.video_a)},
                       {"video_b", detail::VideoJson(p.video_b)}});
    }
    groups.push_back({{"prompt_id", plan.groups[g].prompt_id},
                      {"group_score", plan.groups[g].group_score},
                      {"pairs", std::move(pairs)}});
  }
  return Json{{"config", ToJson(plan.config)},
              {"model_ids", plan.model_ids},
              {"total_pairs", plan.TotalPairs()},
              {"static_groups", plan.static_groups},
              {"static_pairs", plan.StaticPairs()},
              {"batches", plan.batches},
              {"groups", std::move(groups)}};
}

inline SchedulePlan PlanFromJson(const Json& j) {
  try {
    SchedulePlan plan;
    plan.config = SchedulerConfigFromJson(j.at("config"));
    plan.model_ids = j.at("model_ids").get<std::vector<std::string>>();
    plan.static_groups = j.at("static_groups").get<std::size_t>();
    plan.batches =
        j.at("batches").get<std::vector<std::vector<std::size_t>>>();
    for (const Json& gj : j.at("groups")) {
      Group g;
      g.prompt_id = gj.at("prompt_id").get<std::string>();
      g.group_score = gj.at("group_score").get<double>();
      std::vector<double> scores;
      for (const Json& pj : gj.at("pairs")) {
        VideoPair p = MakeVideoPair(detail::VideoOf(pj.at("video_a")),
                                    detail::VideoOf(pj.at("video_b")));
        if (p.pair_id != pj.at("pair_id").get<std::string>()) {
          throw ValidationError("plan pair id '" +
                                pj.at("pair_id").get<std::string>() +
                                "' does not match its videos");
        }
        scores.push_back(pj.at("pair_score").get<double>());
        g.pairs.push_back(std::move(p));
      }
      plan.pair_scores.push_back(std::move(scores));
      plan.groups.push_back(std::move(g));
    }
    // Every non-static group must sit in exactly one batch, in order.
    std::size_t expect = plan.static_groups;
    for (const auto& batch : plan.batches) {
      for (std::size_t g : batch) {
        if (g != expect++) throw ValidationError("plan batches out of order");
      }
    }
    if (expect != plan.groups.size() ||
        plan.static_groups > plan.groups.size()) {
      throw ValidationError("plan batches do not cover every group");
    }
    return plan;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("invalid plan: ") + e.what());
  }
}

// Verdicts for one pair, relative to the canonical (video_a, video_b)
// orientation; nullopt leaves a metric unjudged.
using Verdicts = std::array<std::optional<Outcome>, kNumMetrics>;

enum class Disposition { kPending, kServed, kDiscarded };

constexpr std::string_view DispositionName(Disposition d) {
  switch (d) {
    case Disposition::kPending: return "PENDING";
    case Disposition::kServed: return "SERVED";
    case Disposition::kDiscarded: return "DISCARDED";
  }
  return "unknown";
}

struct PairDisposition {
  std::string pair_id;
  Phase phase = Phase::kStatic;
  int batch_index = 0;  // 0 for the static phase, dynamic batches from 1
  Disposition state = Disposition::kPending;
  double probability = 0.0;  // discard probability, dynamic phase only
  double draw = 0.0;
  bool judged = false;

  friend bool operator==(const PairDisposition&,
                         const PairDisposition&) = default;
};

inline Json ToJson(const PairDisposition& d) {
  Json j{{"pair_id", d.pair_id},
         {"phase", PhaseName(d.phase)},
         {"batch_index", d.batch_index},
         {"state", DispositionName(d.state)},
         {"judged", d.judged}};
  if (d.phase == Phase::kDynamic && d.state != Disposition::kPending) {
    j["probability"] = d.probability;
    j["draw"] = d.draw;
  }
  return j;
}

using Rankings = std::map<MetricId, std::vector<std::string>>;

inline Rankings RankingsOf(const StrengthEstimate& est) {
  Rankings r;
  for (const auto& [m, e] : est.metrics) r[m] = e.ranking;
  return r;
}

inline Json ToJson(const Rankings& r) {
  Json j = Json::object();
  for (const auto& [m, ranking] : r) j[std::string(MetricName(m))] = ranking;
  return j;
}

struct StopState {
  int consecutive_stable_updates = 0;
  Rankings last_rankings;
  bool stopped = false;

  friend bool operator==(const StopState&, const StopState&) = default;
};

enum class SessionStatus { kActive, kComplete, kStoppedEarly };

constexpr std::string_view StatusName(SessionStatus s) {
  switch (s) {
    case SessionStatus::kActive: return "ACTIVE";
    case SessionStatus::kComplete: return "COMPLETE";
    case SessionStatus::kStoppedEarly: return "STOPPED_EARLY";
  }
  return "unknown";
}

struct PairServedEvent {
  std::string pair_id;
  std::size_t position = 0;
  Phase phase = Phase::kStatic;
  int batch_index = 0;
  friend bool operator==(const PairServedEvent&,
                         const PairServedEvent&) = default;
};

struct PairDiscardedEvent {
  std::string pair_id;
  std::size_t position = 0;
  int batch_index = 0;
  double probability = 0.0;
  double draw = 0.0;
  friend bool operator==(const PairDiscardedEvent&,
                         const PairDiscardedEvent&) = default;
};

struct EstimatesUpdatedEvent {
  int update_index = 0;  // 0 is the fit after the static phase
  std::size_t judged_pairs = 0;
  bool fallback = false;  // refit failed; previous estimate kept
  int consecutive_stable_updates = 0;
  Rankings rankings;
  friend bool operator==(const EstimatesUpdatedEvent&,
                         const EstimatesUpdatedEvent&) = default;
};

struct StoppedEvent {
  SessionStatus status = SessionStatus::kComplete;
  std::size_t judged_pairs = 0;
  friend bool operator==(const StoppedEvent&, const StoppedEvent&) = default;
};

using SchedulerEvent = std::variant<PairServedEvent, PairDiscardedEvent,
                                    EstimatesUpdatedEvent, StoppedEvent>;

struct ServedPair {
  const VideoPair* pair = nullptr;
  std::size_t position = 0;
  Phase phase = Phase::kStatic;
  int batch_index = 0;
};

class DynamicScheduler {
 public:
  DynamicScheduler(std::shared_ptr<const SchedulePlan> plan,
                   std::uint64_t stream_seed, FitOptions fit_options = {})
      : plan_(std::move(plan)),
        stream_(stream_seed),
        fit_options_(fit_options),
        tally_(plan_->model_ids) {
    for (std::size_t g = 0; g < plan_->groups.size(); ++g) {
      const bool is_static = g < plan_->static_groups;
      int batch = 0;
      if (!is_static) {
        batch = static_cast<int>((g - plan_->static_groups) /
                                 plan_->config.batch_groups) + 1;
      }
      for (std::size_t k = 0; k < plan_->groups[g].pairs.size(); ++k) {
        order_.push_back({g, k});
        PairDisposition d;
        d.pair_id = plan_->groups[g].pairs[k].pair_id;
        d.phase = is_static ? Phase::kStatic : Phase::kDynamic;
        d.batch_index = batch;
        dispositions_.push_back(std::move(d));
      }
      // Position right after the last pair of the group.
      if (g + 1 == plan_->static_groups) static_end_ = order_.size();
      if (!is_static && (g + 1 == plan_->groups.size() ||
                         (g + 1 - plan_->static_groups) %
                                 plan_->config.batch_groups == 0)) {
        batch_ends_.insert(order_.size());
      }
    }
    if (order_.empty()) Finish(SessionStatus::kComplete);
  }

  // Returns the pair awaiting a judgment, deciding discards on the way.
  // Repeated calls without Record() return the same pair.
  std::optional<ServedPair> Next() {
    while (status_ == SessionStatus::kActive && cursor_ < order_.size()) {
      PairDisposition& d = dispositions_[cursor_];
      if (awaiting_) return Current();
      if (d.phase == Phase::kDynamic) {
        const double u = stream_.Uniform();
        const double g = estimate_ ? DiscardProbability(Gap(cursor_),
                                                        plan_->config.alpha)
                                   : 0.0;
        d.probability = g;
        d.draw = u;
        if (u < g) {
          d.state = Disposition::kDiscarded;
          ++discarded_;
          events_.push_back(PairDiscardedEvent{d.pair_id, cursor_,
                                               d.batch_index, g, u});
          Advance();
          continue;
        }
      }
      d.state = Disposition::kServed;
      awaiting_ = true;
      events_.push_back(
          PairServedEvent{d.pair_id, cursor_, d.phase, d.batch_index});
      return Current();
    }
    return std::nullopt;
  }

  // Records verdicts for the awaiting pair and moves the cursor on.
  void Record(std::string_view pair_id, const Verdicts& verdicts) {
    if (!awaiting_ || dispositions_[cursor_].pair_id != pair_id) {
      throw ConflictError("pair '" + std::string(pair_id) +
                          "' is not the pair awaiting judgment");
    }
    const VideoPair& pair = *Current().pair;
    const std::size_t a = *tally_.IndexOf(pair.video_a.model_id);
    const std::size_t b = *tally_.IndexOf(pair.video_b.model_id);
    for (MetricId m : kAllMetrics) {
      if (verdicts[MetricIndex(m)]) {
        tally_.Add(m, a, b, *verdicts[MetricIndex(m)]);
      }
    }
    dispositions_[cursor_].judged = true;
    awaiting_ = false;
    ++judged_;
    Advance();
  }

  std::vector<SchedulerEvent> TakeEvents() { return std::exchange(events_, {}); }

  const SchedulePlan& plan() const { return *plan_; }
  std::shared_ptr<const SchedulePlan> shared_plan() const { return plan_; }
  SessionStatus status() const { return status_; }
  std::size_t cursor() const { return cursor_; }
  bool awaiting() const { return awaiting_; }
  std::size_t judged_pairs() const { return judged_; }
  std::size_t discarded_pairs() const { return discarded_; }
  std::size_t total_pairs() const { return order_.size(); }
  int completed_batches() const { return completed_batches_; }
  int updates() const { return updates_; }
  const ComparisonTally& tally() const { return tally_; }
  const std::optional<StrengthEstimate>& estimate() const { return estimate_; }
  const StopState& stop_state() const { return stop_; }
  const std::vector<PairDisposition>& dispositions() const {
    return dispositions_;
  }

 private:
  ServedPair Current() const {
    const auto [g, k] = order_[cursor_];
    const PairDisposition& d = dispositions_[cursor_];
    return ServedPair{&plan_->groups[g].pairs[k], cursor_, d.phase,
                      d.batch_index};
  }

  double Gap(std::size_t position) const {
    const auto [g, k] = order_[position];
    const VideoPair& p = plan_->groups[g].pairs[k];
    const std::size_t a = *tally_.IndexOf(p.video_a.model_id);
    const std::size_t b = *tally_.IndexOf(p.video_b.model_id);
    auto gap_of = [&](const MetricEstimate& e) {
      return std::abs(std::log(e.strengths[a]) - std::log(e.strengths[b]));
    };
    if (plan_->config.driving_score == DrivingScore::kSingleMetric) {
      const auto it = estimate_->metrics.find(plan_->config.driving_metric);
      return it == estimate_->metrics.end() ? 0.0 : gap_of(it->second);
    }
    // The driving score is the mean log-strength over the fitted metrics.
    if (estimate_->metrics.empty()) return 0.0;
    double diff = 0.0;
    for (const auto& [m, e] : estimate_->metrics) {
      diff += std::log(e.strengths[a]) - std::log(e.strengths[b]);
    }
    return std::abs(diff) / static_cast<double>(estimate_->metrics.size());
  }

  void Advance() {
    ++cursor_;
    bool refit = false;
    if (cursor_ == static_end_) {
      Refit();
      refit = true;
    } else if (batch_ends_.count(cursor_)) {
      ++completed_batches_;
      if (completed_batches_ % plan_->config.update_every_batches == 0) {
        Refit();
        refit = true;
        if (stop_.stopped) {
          Finish(SessionStatus::kStoppedEarly);
          return;
        }
      }
    }
    if (cursor_ == order_.size()) {
      if (!refit) Refit();
      Finish(SessionStatus::kComplete);
    }
  }

  void Refit() {
    EstimatesUpdatedEvent ev;
    ev.update_index = updates_;
    ev.judged_pairs = judged_;
    try {
      StrengthEstimate fresh = FitMle(tally_, fit_options_);
      Rankings rankings = RankingsOf(fresh);
      if (updates_ > 0 && !fresh.metrics.empty() &&
          rankings == stop_.last_rankings) {
        ++stop_.consecutive_stable_updates;
      } else {
        stop_.consecutive_stable_updates = 0;
      }
      stop_.last_rankings = std::move(rankings);
      estimate_ = std::move(fresh);
      ++updates_;
      stop_.stopped =
          stop_.consecutive_stable_updates >= plan_->config.stability_window;
    } catch (const DisconnectedGraphError&) {
      ev.fallback = true;
    }
    ev.consecutive_stable_updates = stop_.consecutive_stable_updates;
    ev.rankings = stop_.last_rankings;
    events_.push_back(std::move(ev));
  }

  void Finish(SessionStatus status) {
    status_ = status;
    events_.push_back(StoppedEvent{status, judged_});
  }

  std::shared_ptr<const SchedulePlan> plan_;
  RandomStream stream_;
  FitOptions fit_options_;
  ComparisonTally tally_;
  std::vector<std::pair<std::size_t, std::size_t>> order_;
  std::vector<PairDisposition> dispositions_;
  std::size_t static_end_ = 0;
  std::set<std::size_t> batch_ends_;
  std::size_t cursor_ = 0;
  bool awaiting_ = false;
  std::size_t judged_ = 0;
  std::size_t discarded_ = 0;
  int completed_batches_ = 0;
  int updates_ = 0;
  std::optional<StrengthEstimate> estimate_;
  StopState stop_;
  SessionStatus status_ = SessionStatus::kActive;
  std::vector<SchedulerEvent> events_;
};

inline Json ToJson(const SchedulerEvent& event) {
  return std::visit(
      [](const auto& e) -> Json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, PairServedEvent>) {
          return {{"type", "PAIR_SERVED"},
                  {"pair_id", e.pair_id},
                  {"position", e.position},
                  {"phase", PhaseName(e.phase)},
                  {"batch_index", e.batch_index}};
        } else if constexpr (std::is_same_v<T, PairDiscardedEvent>) {
          return {{"type", "PAIR_DISCARDED"},
                  {"pair_id", e.pair_id},
                  {"position", e.position},
                  {"batch_index", e.batch_index},
                  {"probability", e.probability},
                  {"draw", e.draw}};
        } else if constexpr (std::is_same_v<T, EstimatesUpdatedEvent>) {
          return {{"type", "ESTIMATES_UPDATED"},
                  {"update_index", e.update_index},
                  {"judged_pairs", e.judged_pairs},
                  {"fallback", e.fallback},
                  {"consecutive_stable_updates", e.consecutive_stable_updates},
                  {"rankings", ToJson(e.rankings)}};
        } else {
          return {{"type", "SESSION_STOPPED"},
                  {"status", StatusName(e.status)},
                  {"judged_pairs", e.judged_pairs}};
        }
      },
      event);
}

// Pulls verdicts for a served pair: Verdicts(const VideoPair&, const
// ServedPair&).
template <typename Source>
concept JudgmentSource = requires(Source s, const VideoPair& p,
                                  const ServedPair& served) {
  { s(p, served) } -> std::convertible_to<Verdicts>;
};

struct RunResult {
  std::optional<StrengthEstimate> estimate;
  std::vector<PairDisposition> dispositions;
  std::vector<JudgmentRecord> records;
  std::size_t judged_pairs = 0;
  std::size_t discarded_pairs = 0;
  std::size_t total_pairs = 0;
  int updates = 0;
  SessionStatus status = SessionStatus::kActive;
  StopState stop_state;

  double ServedFraction() const {
    return total_pairs == 0 ? 0.0
                            : static_cast<double>(judged_pairs) /
                                  static_cast<double>(total_pairs);
  }
};

namespace detail {

inline void AppendRecords(std::vector<JudgmentRecord>& out,
                          const std::string& annotator_id,
                          const std::string& session_id, const VideoPair& p,
                          const ServedPair& served, const Verdicts& verdicts) {
  for (MetricId m : kAllMetrics) {
    if (!verdicts[MetricIndex(m)]) continue;
    JudgmentRecord r;
    r.annotator_id = annotator_id;
    r.pair_id = p.pair_id;
    r.metric = m;
    r.outcome = *verdicts[MetricIndex(m)];
    r.phase = served.phase;
    r.batch_index = served.batch_index;
    r.session_id = session_id;
    out.push_back(std::move(r));
  }
}

}  // namespace detail

// Runs the scheduler to completion against a judgment source.
template <JudgmentSource Source>
RunResult RunDynamic(std::shared_ptr<const SchedulePlan> plan, Source&& source,
                     std::uint64_t stream_seed,
                     const std::string& annotator_id = "sim",
                     const FitOptions& fit_options = {}) {
  DynamicScheduler scheduler(std::move(plan), stream_seed, fit_options);
  RunResult result;
  while (const auto served = scheduler.Next()) {
    const Verdicts verdicts = source(*served->pair, *served);
    detail::AppendRecords(result.records, annotator_id, annotator_id,
                          *served->pair, *served, verdicts);
    scheduler.Record(served->pair->pair_id, verdicts);
  }
  result.estimate = scheduler.estimate();
  result.dispositions = scheduler.dispositions();
  result.judged_pairs = scheduler.judged_pairs();
  result.discarded_pairs = scheduler.discarded_pairs();
  result.total_pairs = scheduler.total_pairs();
  result.updates = scheduler.updates();
  result.status = scheduler.status();
  result.stop_state = scheduler.stop_state();
  return result;
}

// Annotates every pair of the plan in order and fits once.
template <JudgmentSource Source>
RunResult RunFull(const SchedulePlan& plan, Source&& source,
                  const std::string& annotator_id = "sim",
                  const FitOptions& fit_options = {}) {
  RunResult result;
  ComparisonTally tally(plan.model_ids);
  std::size_t position = 0;
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    for (const VideoPair& p : plan.groups[g].pairs) {
      ServedPair served{&p, position++, Phase::kStatic, 0};
      const Verdicts verdicts = source(p, served);
      detail::AppendRecords(result.records, annotator_id, annotator_id, p,
                            served, verdicts);
      const std::size_t a = *tally.IndexOf(p.video_a.model_id);
      const std::size_t b = *tally.IndexOf(p.video_b.model_id);
      for (MetricId m : kAllMetrics) {
        if (verdicts[MetricIndex(m)]) {
          tally.Add(m, a, b, *verdicts[MetricIndex(m)]);
        }
      }
      PairDisposition d;
      d.pair_id = p.pair_id;
      d.state = Disposition::kServed;
      d.judged = true;
      result.dispositions.push_back(std::move(d));
    }
  }
  result.judged_pairs = result.total_pairs = position;
  result.estimate = FitMle(tally, fit_options);
  result.updates = 1;
  result.status = SessionStatus::kComplete;
  return result;
}

struct DispositionSummary {
  std::size_t total = 0;
  std::size_t served = 0;
  std::size_t discarded = 0;
  std::size_t pending = 0;
  std::size_t static_pairs = 0;
  double mean_discard_probability = 0.0;  // over decided dynamic pairs
};

inline DispositionSummary Summarize(const std::vector<PairDisposition>& log) {
  DispositionSummary s;
  std::size_t decided = 0;
  for (const PairDisposition& d : log) {
    ++s.total;
    if (d.phase == Phase::kStatic) ++s.static_pairs;
    switch (d.state) {
      case Disposition::kServed: ++s.served; break;
      case Disposition::kDiscarded: ++s.discarded; break;
      case Disposition::kPending: ++s.pending; break;
    }
    if (d.phase == Phase::kDynamic && d.state != Disposition::kPending) {
      s.mean_discard_probability += d.probability;
      ++decided;
    }
  }
  if (decided > 0) s.mean_discard_probability /= static_cast<double>(decided);
  return s;
}

inline Json ToJson(const DispositionSummary& s) {
  return Json{{"total", s.total},
              {"served", s.served},
              {"discarded", s.discarded},
              {"pending", s.pending},
              {"static_pairs", s.static_pairs},
              {"mean_discard_probability", s.mean_discard_probability}};
}

struct SubsetRow {
  std::vector<std::string> models;
  std::size_t total_pairs = 0;
  double annotations = 0.0;  // mean judged pairs over replications
};

struct SubsetSweepReport {
  std::vector<SubsetRow> rows;
  std::map<std::size_t, double> mean_annotations;  // by subset size
  std::map<std::size_t, double> served_fraction;   // by subset size

  double GrowthRatio(std::size_t big, std::size_t small) const {
    return mean_annotations.at(big) / mean_annotations.at(small);
  }
};

// Runs run(subset) -> {judged, total} for every subset of the given sizes,
// in lexicographic order of model index.
inline SubsetSweepReport SubsetSweep(
    const std::vector<std::string>& models, const std::vector<int>& sizes,
    const std::function<std::pair<double, std::size_t>(
        const std::vector<std::string>&)>& run) {
  SubsetSweepReport report;
  std::map<std::size_t, std::pair<double, double>> sums;  // judged, total
  std::map<std::size_t, int> counts;
  for (int size : sizes) {
    if (size < 2 || size > static_cast<int>(models.size())) {
      throw ValidationError("subset size " + std::to_string(size) +
                            " out of range");
    }
    std::vector<bool> pick(models.size(), false);
    std::fill(pick.begin(), pick.begin() + size, true);
    do {
      std::vector<std::string> subset;
      for (std::size_t i = 0; i < models.size(); ++i) {
        if (pick[i]) subset.push_back(models[i]);
      }
      const auto [judged, total] = run(subset);
      report.rows.push_back({subset, total, judged});
      sums[size].first += judged;
      sums[size].second += static_cast<double>(total);
      ++counts[size];
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  for (const auto& [size, s] : sums) {
    report.mean_annotations[size] = s.first / counts[size];
    report.served_fraction[size] = s.first / s.second;
  }
  return report;
}

inline Json ToJson(const SubsetSweepReport& r) {
  Json rows = Json::array();
  for (const SubsetRow& row : r.rows) {
    rows.push_back({{"models", row.models},
                    {"total_pairs", row.total_pairs},
                    {"annotations", row.annotations}});
  }
  Json by_size = Json::object();
  for (const auto& [size, mean] : r.mean_annotations) {
    by_size[std::to_string(size)] = {
        {"mean_annotations", mean},
        {"served_fraction", r.served_fraction.at(size)}};
  }
  return Json{{"subsets", std::move(rows)}, {"by_size", std::move(by_size)}};
}

}  // namespace arena
