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

// Event-sourced annotation studies.
//
// A study lives in <data_dir>/<study_id>/events.jsonl, one event per line:
//
//   STUDY_CREATED       inputs (videos with feature scores, prompts, config)
//   SESSION_CREATED     annotator joins
//   JUDGMENT_RECORDED   one per metric, always six in a row
//   PAIR_SERVED, PAIR_DISCARDED, ESTIMATES_UPDATED, SESSION_STOPPED
//
// The first three kinds are inputs. Everything else is derived: after each
// input the session's scheduler is advanced to its next pair right away, so
// derived events are a pure function of the inputs before them. Replay
// re-derives them, checks the logged copies and appends any that a crash
// cut off. Derived events carry the timestamp of the input that caused them,
// which makes a recovered log byte-identical to an uninterrupted one.

#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arena/domain.hpp"
#include "arena/error.hpp"
#include "arena/estimation.hpp"
#include "arena/metrics_ingest.hpp"
#include "arena/random.hpp"
#include "arena/scheduler.hpp"
#include "arena/text_io.hpp"

namespace arena {

struct StudyInputs {
  std::vector<Video> videos;  // feature scores attached
  std::vector<Prompt> prompts;
  SchedulerConfig config;
  std::map<MetricId, std::string> instructions;  // optional per-metric text
};

inline Json ToJson(const StudyInputs& in) {
  Json videos = Json::array();
  for (const Video& v : in.videos) videos.push_back(ToJson(v));
  Json prompts = Json::array();
  for (const Prompt& p : in.prompts) prompts.push_back(ToJson(p));
  Json instructions = Json::object();
  for (const auto& [m, text] : in.instructions) {
    instructions[std::string(MetricName(m))] = text;
  }
  return Json{{"videos", videos},
              {"prompts", prompts},
              {"config", ToJson(in.config)},
              {"instructions", instructions}};
}

// Accepts the create-study body. "features" is optional and is either a
// map video_id -> S(v) or a raw automatic-metric table
// (video_id -> {metric: value}) that is normalized here.
inline StudyInputs StudyInputsFromJson(const Json& j) {
  if (!j.is_object()) throw ValidationError("study body must be an object");
  StudyInputs in;
  const Json& videos = j.contains("videos") ? j["videos"] : Json();
  if (!videos.is_array() || videos.empty()) {
    throw ValidationError("videos: expected a non-empty array");
  }
  for (std::size_t i = 0; i < videos.size(); ++i) {
    try {
      in.videos.push_back(VideoFromJson(videos[i]));
    } catch (const ValidationError& e) {
      throw ValidationError("videos[" + std::to_string(i) + "]: " + e.what());
    }
  }
  if (j.contains("prompts")) {
    if (!j["prompts"].is_array()) {
      throw ValidationError("prompts: expected an array");
    }
    for (std::size_t i = 0; i < j["prompts"].size(); ++i) {
      try {
        in.prompts.push_back(PromptFromJson(j["prompts"][i]));
      } catch (const ValidationError& e) {
        throw ValidationError("prompts[" + std::to_string(i) + "]: " +
                              e.what());
      }
    }
  }
  if (j.contains("features") && !j["features"].is_null()) {
    const Json& f = j["features"];
    if (!f.is_object()) throw ValidationError("features: expected an object");
    std::map<std::string, double> scores;
    const bool raw = !f.empty() && f.begin()->is_object();
    try {
      scores = raw ? NormalizeAndSum(AutoMetricTableFromJson(f))
                   : FeatureScoresFromJson(f);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("features: ") + e.what());
    }
    for (Video& v : in.videos) {
      if (const auto it = scores.find(v.id); it != scores.end()) {
        v.feature_score = it->second;
      }
    }
  }
  if (j.contains("config") && !j["config"].is_null()) {
    try {
      in.config = SchedulerConfigFromJson(j["config"]);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("config: ") + e.what());
    }
  }
  if (j.contains("instructions")) {
    if (!j["instructions"].is_object()) {
      throw ValidationError("instructions: expected an object");
    }
    for (const auto& [name, text] : j["instructions"].items()) {
      if (!text.is_string()) {
        throw ValidationError("instructions." + name + ": expected a string");
      }
      in.instructions[ParseMetric(name)] = text.get<std::string>();
    }
  }
  if (!in.prompts.empty()) {
    std::set<std::string> known;
    for (const Prompt& p : in.prompts) {
      ValidateIdentifier(p.id, "prompt");
      if (!known.insert(p.id).second) {
        throw ValidationError("prompts: duplicate id '" + p.id + "'");
      }
    }
    for (const Video& v : in.videos) {
      if (!known.count(v.prompt_id)) {
        throw ValidationError("videos: '" + v.id + "' refers to unknown prompt '" +
                              v.prompt_id + "'");
      }
    }
  }
  return in;
}

// Maps a presented verdict to the canonical pair orientation. "left" and
// "right" refer to the screen; A_WINS / B_WINS / TIE pass through.
inline Outcome OutcomeFromPresentation(std::string_view verdict,
                                       bool swapped) {
  if (verdict == "left") return swapped ? Outcome::kBWins : Outcome::kAWins;
  if (verdict == "right") return swapped ? Outcome::kAWins : Outcome::kBWins;
  if (verdict == "tie") return Outcome::kTie;
  return ParseOutcome(verdict);
}

// Parses {"metric": "left"|"right"|"tie"|canonical, ...}; all six metrics
// are required.
inline std::array<Outcome, kNumMetrics> ParseVerdicts(const Json& j,
                                                      bool swapped) {
  if (!j.is_object()) throw ValidationError("verdicts: expected an object");
  std::array<std::optional<Outcome>, kNumMetrics> got;
  for (const auto& [name, value] : j.items()) {
    const MetricId m = ParseMetric(name);
    if (!value.is_string()) {
      throw ValidationError("verdicts." + name + ": expected a string");
    }
    got[MetricIndex(m)] =
        OutcomeFromPresentation(value.get<std::string>(), swapped);
  }
  std::string missing;
  for (MetricId m : kAllMetrics) {
    if (!got[MetricIndex(m)]) {
      missing += (missing.empty() ? "" : ", ") + std::string(MetricName(m));
    }
  }
  if (!missing.empty()) {
    throw ValidationError("verdicts missing for metrics: " + missing);
  }
  std::array<Outcome, kNumMetrics> out{};
  for (MetricId m : kAllMetrics) out[MetricIndex(m)] = *got[MetricIndex(m)];
  return out;
}

class StudySession {
 public:
  StudySession(std::string session_id, std::string annotator_id,
               std::shared_ptr<const SchedulePlan> plan,
               std::uint64_t study_seed, Timestamp created)
      : session_id_(std::move(session_id)),
        annotator_id_(std::move(annotator_id)),
        scheduler_(std::move(plan),
                   DeriveSeed(DeriveSeed(study_seed, "discard"), session_id_)),
        orientation_(
            DeriveSeed(DeriveSeed(study_seed, "orientation"), session_id_)),
        created_(created),
        updated_(created) {}

  const std::string& session_id() const { return session_id_; }
  const std::string& annotator_id() const { return annotator_id_; }
  const DynamicScheduler& scheduler() const { return scheduler_; }
  SessionStatus status() const { return scheduler_.status(); }
  bool swapped() const { return swapped_; }
  Timestamp created() const { return created_; }
  Timestamp updated() const { return updated_; }

  // Pair awaiting judgment, if any.
  const VideoPair* current() const { return current_; }

 private:
  friend class StudyState;

  std::string session_id_;
  std::string annotator_id_;
  DynamicScheduler scheduler_;
  RandomStream orientation_;
  const VideoPair* current_ = nullptr;
  bool swapped_ = false;
  Timestamp created_;
  Timestamp updated_;
};

struct RecordAck {
  std::size_t records_appended = 0;
  bool updated = false;           // an estimates update ran
  bool rankings_changed = false;  // the session's rankings moved
  SessionStatus status = SessionStatus::kActive;
  std::optional<Rankings> rankings;
};

// In-memory study state. Every mutation returns the events it produced,
// inputs first, without sequence numbers.
class StudyState {
 public:
  StudyState(std::string study_id, StudyInputs inputs, Timestamp created)
      : study_id_(std::move(study_id)),
        inputs_(std::move(inputs)),
        created_(created) {
    ValidateIdentifier(study_id_, "study");
    plan_ = std::make_shared<const SchedulePlan>(
        BuildPlan(inputs_.videos, inputs_.config));
    for (const Prompt& p : inputs_.prompts) prompts_[p.id] = p;
    for (const Group& g : plan_->groups) {
      for (const VideoPair& p : g.pairs) pairs_[p.pair_id] = &p;
    }
    Publish(Json{{"study_id", study_id_},
                 {"status", "static_phase_in_progress"},
                 {"annotation_count", 0},
                 {"judgment_records", 0},
                 {"sessions", 0}});
  }

  StudyState(const StudyState&) = delete;
  StudyState& operator=(const StudyState&) = delete;

  Json CreatedEvent() const {
    return Json{{"type", "STUDY_CREATED"},
                {"ts", FormatTimestamp(created_)},
                {"study_id", study_id_},
                {"inputs", ToJson(inputs_)}};
  }

  std::vector<Json> CreateSession(const std::string& annotator_id,
                                  Timestamp now) {
    ValidateIdentifier(annotator_id, "annotator");
    if (const auto it = by_annotator_.find(annotator_id);
        it != by_annotator_.end()) {
      throw ConflictError("annotator '" + annotator_id +
                          "' already has session '" + it->second + "'");
    }
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "-s%04zu", sessions_.size() + 1);
    const std::string id = study_id_ + suffix;
    auto [it, inserted] = sessions_.try_emplace(
        id, id, annotator_id, plan_, inputs_.config.seed, now);
    by_annotator_[annotator_id] = id;
    std::vector<Json> events;
    events.push_back(Json{{"type", "SESSION_CREATED"},
                          {"ts", FormatTimestamp(now)},
                          {"session_id", id},
                          {"annotator_id", annotator_id}});
    RefreshSnapshot(Pump(it->second, now, events));
    return events;
  }

  std::vector<Json> RecordJudgment(
      const std::string& session_id, const std::string& pair_id,
      const std::array<Outcome, kNumMetrics>& verdicts, Timestamp now,
      RecordAck* ack = nullptr) {
    StudySession& s = Find(session_id);
    if (s.status() != SessionStatus::kActive) {
      throw ConflictError("session '" + session_id + "' is " +
                          std::string(StatusName(s.status())));
    }
    if (judged_.count({s.annotator_id(), pair_id})) {
      throw ConflictError("pair '" + pair_id + "' was already judged by '" +
                          s.annotator_id() + "'");
    }
    const VideoPair* pair = s.current();
    if (!pair || pair->pair_id != pair_id) {
      throw ConflictError("pair '" + pair_id +
                          "' is not the pair served to session '" +
                          session_id + "'");
    }
    const PairDisposition& d =
        s.scheduler_.dispositions()[s.scheduler_.cursor()];
    std::vector<Json> events;
    Verdicts v;
    for (MetricId m : kAllMetrics) {
      JudgmentRecord r;
      r.annotator_id = s.annotator_id();
      r.pair_id = pair_id;
      r.metric = m;
      r.outcome = verdicts[MetricIndex(m)];
      r.phase = d.phase;
      r.batch_index = d.batch_index;
      r.timestamp = now;
      r.session_id = session_id;
      v[MetricIndex(m)] = r.outcome;
      events.push_back(Json{{"type", "JUDGMENT_RECORDED"},
                            {"ts", FormatTimestamp(now)},
                            {"session_id", session_id},
                            {"record", ToJson(r)}});
      records_.push_back(std::move(r));
    }
    judged_.insert({s.annotator_id(), pair_id});
    const Rankings before = s.scheduler_.stop_state().last_rankings;
    s.scheduler_.Record(pair_id, v);
    const bool updated = Pump(s, now, events);
    s.updated_ = now;
    RefreshSnapshot(updated);
    if (ack) {
      ack->records_appended = kNumMetrics;
      ack->updated = updated;
      ack->rankings_changed =
          s.scheduler_.stop_state().last_rankings != before;
      ack->status = s.status();
      if (s.scheduler_.estimate()) {
        ack->rankings = s.scheduler_.stop_state().last_rankings;
      }
    }
    return events;
  }

  // Payload for GET next. Read-only; the pair and its orientation were
  // fixed when it was served.
  Json NextPayload(const std::string& session_id) const {
    const StudySession& s = session(session_id);
    const DynamicScheduler& sch = s.scheduler();
    Json progress{{"judged_pairs", sch.judged_pairs()},
                  {"discarded_pairs", sch.discarded_pairs()},
                  {"position", sch.cursor()},
                  {"total_pairs", sch.total_pairs()},
                  {"fraction", sch.total_pairs() == 0
                                   ? 1.0
                                   : static_cast<double>(sch.cursor()) /
                                         static_cast<double>(sch.total_pairs())}};
    Json out{{"session_id", session_id},
             {"status", StatusName(s.status())},
             {"progress", progress}};
    const VideoPair* pair = s.current();
    if (s.status() != SessionStatus::kActive || !pair) return out;
    const PairDisposition& d = sch.dispositions()[sch.cursor()];
    const Video& left = s.swapped() ? pair->video_b : pair->video_a;
    const Video& right = s.swapped() ? pair->video_a : pair->video_b;
    Json prompt{{"id", pair->prompt_id}, {"text", ""}, {"category", ""}};
    if (const auto it = prompts_.find(pair->prompt_id); it != prompts_.end()) {
      prompt = ToJson(it->second);
    }
    Json metrics = Json::array();
    for (MetricId m : kAllMetrics) {
      const bool objective = KindOf(m) == MetricKind::kObjective;
      const auto it = inputs_.instructions.find(m);
      metrics.push_back(Json{
          {"metric", MetricName(m)},
          {"kind", objective ? "objective" : "subjective"},
          {"guidance", objective ? "follow reference perspectives strictly"
                                 : "personal judgment allowed"},
          {"instruction",
           it == inputs_.instructions.end() ? "" : it->second}});
    }
    out["pair_id"] = pair->pair_id;
    out["prompt"] = prompt;
    out["left"] = Json{{"video_id", left.id}, {"uri", left.uri}};
    out["right"] = Json{{"video_id", right.id}, {"uri", right.uri}};
    out["orientation"] = s.swapped() ? "B_LEFT" : "A_LEFT";
    out["phase"] = PhaseName(d.phase);
    out["batch_index"] = d.batch_index;
    out["metrics"] = metrics;
    out["verdict_values"] = Json::array({"left", "tie", "right"});
    return out;
  }

  const std::string& study_id() const { return study_id_; }
  const StudyInputs& inputs() const { return inputs_; }
  const SchedulePlan& plan() const { return *plan_; }
  std::shared_ptr<const SchedulePlan> shared_plan() const { return plan_; }
  const std::vector<JudgmentRecord>& records() const { return records_; }
  const std::map<std::string, StudySession>& sessions() const {
    return sessions_;
  }

  const StudySession& session(const std::string& session_id) const {
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
      throw NotFoundError("unknown session '" + session_id + "'");
    }
    return it->second;
  }

  // Pooled rankings over all sessions. Safe to call while another thread
  // mutates the state.
  std::shared_ptr<const Json> RankingsSnapshot() const {
    std::lock_guard lock(snapshot_mu_);
    return snapshot_;
  }

 private:
  StudySession& Find(const std::string& session_id) {
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
      throw NotFoundError("unknown session '" + session_id + "'");
    }
    return it->second;
  }

  // Advances the session to its next pair and converts scheduler events.
  // Returns true when a successful estimates update happened.
  bool Pump(StudySession& s, Timestamp now, std::vector<Json>& out) {
    const auto served = s.scheduler_.Next();
    s.current_ = served ? served->pair : nullptr;
    bool updated = false;
    for (const SchedulerEvent& ev : s.scheduler_.TakeEvents()) {
      Json j = ToJson(ev);
      j["ts"] = FormatTimestamp(now);
      j["session_id"] = s.session_id();
      if (const auto* served = std::get_if<PairServedEvent>(&ev)) {
        s.swapped_ = s.orientation_.Uniform() < 0.5;
        const VideoPair& p = *pairs_.at(served->pair_id);
        j["orientation"] = s.swapped_ ? "B_LEFT" : "A_LEFT";
        j["left_video_id"] = s.swapped_ ? p.video_b.id : p.video_a.id;
        j["right_video_id"] = s.swapped_ ? p.video_a.id : p.video_b.id;
      } else if (const auto* up = std::get_if<EstimatesUpdatedEvent>(&ev)) {
        if (!up->fallback) {
          updated = true;
          estimated_ = true;
        }
      }
      out.push_back(std::move(j));
    }
    return updated;
  }

  // Counts refresh on every write; the pooled fit only when some session
  // just ran an estimates update.
  void RefreshSnapshot(bool refit) {
    std::size_t judged_pairs = 0;
    for (const auto& [id, s] : sessions_) {
      judged_pairs += s.scheduler().judged_pairs();
    }
    Json snap = *RankingsSnapshot();
    snap["annotation_count"] = judged_pairs;
    snap["judgment_records"] = records_.size();
    snap["sessions"] = sessions_.size();
    if (!estimated_ || !refit) {
      Publish(std::move(snap));
      return;
    }
    const ComparisonTally tally = TallyFromJudgments(records_, plan_->model_ids);
    StrengthEstimate est;
    try {
      est = FitMle(tally);
    } catch (const DisconnectedGraphError&) {
      FitOptions smooth;
      smooth.smoothing = true;
      est = FitMle(tally, smooth);
    }
    std::map<MetricId, std::size_t> counts;
    for (const JudgmentRecord& r : records_) ++counts[r.metric];
    Json metrics = Json::object();
    for (const auto& [m, e] : est.metrics) {
      Json strengths = Json::object();
      for (std::size_t i = 0; i < est.model_ids.size(); ++i) {
        strengths[est.model_ids[i]] = e.strengths[i];
      }
      metrics[std::string(MetricName(m))] =
          Json{{"ranking", e.ranking},
               {"strengths", strengths},
               {"theta", e.theta},
               {"smoothed", e.smoothed},
               {"annotation_count", counts[m]}};
    }
    snap["status"] = "ok";
    snap["metrics"] = metrics;
    Publish(std::move(snap));
  }

  void Publish(Json snap) {
    auto next = std::make_shared<const Json>(std::move(snap));
    std::lock_guard lock(snapshot_mu_);
    snapshot_ = std::move(next);
  }

  std::string study_id_;
  StudyInputs inputs_;
  Timestamp created_;
  std::shared_ptr<const SchedulePlan> plan_;
  std::map<std::string, Prompt> prompts_;
  std::map<std::string, const VideoPair*> pairs_;
  std::map<std::string, StudySession> sessions_;
  std::map<std::string, std::string> by_annotator_;
  std::set<std::pair<std::string, std::string>> judged_;
  std::vector<JudgmentRecord> records_;
  bool estimated_ = false;
  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const Json> snapshot_;
};

struct ReplayResult {
  std::unique_ptr<StudyState> state;
  std::vector<Json> missing;     // derived events cut off by a crash
  std::size_t valid_bytes = 0;   // length of the accepted prefix
  long long last_seq = 0;        // of the accepted prefix
  std::size_t dropped_events = 0;
  bool torn_tail = false;
};

namespace detail {

inline bool SameEvent(const Json& logged, const Json& expected) {
  Json copy = logged;
  copy.erase("seq");
  return copy == expected;
}

}  // namespace detail

// Rebuilds a study from log text. A torn last line and an incomplete
// trailing judgment group are dropped; everything else that fails to
// replay raises CorruptLogError.
inline ReplayResult ReplayLog(std::string_view text) {
  struct Line {
    Json event;
    std::size_t end;
  };
  ReplayResult result;
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      result.torn_tail = true;
      break;
    }
    const std::string_view raw = text.substr(pos, nl - pos);
    Json event = Json::parse(raw, nullptr, false);
    if (event.is_discarded() || !event.is_object()) {
      // A torn line can only be the last one.
      if (nl + 1 < text.size()) {
        throw CorruptLogError(static_cast<long long>(lines.size()),
                              "unparseable line");
      }
      result.torn_tail = true;
      break;
    }
    lines.push_back({std::move(event), nl + 1});
    pos = nl + 1;
  }
  auto seq_of = [&](std::size_t i) { return static_cast<long long>(i + 1); };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const Json& e = lines[i].event;
    if (!e.contains("seq") || !e["seq"].is_number_integer() ||
        e["seq"].get<long long>() != seq_of(i)) {
      throw CorruptLogError(seq_of(i) - 1, "sequence number out of order");
    }
    if (!e.contains("type") || !e["type"].is_string()) {
      throw CorruptLogError(seq_of(i) - 1, "event without type");
    }
  }
  if (lines.empty()) throw CorruptLogError(0, "no STUDY_CREATED event");
  try {
    const Json& first = lines[0].event;
    if (first["type"] != "STUDY_CREATED") {
      throw CorruptLogError(0, "first event is not STUDY_CREATED");
    }
    result.state = std::make_unique<StudyState>(
        first.at("study_id").get<std::string>(),
        StudyInputsFromJson(first.at("inputs")),
        ParseTimestamp(first.at("ts").get<std::string>()));
    if (!detail::SameEvent(first, result.state->CreatedEvent())) {
      throw CorruptLogError(0, "STUDY_CREATED does not round-trip");
    }
  } catch (const CorruptLogError&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptLogError(0, e.what());
  }
  StudyState& state = *result.state;
  std::size_t accepted = 1;
  std::size_t i = 1;
  while (i < lines.size()) {
    const Json& e = lines[i].event;
    const std::string type = e["type"].get<std::string>();
    std::vector<Json> expected;
    try {
      const Timestamp ts = ParseTimestamp(e.at("ts").get<std::string>());
      if (type == "SESSION_CREATED") {
        expected =
            state.CreateSession(e.at("annotator_id").get<std::string>(), ts);
      } else if (type == "JUDGMENT_RECORDED") {
        if (i + kNumMetrics > lines.size()) {
          bool all_judgments = true;
          for (std::size_t k = i; k < lines.size(); ++k) {
            all_judgments &= lines[k].event["type"] == "JUDGMENT_RECORDED";
          }
          if (!all_judgments) {
            throw CorruptLogError(seq_of(i) - 1, "short judgment group");
          }
          result.dropped_events = lines.size() - i;
          break;
        }
        const std::string session_id = e.at("session_id").get<std::string>();
        std::array<std::optional<Outcome>, kNumMetrics> got;
        std::string pair_id;
        for (std::size_t k = 0; k < kNumMetrics; ++k) {
          const Json& g = lines[i + k].event;
          if (g["type"] != "JUDGMENT_RECORDED") {
            throw CorruptLogError(seq_of(i) - 1, "short judgment group");
          }
          const JudgmentRecord r = JudgmentFromJson(g.at("record"));
          if (k == 0) pair_id = r.pair_id;
          if (r.pair_id != pair_id || got[MetricIndex(r.metric)]) {
            throw CorruptLogError(seq_of(i) - 1, "malformed judgment group");
          }
          got[MetricIndex(r.metric)] = r.outcome;
        }
        std::array<Outcome, kNumMetrics> verdicts{};
        for (std::size_t k = 0; k < kNumMetrics; ++k) verdicts[k] = *got[k];
        expected = state.RecordJudgment(session_id, pair_id, verdicts, ts);
      } else {
        throw CorruptLogError(seq_of(i) - 1,
                              "unexpected " + type + " event");
      }
    } catch (const CorruptLogError&) {
      throw;
    } catch (const std::exception& ex) {
      throw CorruptLogError(seq_of(i) - 1, ex.what());
    }
    std::size_t k = 0;
    for (; k < expected.size() && i + k < lines.size(); ++k) {
      if (!detail::SameEvent(lines[i + k].event, expected[k])) {
        throw CorruptLogError(seq_of(i + k) - 1,
                              "event does not match its replay");
      }
    }
    i += k;
    accepted = i;
    if (k < expected.size()) {
      result.missing.assign(expected.begin() + static_cast<long>(k),
                            expected.end());
      break;
    }
  }
  result.valid_bytes = lines[accepted - 1].end;
  result.last_seq = static_cast<long long>(accepted);
  return result;
}

// Append-only JSONL writer that assigns sequence numbers.
class EventLog {
 public:
  EventLog(std::filesystem::path path, long long last_seq)
      : path_(std::move(path)), last_seq_(last_seq) {
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open " + path_.string());
  }

  void Append(std::vector<Json> events) {
    std::string chunk;
    for (Json& e : events) {
      e["seq"] = ++last_seq_;
      chunk += e.dump();
      chunk += '\n';
    }
    out_ << chunk;
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_.string());
  }

  long long last_seq() const { return last_seq_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  long long last_seq_;
  std::ofstream out_;
};

// A study bound to its log file. Not thread-safe; callers serialize
// mutations (RankingsSnapshot() on the state may be read concurrently).
class Study {
 public:
  static constexpr std::string_view kLogName = "events.jsonl";

  static std::unique_ptr<Study> Create(const std::filesystem::path& data_dir,
                                       const std::string& study_id,
                                       StudyInputs inputs, Timestamp now) {
    auto state =
        std::make_unique<StudyState>(study_id, std::move(inputs), now);
    const auto dir = data_dir / study_id;
    std::error_code ec;
    if (std::filesystem::exists(dir / kLogName, ec)) {
      throw ConflictError("study '" + study_id + "' already exists");
    }
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    auto study = std::unique_ptr<Study>(new Study(
        std::move(state), std::make_unique<EventLog>(dir / kLogName, 0)));
    study->log_->Append({study->state_->CreatedEvent()});
    return study;
  }

  // Loads a study, repairing a crash-truncated tail.
  static std::unique_ptr<Study> Open(const std::filesystem::path& study_dir) {
    const auto path = study_dir / kLogName;
    const std::string text = ReadFile(path);
    ReplayResult r = ReplayLog(text);
    if (r.valid_bytes < text.size()) {
      std::error_code ec;
      std::filesystem::resize_file(path, r.valid_bytes, ec);
      if (ec) throw IoError("cannot truncate " + path.string());
    }
    auto study = std::unique_ptr<Study>(new Study(
        std::move(r.state), std::make_unique<EventLog>(path, r.last_seq)));
    study->repaired_ = r.valid_bytes < text.size() || !r.missing.empty();
    if (!r.missing.empty()) study->log_->Append(std::move(r.missing));
    return study;
  }

  std::string CreateSession(const std::string& annotator_id, Timestamp now) {
    std::vector<Json> events = state_->CreateSession(annotator_id, now);
    const std::string id = events.front()["session_id"].get<std::string>();
    log_->Append(std::move(events));
    return id;
  }

  RecordAck RecordJudgment(const std::string& session_id,
                           const std::string& pair_id,
                           const std::array<Outcome, kNumMetrics>& verdicts,
                           Timestamp now) {
    RecordAck ack;
    log_->Append(
        state_->RecordJudgment(session_id, pair_id, verdicts, now, &ack));
    return ack;
  }

  const StudyState& state() const { return *state_; }
  const std::filesystem::path& log_path() const { return log_->path(); }
  long long last_seq() const { return log_->last_seq(); }
  bool repaired() const { return repaired_; }
  std::string Export() const { return ReadFile(log_->path()); }

 private:
  Study(std::unique_ptr<StudyState> state, std::unique_ptr<EventLog> log)
      : state_(std::move(state)), log_(std::move(log)) {}

  std::unique_ptr<StudyState> state_;
  std::unique_ptr<EventLog> log_;
  bool repaired_ = false;
};

// Fresh study id derived from the inputs and creation time.
inline std::string MakeStudyId(const StudyInputs& inputs, Timestamp now,
                               std::uint64_t attempt = 0) {
  const std::uint64_t h = DeriveSeed(
      Fnv1a(ToJson(inputs).dump() + FormatTimestamp(now)), attempt);
  char buf[24];
  std::snprintf(buf, sizeof buf, "st%012llx",
                static_cast<unsigned long long>(h & 0xffffffffffffULL));
  return buf;
}

}  // namespace arena
