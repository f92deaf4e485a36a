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

// Shared vocabulary: metrics, prompts, videos, canonical video pairs, groups,
// judgments and the per-metric comparison tally.
//
// A pair is always stored in canonical orientation: video_a belongs to the
// lexicographically smaller model id. Outcomes are relative to that
// orientation. The pair id encodes the prompt and both model ids, so a
// judgment can be tallied without a pair lookup table.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "arena/error.hpp"
#include "arena/text_io.hpp"

namespace arena {

enum class MetricId {
  kVideoQuality,
  kTemporalQuality,
  kMotionQuality,
  kTextAlignment,
  kEthicalRobustness,
  kHumanPreference,
};

inline constexpr std::size_t kNumMetrics = 6;

inline constexpr std::array<MetricId, kNumMetrics> kAllMetrics = {
    MetricId::kVideoQuality,      MetricId::kTemporalQuality,
    MetricId::kMotionQuality,     MetricId::kTextAlignment,
    MetricId::kEthicalRobustness, MetricId::kHumanPreference,
};

enum class MetricKind { kObjective, kSubjective };

constexpr std::size_t MetricIndex(MetricId m) {
  return static_cast<std::size_t>(m);
}

constexpr MetricKind KindOf(MetricId m) {
  switch (m) {
    case MetricId::kEthicalRobustness:
    case MetricId::kHumanPreference:
      return MetricKind::kSubjective;
    default:
      return MetricKind::kObjective;
  }
}

constexpr std::string_view MetricName(MetricId m) {
  switch (m) {
    case MetricId::kVideoQuality: return "video_quality";
    case MetricId::kTemporalQuality: return "temporal_quality";
    case MetricId::kMotionQuality: return "motion_quality";
    case MetricId::kTextAlignment: return "text_alignment";
    case MetricId::kEthicalRobustness: return "ethical_robustness";
    case MetricId::kHumanPreference: return "human_preference";
  }
  return "unknown";
}

inline MetricId ParseMetric(std::string_view name) {
  for (MetricId m : kAllMetrics) {
    if (MetricName(m) == name) return m;
  }
  throw ValidationError("unknown metric '" + std::string(name) + "'");
}

struct Prompt {
  std::string id;
  std::string text;
  std::string category;
};

struct Video {
  std::string id;
  std::string prompt_id;
  std::string model_id;
  std::string uri;
  std::optional<double> feature_score;
};

// Separator inside pair ids; identifiers may not contain it.
inline constexpr char kPairIdSeparator = '|';

inline void ValidateIdentifier(std::string_view id, std::string_view what) {
  if (id.empty()) {
    throw ValidationError(std::string(what) + " id must be non-empty");
  }
  if (id.find(kPairIdSeparator) != std::string_view::npos) {
    throw ValidationError(std::string(what) + " id '" + std::string(id) +
                          "' contains reserved character '|'");
  }
}

inline std::string MakePairId(std::string_view prompt_id, std::string_view m1,
                              std::string_view m2) {
  if (m2 < m1) std::swap(m1, m2);
  std::string id(prompt_id);
  id += kPairIdSeparator;
  id += m1;
  id += kPairIdSeparator;
  id += m2;
  return id;
}

struct PairKey {
  std::string prompt_id;
  std::string model_a;
  std::string model_b;
};

inline PairKey ParsePairId(std::string_view pair_id) {
  const auto first = pair_id.find(kPairIdSeparator);
  const auto second = first == std::string_view::npos
                          ? std::string_view::npos
                          : pair_id.find(kPairIdSeparator, first + 1);
  if (second == std::string_view::npos ||
      pair_id.find(kPairIdSeparator, second + 1) != std::string_view::npos) {
    throw ValidationError("malformed pair id '" + std::string(pair_id) + "'");
  }
  PairKey key{std::string(pair_id.substr(0, first)),
              std::string(pair_id.substr(first + 1, second - first - 1)),
              std::string(pair_id.substr(second + 1))};
  if (key.prompt_id.empty() || key.model_a.empty() ||
      !(key.model_a < key.model_b)) {
    throw ValidationError("pair id '" + std::string(pair_id) +
                          "' is not in canonical form");
  }
  return key;
}

struct VideoPair {
  std::string pair_id;
  std::string prompt_id;
  Video video_a;
  Video video_b;
};

// Builds the canonical pair for two videos of the same prompt.
inline VideoPair MakeVideoPair(const Video& x, const Video& y) {
  if (x.prompt_id != y.prompt_id) {
    throw ValidationError("videos '" + x.id + "' and '" + y.id +
                          "' belong to different prompts");
  }
  if (x.model_id == y.model_id) {
    throw ValidationError("videos '" + x.id + "' and '" + y.id +
                          "' come from the same model");
  }
  const bool keep = x.model_id < y.model_id;
  VideoPair pair;
  pair.prompt_id = x.prompt_id;
  pair.video_a = keep ? x : y;
  pair.video_b = keep ? y : x;
  pair.pair_id = MakePairId(pair.prompt_id, pair.video_a.model_id,
                            pair.video_b.model_id);
  return pair;
}

struct Group {
  std::string prompt_id;
  std::vector<VideoPair> pairs;
  double group_score = 0.0;
};

// Groups videos by prompt and forms every unordered model pair per prompt.
// Groups come out ordered by prompt id; pairs by (model_a, model_b).
inline std::vector<Group> BuildGroups(const std::vector<Video>& videos) {
  std::map<std::string, std::vector<const Video*>> by_prompt;
  std::set<std::string> video_ids;
  std::set<std::pair<std::string, std::string>> prompt_models;
  for (const Video& v : videos) {
    ValidateIdentifier(v.id, "video");
    ValidateIdentifier(v.prompt_id, "prompt");
    ValidateIdentifier(v.model_id, "model");
    if (!video_ids.insert(v.id).second) {
      throw ValidationError("duplicate video id '" + v.id + "'");
    }
    if (!prompt_models.emplace(v.prompt_id, v.model_id).second) {
      throw ValidationError("prompt '" + v.prompt_id +
                            "' has more than one video for model '" +
                            v.model_id + "'");
    }
    by_prompt[v.prompt_id].push_back(&v);
  }
  std::vector<Group> groups;
  groups.reserve(by_prompt.size());
  for (auto& [prompt_id, members] : by_prompt) {
    std::sort(members.begin(), members.end(),
              [](const Video* a, const Video* b) {
                return a->model_id < b->model_id;
              });
    Group group;
    group.prompt_id = prompt_id;
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        group.pairs.push_back(MakeVideoPair(*members[i], *members[j]));
      }
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

enum class Outcome { kAWins, kBWins, kTie };

constexpr std::string_view OutcomeName(Outcome o) {
  switch (o) {
    case Outcome::kAWins: return "A_WINS";
    case Outcome::kBWins: return "B_WINS";
    case Outcome::kTie: return "TIE";
  }
  return "unknown";
}

inline Outcome ParseOutcome(std::string_view name) {
  if (name == "A_WINS") return Outcome::kAWins;
  if (name == "B_WINS") return Outcome::kBWins;
  if (name == "TIE") return Outcome::kTie;
  throw ValidationError("unknown outcome '" + std::string(name) + "'");
}

// Relabels an outcome for the swapped orientation (b, a).
constexpr Outcome Swapped(Outcome o) {
  switch (o) {
    case Outcome::kAWins: return Outcome::kBWins;
    case Outcome::kBWins: return Outcome::kAWins;
    case Outcome::kTie: return Outcome::kTie;
  }
  return o;
}

enum class Phase { kStatic, kDynamic };

constexpr std::string_view PhaseName(Phase p) {
  return p == Phase::kStatic ? "STATIC" : "DYNAMIC";
}

inline Phase ParsePhase(std::string_view name) {
  if (name == "STATIC") return Phase::kStatic;
  if (name == "DYNAMIC") return Phase::kDynamic;
  throw ValidationError("unknown phase '" + std::string(name) + "'");
}

struct JudgmentRecord {
  std::string annotator_id;
  std::string pair_id;
  MetricId metric = MetricId::kVideoQuality;
  Outcome outcome = Outcome::kTie;
  Phase phase = Phase::kStatic;
  int batch_index = 0;
  Timestamp timestamp{};
  std::string session_id;

  friend bool operator==(const JudgmentRecord&, const JudgmentRecord&) =
      default;
};

inline Json ToJson(const JudgmentRecord& r) {
  Json j;
  j["annotator_id"] = r.annotator_id;
  j["pair_id"] = r.pair_id;
  j["metric"] = MetricName(r.metric);
  j["outcome"] = OutcomeName(r.outcome);
  j["phase"] = PhaseName(r.phase);
  j["batch_index"] = r.batch_index;
  j["timestamp"] = FormatTimestamp(r.timestamp);
  j["session_id"] = r.session_id;
  return j;
}

inline JudgmentRecord JudgmentFromJson(const Json& j) {
  try {
    JudgmentRecord r;
    r.annotator_id = j.at("annotator_id").get<std::string>();
    r.pair_id = j.at("pair_id").get<std::string>();
    r.metric = ParseMetric(j.at("metric").get<std::string>());
    r.outcome = ParseOutcome(j.at("outcome").get<std::string>());
    r.phase = ParsePhase(j.at("phase").get<std::string>());
    r.batch_index = j.at("batch_index").get<int>();
    r.timestamp = ParseTimestamp(j.at("timestamp").get<std::string>());
    r.session_id = j.at("session_id").get<std::string>();
    if (r.batch_index < 0) {
      throw ValidationError("batch_index must be >= 0");
    }
    return r;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("invalid judgment record: ") + e.what());
  }
}

inline std::string WriteJudgmentsJsonl(
    const std::vector<JudgmentRecord>& records) {
  std::string out;
  for (const JudgmentRecord& r : records) {
    out += ToJson(r).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<JudgmentRecord> ReadJudgmentsJsonl(std::string_view text) {
  std::vector<JudgmentRecord> out;
  const std::vector<Json> lines = ParseJsonLines(text, "records");
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(JudgmentFromJson(lines[i]));
    } catch (const ValidationError& e) {
      throw ValidationError("record " + std::to_string(i + 1) + ": " +
                            e.what());
    }
  }
  return out;
}

// Win and tie counts of one metric. wins(i, j) counts i preferred over j.
class TallySlice {
 public:
  TallySlice() = default;
  explicit TallySlice(std::size_t num_models)
      : size_(num_models),
        wins_(num_models * num_models, 0),
        ties_(num_models * num_models, 0) {}

  std::size_t size() const { return size_; }
  std::int64_t wins(std::size_t i, std::size_t j) const {
    return wins_[i * size_ + j];
  }
  std::int64_t ties(std::size_t i, std::size_t j) const {
    return ties_[i * size_ + j];
  }

  void AddWin(std::size_t winner, std::size_t loser, std::int64_t count = 1) {
    CheckPair(winner, loser);
    wins_[winner * size_ + loser] += count;
  }
  void AddTie(std::size_t i, std::size_t j, std::int64_t count = 1) {
    CheckPair(i, j);
    ties_[i * size_ + j] += count;
    ties_[j * size_ + i] += count;
  }

  // Number of judgments: each tie is stored twice.
  std::int64_t Total() const {
    std::int64_t total = 0;
    for (std::size_t i = 0; i < size_; ++i) {
      for (std::size_t j = 0; j < size_; ++j) {
        total += wins(i, j);
        if (i < j) total += ties(i, j);
      }
    }
    return total;
  }

  std::int64_t Comparisons(std::size_t i, std::size_t j) const {
    return wins(i, j) + wins(j, i) + ties(i, j);
  }

  friend bool operator==(const TallySlice&, const TallySlice&) = default;

 private:
  void CheckPair(std::size_t i, std::size_t j) const {
    if (i >= size_ || j >= size_ || i == j) {
      throw std::out_of_range("invalid model index pair in tally");
    }
  }

  std::size_t size_ = 0;
  std::vector<std::int64_t> wins_;
  std::vector<std::int64_t> ties_;
};

class ComparisonTally {
 public:
  ComparisonTally() = default;
  explicit ComparisonTally(std::vector<std::string> model_ids)
      : model_ids_(std::move(model_ids)) {
    std::set<std::string> seen;
    for (const std::string& id : model_ids_) {
      ValidateIdentifier(id, "model");
      if (!seen.insert(id).second) {
        throw ValidationError("duplicate model id '" + id + "' in tally");
      }
    }
    slices_.fill(TallySlice(model_ids_.size()));
  }

  const std::vector<std::string>& model_ids() const { return model_ids_; }
  std::size_t num_models() const { return model_ids_.size(); }

  std::optional<std::size_t> IndexOf(std::string_view model_id) const {
    for (std::size_t i = 0; i < model_ids_.size(); ++i) {
      if (model_ids_[i] == model_id) return i;
    }
    return std::nullopt;
  }

  const TallySlice& slice(MetricId m) const { return slices_[MetricIndex(m)]; }
  TallySlice& slice(MetricId m) { return slices_[MetricIndex(m)]; }

  // Adds one outcome between models a and b, with the outcome relative to
  // the (a, b) orientation.
  void Add(MetricId m, std::size_t a, std::size_t b, Outcome outcome) {
    TallySlice& s = slice(m);
    switch (outcome) {
      case Outcome::kAWins: s.AddWin(a, b); break;
      case Outcome::kBWins: s.AddWin(b, a); break;
      case Outcome::kTie: s.AddTie(a, b); break;
    }
  }

  friend bool operator==(const ComparisonTally&,
                         const ComparisonTally&) = default;

 private:
  std::vector<std::string> model_ids_;
  std::array<TallySlice, kNumMetrics> slices_;
};

// Counts wins and ties per metric. Input order does not matter.
inline ComparisonTally TallyFromJudgments(
    const std::vector<JudgmentRecord>& records,
    const std::vector<std::string>& models) {
  ComparisonTally tally(models);
  for (std::size_t k = 0; k < records.size(); ++k) {
    const JudgmentRecord& r = records[k];
    const PairKey key = ParsePairId(r.pair_id);
    const auto a = tally.IndexOf(key.model_a);
    const auto b = tally.IndexOf(key.model_b);
    if (!a || !b) {
      throw ValidationError(
          "record " + std::to_string(k) + " (annotator '" + r.annotator_id +
          "', pair '" + r.pair_id + "') references unknown model '" +
          (a ? key.model_b : key.model_a) + "'");
    }
    tally.Add(r.metric, *a, *b, r.outcome);
  }
  return tally;
}

// Distinct model ids referenced by the records, sorted.
inline std::vector<std::string> ModelsInJudgments(
    const std::vector<JudgmentRecord>& records) {
  std::set<std::string> models;
  for (const JudgmentRecord& r : records) {
    const PairKey key = ParsePairId(r.pair_id);
    models.insert(key.model_a);
    models.insert(key.model_b);
  }
  return {models.begin(), models.end()};
}

// CSV with header metric,model_i,model_j,wins,ties and one row per metric
// and ordered model pair. The ties column is symmetric, so every tie shows
// up on both the (i, j) and the (j, i) row.
inline std::string WriteTallyCsv(const ComparisonTally& tally) {
  std::string out = "metric,model_i,model_j,wins,ties\n";
  const auto& ids = tally.model_ids();
  for (MetricId m : kAllMetrics) {
    const TallySlice& s = tally.slice(m);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = 0; j < ids.size(); ++j) {
        if (i == j) continue;
        out += std::string(MetricName(m)) + "," + CsvField(ids[i]) + "," +
               CsvField(ids[j]) + "," + std::to_string(s.wins(i, j)) + "," +
               std::to_string(s.ties(i, j)) + "\n";
      }
    }
  }
  return out;
}

// Model order follows first appearance in the file.
inline ComparisonTally ReadTallyCsv(std::string_view text) {
  struct Row {
    MetricId metric;
    std::string i, j;
    std::int64_t wins, ties;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::vector<std::string> models;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = Trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = SplitCsvLine(line);
    if (!header_seen) {
      header_seen = true;
      const std::vector<std::string> expected = {"metric", "model_i",
                                                 "model_j", "wins", "ties"};
      std::vector<std::string> got;
      for (const auto& f : fields) got.push_back(Trim(f));
      if (got != expected) {
        throw ValidationError(
            "tally CSV header must be metric,model_i,model_j,wins,ties");
      }
      continue;
    }
    if (fields.size() != 5) {
      throw ValidationError("tally CSV line " + std::to_string(line_no) +
                            ": expected 5 fields");
    }
    const std::string where = "tally CSV line " + std::to_string(line_no);
    Row row{ParseMetric(Trim(fields[0])), Trim(fields[1]), Trim(fields[2]),
            ParseInt(fields[3], where), ParseInt(fields[4], where), line_no};
    if (row.wins < 0 || row.ties < 0) {
      throw ValidationError(where + ": counts must be non-negative");
    }
    if (row.i == row.j) {
      throw ValidationError(where + ": model_i equals model_j");
    }
    for (const std::string* id : {&row.i, &row.j}) {
      if (std::find(models.begin(), models.end(), *id) == models.end()) {
        models.push_back(*id);
      }
    }
    rows.push_back(std::move(row));
  }
  ComparisonTally tally(models);
  std::map<std::tuple<int, std::size_t, std::size_t>, std::int64_t> ties;
  for (const Row& row : rows) {
    const std::size_t i = *tally.IndexOf(row.i);
    const std::size_t j = *tally.IndexOf(row.j);
    if (row.wins > 0) tally.slice(row.metric).AddWin(i, j, row.wins);
    ties[{static_cast<int>(row.metric), i, j}] += row.ties;
  }
  for (const auto& [key, count] : ties) {
    const auto [metric, i, j] = key;
    const auto mirror = ties.find({metric, j, i});
    const std::int64_t other = mirror == ties.end() ? count : mirror->second;
    if (other != count) {
      throw ValidationError("tally CSV: ties for (" + models[i] + ", " +
                            models[j] + ") are not symmetric");
    }
    if ((i < j || mirror == ties.end()) && count > 0) {
      tally.slice(static_cast<MetricId>(metric)).AddTie(i, j, count);
    }
  }
  return tally;
}

}  // namespace arena
