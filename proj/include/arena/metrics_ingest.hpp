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

// Precomputed automatic-metric scores and the per-video feature score.
//
// Each metric column is min-max normalized over every video in the table
// and the normalized columns are summed. A constant column contributes 0.5
// to every video.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arena/domain.hpp"
#include "arena/text_io.hpp"

namespace arena {

inline const std::vector<std::string>& DefaultAutoMetricNames() {
  static const std::vector<std::string> names = {
      "subject_consistency", "temporal_flickering", "motion_smoothness",
      "dynamic_degree",      "aesthetic_quality",   "imaging_quality",
      "overall_consistency"};
  return names;
}

struct AutoMetricTable {
  std::vector<std::string> metric_names;
  // video id -> one entry per metric; nullopt marks a missing score.
  std::map<std::string, std::vector<std::optional<double>>> scores;

  std::vector<std::string> IncompleteVideos() const {
    std::vector<std::string> out;
    for (const auto& [video, row] : scores) {
      if (std::any_of(row.begin(), row.end(),
                      [](const auto& v) { return !v.has_value(); })) {
        out.push_back(video);
      }
    }
    return out;
  }

  friend bool operator==(const AutoMetricTable&,
                         const AutoMetricTable&) = default;
};

// CSV: header video_id,<metric_1>,...; an empty cell is a missing score.
inline AutoMetricTable ReadAutoMetricCsv(std::string_view text) {
  AutoMetricTable table;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = Trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    auto fields = SplitCsvLine(line);
    for (auto& f : fields) f = Trim(f);
    if (header) {
      if (fields.size() < 2 || fields[0] != "video_id") {
        throw ValidationError(
            "scores CSV header must be video_id,<metric_1>,...");
      }
      table.metric_names.assign(fields.begin() + 1, fields.end());
      header = false;
      continue;
    }
    if (fields.size() != table.metric_names.size() + 1) {
      throw ValidationError("scores CSV line " + std::to_string(line_no) +
                            ": expected " +
                            std::to_string(table.metric_names.size() + 1) +
                            " fields");
    }
    const std::string& video = fields[0];
    if (table.scores.count(video)) {
      throw ValidationError("scores CSV: duplicate video '" + video + "'");
    }
    std::vector<std::optional<double>> row;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      if (fields[k].empty()) {
        row.emplace_back();
      } else {
        row.emplace_back(ParseDouble(
            fields[k], "video '" + video + "' metric '" +
                           table.metric_names[k - 1] + "'"));
      }
    }
    table.scores.emplace(video, std::move(row));
  }
  if (header) throw ValidationError("scores CSV is empty");
  return table;
}

// JSON: {"<video_id>": {"<metric>": value, ...}, ...}. Metric columns are
// the union of keys, in sorted order; absent keys or nulls are missing.
inline AutoMetricTable AutoMetricTableFromJson(const Json& j) {
  if (!j.is_object()) {
    throw ValidationError("scores JSON must map video id to metric scores");
  }
  AutoMetricTable table;
  std::map<std::string, int> columns;
  for (const auto& [video, row] : j.items()) {
    if (!row.is_object()) {
      throw ValidationError("scores JSON: entry for '" + video +
                            "' must be an object");
    }
    for (const auto& [metric, value] : row.items()) columns.emplace(metric, 0);
  }
  for (const auto& [metric, unused] : columns) {
    table.metric_names.push_back(metric);
  }
  for (const auto& [video, row] : j.items()) {
    std::vector<std::optional<double>> values;
    for (const std::string& metric : table.metric_names) {
      if (!row.contains(metric) || row[metric].is_null()) {
        values.emplace_back();
      } else if (row[metric].is_number()) {
        values.emplace_back(row[metric].get<double>());
      } else if (row[metric].is_string()) {
        values.emplace_back(ParseDouble(row[metric].get<std::string>(),
                                        "video '" + video + "' metric '" +
                                            metric + "'"));
      } else {
        throw ValidationError("scores JSON: non-numeric value for video '" +
                              video + "' metric '" + metric + "'");
      }
    }
    table.scores.emplace(video, std::move(values));
  }
  return table;
}

// Accepts either format; JSON is recognized by a leading '{'.
inline AutoMetricTable ParseAutoMetricTable(std::string_view text) {
  const std::string trimmed = Trim(text.substr(0, 64));
  if (!trimmed.empty() && trimmed.front() == '{') {
    return AutoMetricTableFromJson(ParseJson(text, "scores"));
  }
  return ReadAutoMetricCsv(text);
}

inline std::map<std::string, double> NormalizeAndSum(
    const AutoMetricTable& table, bool allow_partial = false) {
  if (table.scores.size() < 2) {
    throw ValidationError("feature scores need at least two videos");
  }
  const std::size_t num_metrics = table.metric_names.size();
  for (const auto& [video, row] : table.scores) {
    if (row.size() != num_metrics) {
      throw ValidationError("video '" + video + "' has " +
                            std::to_string(row.size()) + " scores, expected " +
                            std::to_string(num_metrics));
    }
    for (std::size_t k = 0; k < num_metrics; ++k) {
      if (row[k] && !std::isfinite(*row[k])) {
        throw ValidationError("non-finite score for video '" + video +
                              "' metric '" + table.metric_names[k] + "'");
      }
    }
  }
  if (!allow_partial) {
    const auto incomplete = table.IncompleteVideos();
    if (!incomplete.empty()) {
      std::string names;
      for (const auto& v : incomplete) names += (names.empty() ? "" : ", ") + v;
      throw ValidationError("incomplete metric vectors for: " + names);
    }
  }

  std::map<std::string, double> feature;
  for (const auto& [video, row] : table.scores) feature[video] = 0.0;
  for (std::size_t k = 0; k < num_metrics; ++k) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& [video, row] : table.scores) {
      if (!row[k]) continue;
      lo = std::min(lo, *row[k]);
      hi = std::max(hi, *row[k]);
    }
    for (const auto& [video, row] : table.scores) {
      double normalized = 0.5;
      if (row[k] && hi > lo) normalized = (*row[k] - lo) / (hi - lo);
      feature[video] += normalized;
    }
  }
  return feature;
}

inline Json FeatureScoresToJson(const std::map<std::string, double>& scores) {
  Json j = Json::object();
  for (const auto& [video, s] : scores) j[video] = s;
  return j;
}

inline std::map<std::string, double> FeatureScoresFromJson(const Json& j) {
  if (!j.is_object()) {
    throw ValidationError("feature scores must be a JSON object");
  }
  std::map<std::string, double> out;
  for (const auto& [video, value] : j.items()) {
    if (!value.is_number()) {
      throw ValidationError("feature score for '" + video +
                            "' is not a number");
    }
    out[video] = value.get<double>();
  }
  return out;
}

// Videos JSONL: one {"id", "prompt_id", "model_id", "uri"} object per line,
// optionally with "feature_score".
inline Json ToJson(const Video& v) {
  Json j{{"id", v.id},
         {"prompt_id", v.prompt_id},
         {"model_id", v.model_id},
         {"uri", v.uri}};
  if (v.feature_score) j["feature_score"] = *v.feature_score;
  return j;
}

inline Video VideoFromJson(const Json& j) {
  try {
    Video v;
    v.id = j.at("id").get<std::string>();
    v.prompt_id = j.at("prompt_id").get<std::string>();
    v.model_id = j.at("model_id").get<std::string>();
    v.uri = j.value("uri", "");
    if (j.contains("feature_score") && !j["feature_score"].is_null()) {
      v.feature_score = j["feature_score"].get<double>();
    }
    return v;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("invalid video record: ") + e.what());
  }
}

inline std::vector<Video> ReadVideosJsonl(std::string_view text) {
  std::vector<Video> videos;
  for (const Json& j : ParseJsonLines(text, "videos")) {
    videos.push_back(VideoFromJson(j));
  }
  return videos;
}

inline Json ToJson(const Prompt& p) {
  return Json{{"id", p.id}, {"text", p.text}, {"category", p.category}};
}

inline Prompt PromptFromJson(const Json& j) {
  try {
    return Prompt{j.at("id").get<std::string>(), j.value("text", ""),
                  j.value("category", "")};
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("invalid prompt record: ") + e.what());
  }
}

// Copies feature scores onto the videos. Missing scores are reported
// together.
inline void AttachFeatureScores(std::vector<Video>& videos,
                                const std::map<std::string, double>& scores) {
  std::vector<std::string> missing;
  for (Video& v : videos) {
    const auto it = scores.find(v.id);
    if (it == scores.end()) {
      missing.push_back(v.id);
    } else {
      v.feature_score = it->second;
    }
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& v : missing) names += (names.empty() ? "" : ", ") + v;
    throw ValidationError("missing feature score for videos: " + names);
  }
}

}  // namespace arena
