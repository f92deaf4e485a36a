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

// Result bundles: Rao-Kupper strengths with the win-ratio baseline beside
// them, counts, agreement, scheduler dispositions and optional intervals.

#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "arena/agreement.hpp"
#include "arena/bootstrap.hpp"
#include "arena/estimation.hpp"
#include "arena/scheduler.hpp"
#include "arena/study.hpp"

namespace arena {

struct ReportBundle {
  std::vector<std::string> model_ids;
  std::size_t n_records = 0;
  std::size_t n_pairs = 0;  // distinct judged pairs
  std::map<std::string, std::size_t> records_by_annotator;
  std::map<MetricId, std::size_t> records_by_metric;
  std::optional<StrengthEstimate> estimate;
  std::map<MetricId, std::vector<std::optional<double>>> win_ratio;
  std::optional<AgreementReport> agreement;
  std::map<std::string, DispositionSummary> sessions;  // from a study log
  std::optional<ConfidenceReport> ci;
};

// Fits the pooled tally. A disconnected metric falls back to smoothing; the
// affected metrics carry smoothed = true.
inline ReportBundle BuildReport(const std::vector<JudgmentRecord>& records,
                                std::vector<std::string> model_ids,
                                const FitOptions& fit = {}) {
  ReportBundle b;
  if (model_ids.empty()) model_ids = ModelsInJudgments(records);
  b.model_ids = model_ids;
  b.n_records = records.size();
  std::set<std::string> pairs;
  for (const JudgmentRecord& r : records) {
    pairs.insert(r.pair_id);
    ++b.records_by_annotator[r.annotator_id];
    ++b.records_by_metric[r.metric];
  }
  b.n_pairs = pairs.size();
  if (records.empty() || model_ids.size() < 2) return b;
  const ComparisonTally tally = TallyFromJudgments(records, model_ids);
  try {
    b.estimate = FitMle(tally, fit);
  } catch (const DisconnectedGraphError&) {
    FitOptions smooth = fit;
    smooth.smoothing = true;
    b.estimate = FitMle(tally, smooth);
  }
  b.win_ratio = WinRatio(tally);
  if (b.records_by_annotator.size() >= 2) {
    try {
      b.agreement = InterAnnotatorAgreement(records);
    } catch (const ValidationError&) {
      // No item judged twice.
    }
  }
  return b;
}

// Report for an exported study log. Corrupt logs raise CorruptLogError.
inline ReportBundle ReportFromStudyLog(std::string_view log_text,
                                       const FitOptions& fit = {}) {
  const ReplayResult replay = ReplayLog(log_text);
  const StudyState& state = *replay.state;
  ReportBundle b = BuildReport(state.records(), state.plan().model_ids, fit);
  for (const auto& [id, session] : state.sessions()) {
    b.sessions[id] = Summarize(session.scheduler().dispositions());
  }
  return b;
}

inline Json ToJson(const ReportBundle& b) {
  Json counts{{"records", b.n_records}, {"pairs", b.n_pairs}};
  Json by_annotator = Json::object();
  for (const auto& [a, n] : b.records_by_annotator) by_annotator[a] = n;
  Json by_metric = Json::object();
  for (const auto& [m, n] : b.records_by_metric) {
    by_metric[std::string(MetricName(m))] = n;
  }
  counts["by_annotator"] = by_annotator;
  counts["by_metric"] = by_metric;

  Json metrics = Json::object();
  if (b.estimate) {
    for (const auto& [m, e] : b.estimate->metrics) {
      Json models = Json::array();
      for (const std::string& model : e.ranking) {
        const std::size_t i = static_cast<std::size_t>(
            std::find(b.model_ids.begin(), b.model_ids.end(), model) -
            b.model_ids.begin());
        Json row{{"model_id", model}, {"strength", e.strengths[i]}};
        const auto& wr = b.win_ratio.at(m)[i];
        row["win_ratio"] = wr ? Json(*wr) : Json();
        if (b.ci && b.ci->metrics.count(m)) {
          const ModelInterval& iv = b.ci->Interval(m, model);
          row["ci_low"] = iv.ci_low;
          row["ci_high"] = iv.ci_high;
        }
        models.push_back(std::move(row));
      }
      metrics[std::string(MetricName(m))] =
          Json{{"ranking", e.ranking},
               {"theta", e.theta},
               {"log_likelihood", e.log_likelihood},
               {"converged", e.converged},
               {"smoothed", e.smoothed},
               {"models", models}};
    }
  }
  Json out{{"models", b.model_ids}, {"counts", counts}, {"metrics", metrics}};
  out["agreement"] = b.agreement ? ToJson(*b.agreement) : Json();
  Json sessions = Json::object();
  for (const auto& [id, s] : b.sessions) sessions[id] = ToJson(s);
  out["dispositions"] = sessions;
  out["confidence"] = b.ci ? ToJson(*b.ci) : Json();
  return out;
}

inline std::string RenderTable(const ReportBundle& b) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "records %zu  pairs %zu  annotators %zu\n",
                b.n_records, b.n_pairs, b.records_by_annotator.size());
  out += line;
  if (b.agreement) {
    std::snprintf(line, sizeof line, "agreement (%s) %.4f over %d items\n",
                  b.agreement->statistic_name.c_str(), b.agreement->value,
                  b.agreement->n_items);
    out += line;
  }
  for (const auto& [id, s] : b.sessions) {
    std::snprintf(line, sizeof line,
                  "session %s  served %zu  discarded %zu  pending %zu / %zu\n",
                  id.c_str(), s.served, s.discarded, s.pending, s.total);
    out += line;
  }
  if (!b.estimate) return out;
  for (const auto& [m, e] : b.estimate->metrics) {
    std::snprintf(line, sizeof line, "\n%s  theta %.4f%s\n",
                  std::string(MetricName(m)).c_str(), e.theta,
                  e.smoothed ? "  (smoothed)" : "");
    out += line;
    const bool with_ci = b.ci && b.ci->metrics.count(m);
    std::snprintf(line, sizeof line, "  %-4s %-24s %10s %10s%s\n", "rank",
                  "model", "strength", "win_ratio",
                  with_ci ? "   ci_low    ci_high" : "");
    out += line;
    int rank = 1;
    for (const std::string& model : e.ranking) {
      const std::size_t i = static_cast<std::size_t>(
          std::find(b.model_ids.begin(), b.model_ids.end(), model) -
          b.model_ids.begin());
      const auto& wr = b.win_ratio.at(m)[i];
      char ratio[32] = "-";
      if (wr) std::snprintf(ratio, sizeof ratio, "%.4f", *wr);
      std::snprintf(line, sizeof line, "  %-4d %-24s %10.4f %10s", rank++,
                    model.c_str(), e.strengths[i], ratio);
      out += line;
      if (with_ci) {
        const ModelInterval& iv = b.ci->Interval(m, model);
        std::snprintf(line, sizeof line, " %10.4f %10.4f", iv.ci_low,
                      iv.ci_high);
        out += line;
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace arena
