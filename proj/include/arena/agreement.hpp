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

// Inter-annotator agreement as Krippendorff's alpha at the nominal level.
// An item is one (pair, metric); its values are the verdicts of every
// annotator who judged it. Items with a single verdict are not pairable and
// are ignored.

#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "arena/domain.hpp"

namespace arena {

struct AgreementReport {
  std::string statistic_name = "krippendorff_alpha_nominal";
  double value = 0.0;
  int n_items = 0;       // pairable items
  int n_annotators = 0;  // distinct annotators over all records
};

inline AgreementReport InterAnnotatorAgreement(
    const std::vector<JudgmentRecord>& records) {
  std::set<std::string> annotators;
  std::map<std::pair<std::string, MetricId>, std::vector<Outcome>> items;
  for (const JudgmentRecord& r : records) {
    annotators.insert(r.annotator_id);
    items[{r.pair_id, r.metric}].push_back(r.outcome);
  }
  if (annotators.size() < 2) {
    throw ValidationError("agreement needs at least two annotators");
  }

  // Coincidence matrix over the three verdict labels.
  std::array<std::array<double, 3>, 3> coincidence{};
  int pairable = 0;
  for (const auto& [key, values] : items) {
    const std::size_t m = values.size();
    if (m < 2) continue;
    ++pairable;
    std::array<double, 3> counts{};
    for (Outcome o : values) counts[static_cast<int>(o)] += 1;
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < 3; ++k) {
        const double ordered_pairs =
            c == k ? counts[c] * (counts[c] - 1) : counts[c] * counts[k];
        coincidence[c][k] += ordered_pairs / static_cast<double>(m - 1);
      }
    }
  }
  if (pairable == 0) {
    throw ValidationError("agreement needs an item judged at least twice");
  }

  std::array<double, 3> marginals{};
  double n = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (int k = 0; k < 3; ++k) marginals[c] += coincidence[c][k];
    n += marginals[c];
  }
  double observed = 0.0;
  double expected = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (int k = 0; k < 3; ++k) {
      if (c == k) continue;
      observed += coincidence[c][k];
      expected += marginals[c] * marginals[k];
    }
  }

  AgreementReport report;
  report.n_items = pairable;
  report.n_annotators = static_cast<int>(annotators.size());
  if (observed == 0.0) {
    report.value = 1.0;  // no disagreement at all
  } else if (expected == 0.0) {
    report.value = 0.0;
  } else {
    report.value = 1.0 - (n - 1.0) * observed / expected;
  }
  return report;
}

inline Json ToJson(const AgreementReport& r) {
  return Json{{"statistic", r.statistic_name},
              {"value", r.value},
              {"n_items", r.n_items},
              {"n_annotators", r.n_annotators}};
}

}  // namespace arena
