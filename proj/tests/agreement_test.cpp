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

#include "arena/agreement.hpp"

#include <map>

#include "arena/random.hpp"
#include "gtest/gtest.h"

namespace arena {
namespace {

JudgmentRecord Verdict(const std::string& annotator, const std::string& item,
                       Outcome o, MetricId m = MetricId::kVideoQuality) {
  JudgmentRecord r;
  r.annotator_id = annotator;
  r.pair_id = MakePairId(item, "a", "b");
  r.metric = m;
  r.outcome = o;
  return r;
}

// Brute force: every ordered pair of distinct value instances inside an item
// is weighted 1 / (m_u - 1); expected disagreement uses all ordered pairs of
// pooled instances.
double AlphaByEnumeration(const std::vector<std::vector<int>>& items) {
  std::vector<int> pooled;
  double weight = 0.0, disagree = 0.0;
  for (const auto& values : items) {
    if (values.size() < 2) continue;
    const double w = 1.0 / static_cast<double>(values.size() - 1);
    for (std::size_t x = 0; x < values.size(); ++x) {
      pooled.push_back(values[x]);
      for (std::size_t y = 0; y < values.size(); ++y) {
        if (x == y) continue;
        weight += w;
        if (values[x] != values[y]) disagree += w;
      }
    }
  }
  double pairs = 0.0, pooled_disagree = 0.0;
  for (std::size_t x = 0; x < pooled.size(); ++x) {
    for (std::size_t y = 0; y < pooled.size(); ++y) {
      if (x == y) continue;
      pairs += 1;
      if (pooled[x] != pooled[y]) pooled_disagree += 1;
    }
  }
  const double d_o = disagree / weight;
  const double d_e = pooled_disagree / pairs;
  if (d_o == 0.0) return 1.0;
  return 1.0 - d_o / d_e;
}

TEST(AgreementTest, FullAgreementIsOne) {
  std::vector<JudgmentRecord> records;
  for (int a = 0; a < 5; ++a) {
    records.push_back(Verdict("ann" + std::to_string(a), "p1", Outcome::kAWins));
    records.push_back(Verdict("ann" + std::to_string(a), "p2", Outcome::kTie));
  }
  const AgreementReport r = InterAnnotatorAgreement(records);
  EXPECT_DOUBLE_EQ(r.value, 1.0);
  EXPECT_EQ(r.n_items, 2);
  EXPECT_EQ(r.n_annotators, 5);
  EXPECT_EQ(r.statistic_name, "krippendorff_alpha_nominal");
}

TEST(AgreementTest, SystematicDisagreementIsNegative) {
  // Two annotators, two items, opposite verdicts on both: D_o = 1, D_e = 2/3.
  const std::vector<JudgmentRecord> records = {
      Verdict("x", "p1", Outcome::kAWins), Verdict("y", "p1", Outcome::kBWins),
      Verdict("x", "p2", Outcome::kBWins), Verdict("y", "p2", Outcome::kAWins)};
  EXPECT_NEAR(InterAnnotatorAgreement(records).value, -0.5, 1e-12);
}

TEST(AgreementTest, NeedsTwoAnnotatorsAndAPairableItem) {
  EXPECT_THROW(InterAnnotatorAgreement({Verdict("x", "p1", Outcome::kTie)}),
               ValidationError);
  EXPECT_THROW(InterAnnotatorAgreement({Verdict("x", "p1", Outcome::kTie),
                                        Verdict("y", "p2", Outcome::kTie)}),
               ValidationError);
}

TEST(AgreementTest, MatchesEnumerationOnRandomData) {
  RandomStream rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<JudgmentRecord> records;
    std::map<std::pair<std::string, MetricId>, std::vector<int>> items;
    const int annotators = 2 + static_cast<int>(rng.Below(4));
    const int n_items = 1 + static_cast<int>(rng.Below(6));
    for (int i = 0; i < n_items; ++i) {
      const MetricId m = kAllMetrics[rng.Below(6)];
      const std::string item = "p" + std::to_string(i);
      for (int a = 0; a < annotators; ++a) {
        if (rng.Uniform() < 0.2) continue;  // missing value
        const int v = static_cast<int>(rng.Below(3));
        records.push_back(
            Verdict("a" + std::to_string(a), item, static_cast<Outcome>(v), m));
        items[{item, m}].push_back(v);
      }
    }
    std::vector<std::vector<int>> values;
    bool pairable = false;
    for (auto& [k, v] : items) {
      pairable |= v.size() >= 2;
      values.push_back(v);
    }
    std::set<std::string> who;
    for (const auto& r : records) who.insert(r.annotator_id);
    if (!pairable || who.size() < 2) continue;
    const double expected = AlphaByEnumeration(values);
    const double got = InterAnnotatorAgreement(records).value;
    if (std::isfinite(expected)) {
      EXPECT_NEAR(got, expected, 1e-12) << "trial " << trial;
    }
  }
}

}  // namespace
}  // namespace arena
