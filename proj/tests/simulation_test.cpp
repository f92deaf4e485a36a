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

#include "arena/simulation.hpp"

#include <cmath>

#include "gtest/gtest.h"
#include "oracles.hpp"

namespace arena {
namespace {

const std::vector<std::string> kFive = {"m1", "m2", "m3", "m4", "m5"};

std::vector<std::uint64_t> Seeds(int n, std::uint64_t base = 500) {
  std::vector<std::uint64_t> out;
  for (int k = 0; k < n; ++k) out.push_back(base + k);
  return out;
}

GroundTruth TwoModelTruth(double pa, double pb, double theta) {
  GroundTruth t = UniformTruth({"a", "b"}, {std::log(pa), std::log(pb)}, theta);
  return t;
}

TEST(SampleJudgmentTest, DominantModelAlmostAlwaysWins) {
  const GroundTruth truth = TwoModelTruth(1e6, 1.0, std::exp(0.01));
  RandomStream rng(1);
  int wins = 0;
  for (int k = 0; k < 10000; ++k) {
    wins += SampleJudgment("a", "b", MetricId::kVideoQuality, truth, rng) ==
            Outcome::kAWins;
  }
  EXPECT_GT(wins / 10000.0, 0.999);
}

TEST(SampleJudgmentTest, EqualStrengthsTieAThird) {
  const GroundTruth truth = TwoModelTruth(1.0, 1.0, 2.0);
  RandomStream rng(2);
  int ties = 0;
  for (int k = 0; k < 10000; ++k) {
    ties += SampleJudgment("a", "b", MetricId::kVideoQuality, truth, rng) ==
            Outcome::kTie;
  }
  EXPECT_NEAR(ties / 10000.0, 1.0 / 3.0, 0.02);
}

// Frequencies against the ratio-form oracle, 3 sigma binomial bounds.
TEST(SampleJudgmentTest, FrequenciesMatchExactProbabilities) {
  RandomStream pick(3);
  for (int trial = 0; trial < 5; ++trial) {
    const double pa = std::exp(pick.Normal());
    const double pb = std::exp(pick.Normal());
    const double theta = 1.0 + 2.0 * pick.Uniform();
    const GroundTruth truth = TwoModelTruth(pa, pb, theta);
    RandomStream rng(100 + trial);
    const int n = 100000;
    std::array<int, 3> counts{};
    for (int k = 0; k < n; ++k) {
      ++counts[static_cast<int>(
          SampleJudgment("a", "b", MetricId::kHumanPreference, truth, rng))];
    }
    const double win = oracle::RatioWin(pa, pb, theta);
    const double tie = oracle::RatioTie(pa, pb, theta);
    const std::array<double, 3> expect = {win, 1 - win - tie, tie};
    for (int c = 0; c < 3; ++c) {
      const double sd = std::sqrt(expect[c] * (1 - expect[c]) / n);
      EXPECT_NEAR(counts[c] / double(n), expect[c], 3 * sd + 1e-12)
          << "trial " << trial << " outcome " << c;
    }
  }
}

TEST(SampleJudgmentTest, UnknownModelIsAnError) {
  const GroundTruth truth = TwoModelTruth(1, 1, 1.5);
  RandomStream rng(4);
  EXPECT_THROW(
      SampleJudgment("a", "zz", MetricId::kVideoQuality, truth, rng),
      ValidationError);
}

TEST(SimulatedAnnotatorTest, VerdictsArePureFunctionsOfTheirKey) {
  auto truth = std::make_shared<const GroundTruth>(
      UniformTruth(kFive, {0, 0.4, 0.8, 1.2, 1.6}, 1.3));
  const SimulatedAnnotator x(truth, 77, "ann1");
  const SimulatedAnnotator y(truth, 77, "ann1");
  const SimulatedAnnotator z(truth, 77, "ann2");
  const auto videos = SyntheticVideos(*truth, StudyOptions{10, 0.3}, 1);
  const auto groups = BuildGroups(videos);
  int differ = 0;
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    for (const VideoPair& p : it->pairs) {
      EXPECT_EQ(x(p, {}), y(p, {}));
      differ += x(p, {}) != z(p, {});
    }
  }
  EXPECT_GT(differ, 0);
}

TEST(SimulatedAnnotatorTest, LambdaInflatesTies) {
  GroundTruth truth = TwoModelTruth(1, 1, 1.5);
  truth.annotator_lambda["noisy"] = 3.0;
  auto shared = std::make_shared<const GroundTruth>(truth);
  const auto groups = BuildGroups(SyntheticVideos(truth, {2000, 0}, 5));
  int calm = 0, noisy = 0;
  const SimulatedAnnotator a(shared, 1, "calm");
  const SimulatedAnnotator b(shared, 1, "noisy");
  for (const Group& g : groups) {
    calm += a.Judge(g.pairs[0], MetricId::kVideoQuality) == Outcome::kTie;
    noisy += b.Judge(g.pairs[0], MetricId::kVideoQuality) == Outcome::kTie;
  }
  // theta 1.5 -> tie 0.2; theta 1.5^3 -> tie ~0.54.
  EXPECT_NEAR(calm / 2000.0, oracle::RatioTie(1, 1, 1.5), 0.03);
  EXPECT_NEAR(noisy / 2000.0, oracle::RatioTie(1, 1, std::pow(1.5, 3)), 0.03);
}

TEST(GroundTruthTest, JsonDefaultsAndErrors) {
  const Json j = Json::parse(R"({
    "log_scale": true,
    "default": {"theta": 1.3, "strengths": {"a": 0, "b": 0.5}},
    "metrics": {"human_preference": {"theta": 2, "strengths": {"a": 1, "b": 0}}},
    "annotators": {"x": 1.5}
  })");
  const GroundTruth t = GroundTruthFromJson(j);
  EXPECT_EQ(t.metrics.size(), 6u);
  EXPECT_DOUBLE_EQ(t.metrics.at(MetricId::kVideoQuality).strengths.at("b"),
                   std::exp(0.5));
  EXPECT_DOUBLE_EQ(t.metrics.at(MetricId::kHumanPreference).theta, 2.0);
  EXPECT_DOUBLE_EQ(t.Lambda("x"), 1.5);
  EXPECT_DOUBLE_EQ(t.Lambda("y"), 1.0);
  EXPECT_EQ(GroundTruthFromJson(ToJson(t)), t);
  EXPECT_THROW(GroundTruthFromJson(Json::parse(
                   R"({"default": {"theta": 0.5, "strengths": {"a": 1, "b": 1}}})")),
               ValidationError);
  EXPECT_THROW(GroundTruthFromJson(Json::parse(R"({"metrics": {}})")),
               ValidationError);
}

TEST(ExperimentCostTest, SeparatedTruthCutsCostAndKeepsRanking) {
  const GroundTruth truth = UniformTruth(kFive, {0, 0.4, 0.8, 1.2, 1.6}, 1.3);
  const CostReport r =
      ExperimentCost(truth, StudyOptions{}, SchedulerConfig{}, Seeds(6));
  EXPECT_GE(r.mean_served_fraction, 0.40);
  EXPECT_LE(r.mean_served_fraction, 0.70);
  EXPECT_GE(r.MinSeedsMatching(), 5);
  for (const CostRow& row : r.rows) EXPECT_LT(row.served, row.total_pairs);
}

TEST(ExperimentCostTest, EqualStrengthsRarelyDiscard) {
  const GroundTruth truth = UniformTruth(kFive, {0, 0, 0, 0, 0}, 1.3);
  const CostReport r =
      ExperimentCost(truth, StudyOptions{}, SchedulerConfig{}, Seeds(6));
  EXPECT_GE(r.mean_served_fraction, 0.95);
}

// With identical truths on all metrics and steps of 0.8, the served fraction
// follows from g: static share plus the dynamic share times mean exp(-gap).
TEST(ExperimentCostTest, WideGapsFollowDiscardCurve) {
  const std::vector<double> logs = {0, 0.8, 1.6, 2.4, 3.2};
  double keep = 0.0;
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) keep += std::exp(-(logs[j] - logs[i]));
  }
  keep /= 10.0;
  const double expected = 0.1 + 0.9 * keep;
  const CostReport r = ExperimentCost(UniformTruth(kFive, logs, 1.3),
                                      StudyOptions{}, SchedulerConfig{},
                                      Seeds(6));
  EXPECT_NEAR(r.mean_served_fraction, expected, 0.03);
}

TEST(ExperimentCostTest, SameSeedSameReport) {
  const GroundTruth truth = UniformTruth(kFive, {0, 0.4, 0.8, 1.2, 1.6}, 1.3);
  StudyOptions small;
  small.n_prompts = 60;
  const Json a =
      ToJson(ExperimentCost(truth, small, SchedulerConfig{}, Seeds(2, 9)));
  const Json b =
      ToJson(ExperimentCost(truth, small, SchedulerConfig{}, Seeds(2, 9)));
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(ExperimentGrowthTest, SubQuadraticAndDecreasingFraction) {
  const GroundTruth truth = UniformTruth(kFive, {0, 0.4, 0.8, 1.2, 1.6}, 1.3);
  const SubsetSweepReport r =
      ExperimentGrowth(truth, StudyOptions{}, SchedulerConfig{}, Seeds(1));
  EXPECT_EQ(r.rows.size(), 25u);
  EXPECT_DOUBLE_EQ(r.mean_annotations.at(2), 200.0);  // all static
  EXPECT_LT(r.GrowthRatio(4, 2), 6.0);
  EXPECT_GT(r.served_fraction.at(2), r.served_fraction.at(3));
  EXPECT_GT(r.served_fraction.at(3), r.served_fraction.at(4));
  for (const SubsetRow& row : r.rows) {
    EXPECT_LE(row.annotations, double(row.total_pairs));
  }
}

}  // namespace
}  // namespace arena
