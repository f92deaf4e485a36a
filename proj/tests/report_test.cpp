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

#include "arena/report.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

#include "arena/simulation.hpp"

namespace arena {
namespace {

namespace fs = std::filesystem;

Timestamp At(int s) {
  return Timestamp{} + std::chrono::hours(500000) + std::chrono::seconds(s);
}

std::shared_ptr<const GroundTruth> Truth() {
  return std::make_shared<const GroundTruth>(UniformTruth(
      {"m0", "m1", "m2", "m3", "m4"}, {0.0, 0.4, 0.8, 1.2, 1.6}, 1.3));
}

class ReportTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("arena_report_test_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::unique_ptr<Study> NewStudy() {
    StudyOptions o;
    o.n_prompts = 30;
    StudyInputs in;
    in.videos = SyntheticVideos(*Truth(), o, 4);
    in.config.n0_pairs = 30;
    in.config.batch_groups = 2;
    in.config.update_every_batches = 1;
    in.config.stability_window = 3;
    return Study::Create(dir_, "rep", in, At(0));
  }

  void Annotate(Study& study, const std::string& annotator, int max_pairs) {
    const std::string id = study.CreateSession(annotator, At(1));
    SimulatedAnnotator sim(Truth(), 21, annotator);
    int t = 2;
    for (int k = 0; k < max_pairs; ++k) {
      const VideoPair* pair = study.state().session(id).current();
      if (!pair) break;
      std::array<Outcome, kNumMetrics> v{};
      for (MetricId m : kAllMetrics) v[MetricIndex(m)] = sim.Judge(*pair, m);
      study.RecordJudgment(id, pair->pair_id, v, At(t++));
    }
  }

  fs::path dir_;
};

TEST_F(ReportTest, EmptyStudyHasZeroCounts) {
  auto study = NewStudy();
  const ReportBundle b = ReportFromStudyLog(study->Export());
  EXPECT_EQ(b.n_records, 0u);
  EXPECT_EQ(b.n_pairs, 0u);
  EXPECT_FALSE(b.estimate);
  EXPECT_EQ(b.model_ids.size(), 5u);
  const Json j = ToJson(b);
  EXPECT_EQ(j["counts"]["records"], 0);
  EXPECT_TRUE(j["metrics"].empty());
  EXPECT_NE(RenderTable(b).find("records 0"), std::string::npos);
}

TEST_F(ReportTest, MatchesDirectFitOnTheTally) {
  auto study = NewStudy();
  Annotate(*study, "a1", 1000);
  const ReportBundle b = ReportFromStudyLog(study->Export());
  const StrengthEstimate direct = FitMle(
      TallyFromJudgments(study->state().records(), study->state().plan().model_ids));
  ASSERT_TRUE(b.estimate);
  EXPECT_EQ(*b.estimate, direct);
  for (const auto& [m, e] : direct.metrics) {
    EXPECT_EQ(ToJson(b)["metrics"][std::string(MetricName(m))]["ranking"],
              Json(e.ranking));
  }
  ASSERT_EQ(b.sessions.size(), 1u);
  const DispositionSummary& s = b.sessions.begin()->second;
  EXPECT_EQ(s.served * kNumMetrics, b.n_records);
  EXPECT_FALSE(ToJson(b)["metrics"]["human_preference"]["models"][0]
                   ["win_ratio"].is_null());
}

TEST_F(ReportTest, RegeneratedReportIsByteIdentical) {
  auto study = NewStudy();
  Annotate(*study, "a1", 60);
  Annotate(*study, "a2", 60);
  const std::string log = study->Export();
  const ReportBundle first = ReportFromStudyLog(log);
  // Re-export through a replayed copy of the log.
  fs::create_directories(dir_ / "copy" / "rep");
  WriteFile(dir_ / "copy" / "rep" / "events.jsonl", log);
  auto reopened = Study::Open(dir_ / "copy" / "rep");
  const ReportBundle second = ReportFromStudyLog(reopened->Export());
  EXPECT_EQ(ToJson(first).dump(2), ToJson(second).dump(2));
  EXPECT_EQ(RenderTable(first), RenderTable(second));
  ASSERT_TRUE(first.agreement);
  EXPECT_EQ(first.agreement->n_annotators, 2);
}

TEST_F(ReportTest, CorruptLogNamesLastValidSequence) {
  auto study = NewStudy();
  Annotate(*study, "a1", 5);
  std::string log = study->Export();
  // Break line 4 in the middle of the log.
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) pos = log.find('\n', pos) + 1;
  log.insert(pos, "garbage\n");
  try {
    ReportFromStudyLog(log);
    FAIL();
  } catch (const CorruptLogError& e) {
    EXPECT_EQ(e.last_valid_seq(), 3);
  }
}

TEST_F(ReportTest, IntervalsShowUpWhenAttached) {
  auto study = NewStudy();
  Annotate(*study, "a1", 80);
  ReportBundle b = ReportFromStudyLog(study->Export());
  BootstrapConfig config;
  config.n_resamples = 20;
  config.seed = 3;
  b.ci = BootstrapCi(study->state().records(), config);
  const Json j = ToJson(b);
  const Json& row = j["metrics"]["video_quality"]["models"][0];
  EXPECT_LE(row["ci_low"].get<double>(), row["ci_high"].get<double>());
  EXPECT_NE(RenderTable(b).find("ci_low"), std::string::npos);
}

}  // namespace
}  // namespace arena
