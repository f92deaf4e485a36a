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

#include "arena/metrics_ingest.hpp"

#include "arena/random.hpp"
#include "gtest/gtest.h"

namespace arena {
namespace {

AutoMetricTable OneColumn(const std::map<std::string, double>& raw) {
  AutoMetricTable t;
  t.metric_names = {"m"};
  for (const auto& [v, x] : raw) t.scores[v] = {x};
  return t;
}

TEST(NormalizeTest, MinMaxSingleColumn) {
  const auto s = NormalizeAndSum(OneColumn({{"v1", 2}, {"v2", 4}, {"v3", 6}}));
  EXPECT_DOUBLE_EQ(s.at("v1"), 0.0);
  EXPECT_DOUBLE_EQ(s.at("v2"), 0.5);
  EXPECT_DOUBLE_EQ(s.at("v3"), 1.0);
}

TEST(NormalizeTest, ConstantColumnIsHalf) {
  const auto s = NormalizeAndSum(OneColumn({{"v1", 3}, {"v2", 3}}));
  EXPECT_DOUBLE_EQ(s.at("v1"), 0.5);
  EXPECT_DOUBLE_EQ(s.at("v2"), 0.5);
}

TEST(NormalizeTest, ColumnsAreSummed) {
  const AutoMetricTable t =
      ReadAutoMetricCsv("video_id,a,b\nv1,0,1\nv2,1,0\n");
  const auto s = NormalizeAndSum(t);
  EXPECT_DOUBLE_EQ(s.at("v1"), 1.0);
  EXPECT_DOUBLE_EQ(s.at("v2"), 1.0);
}

TEST(NormalizeTest, SevenColumnsStayInRange) {
  RandomStream rng(5);
  AutoMetricTable t;
  t.metric_names = DefaultAutoMetricNames();
  for (int v = 0; v < 30; ++v) {
    auto& row = t.scores["v" + std::to_string(v)];
    for (int k = 0; k < 7; ++k) row.push_back(rng.Normal() * 10);
  }
  for (const auto& [v, s] : NormalizeAndSum(t)) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 7.0);
  }
}

TEST(NormalizeTest, RejectsNonFiniteNamingVideoAndMetric) {
  const AutoMetricTable t =
      ReadAutoMetricCsv("video_id,aesthetic_quality\nv1,1\nv2,nan\n");
  try {
    NormalizeAndSum(t);
    FAIL();
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("v2"), std::string::npos);
    EXPECT_NE(what.find("aesthetic_quality"), std::string::npos);
  }
  EXPECT_THROW(NormalizeAndSum(OneColumn({{"v1", 1}})), ValidationError);
}

TEST(NormalizeTest, PartialVectorsNeedOptIn) {
  const AutoMetricTable t =
      ReadAutoMetricCsv("video_id,a,b\nv1,0,\nv2,1,3\nv3,2,5\n");
  EXPECT_EQ(t.IncompleteVideos(), std::vector<std::string>{"v1"});
  EXPECT_THROW(NormalizeAndSum(t), ValidationError);
  const auto s = NormalizeAndSum(t, /*allow_partial=*/true);
  EXPECT_DOUBLE_EQ(s.at("v1"), 0.0 + 0.5);
  EXPECT_DOUBLE_EQ(s.at("v2"), 0.5 + 0.0);
  EXPECT_DOUBLE_EQ(s.at("v3"), 1.0 + 1.0);
}

TEST(NormalizeTest, AffineInvarianceAndOrderPreservation) {
  RandomStream rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::map<std::string, double> raw, moved;
    const double c = 0.01 + rng.Uniform() * 100;
    const double d = rng.Normal() * 50;
    for (int v = 0; v < 8; ++v) {
      const double x = rng.Normal();
      raw["v" + std::to_string(v)] = x;
      moved["v" + std::to_string(v)] = c * x + d;
    }
    const auto a = NormalizeAndSum(OneColumn(raw));
    const auto b = NormalizeAndSum(OneColumn(moved));
    for (const auto& [v, s] : a) {
      EXPECT_NEAR(s, b.at(v), 1e-12);
      for (const auto& [w, r] : a) {
        if (raw.at(v) > raw.at(w)) EXPECT_GT(s, r);
      }
    }
  }
}

TEST(IngestFormatTest, CsvAndJsonAgreeAndLoadingIsIdempotent) {
  const std::string csv = "video_id,a,b\nv1,0.5,2\nv2,1.5,1\n";
  const std::string json =
      R"({"v1": {"a": 0.5, "b": 2}, "v2": {"a": 1.5, "b": 1}})";
  EXPECT_EQ(ParseAutoMetricTable(csv), ParseAutoMetricTable(csv));
  EXPECT_EQ(ParseAutoMetricTable(csv), ParseAutoMetricTable(json));
  EXPECT_THROW(ReadAutoMetricCsv("id,a\nv1,1\n"), ValidationError);
  EXPECT_THROW(ReadAutoMetricCsv("video_id,a\nv1,1,2\n"), ValidationError);
  EXPECT_THROW(ReadAutoMetricCsv("video_id,a\nv1,x\n"), ValidationError);
}

TEST(IngestFormatTest, AttachNamesMissingVideos) {
  std::vector<Video> videos = {{"v1", "p", "m1", "", {}},
                               {"v2", "p", "m2", "", {}}};
  try {
    AttachFeatureScores(videos, {{"v1", 1.0}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("v2"), std::string::npos);
  }
  AttachFeatureScores(videos, {{"v1", 1.0}, {"v2", 2.0}});
  EXPECT_EQ(*videos[1].feature_score, 2.0);
  const auto back = ReadVideosJsonl(ToJson(videos[0]).dump() + "\n");
  EXPECT_EQ(back[0].id, "v1");
  EXPECT_EQ(*back[0].feature_score, 1.0);
}

}  // namespace
}  // namespace arena
