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

// Library walk-through: load the demo study, let three simulated annotators
// work through their own sessions, then print the pooled report.
//
//   quickstart <demo_dir>

#include <iostream>

#include "arena/config.hpp"
#include "arena/metrics_ingest.hpp"
#include "arena/report.hpp"
#include "arena/simulation.hpp"
#include "arena/study.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "demo";
  try {
    arena::StudyInputs inputs;
    inputs.videos = arena::ReadVideosJsonl(arena::ReadFile(dir / "videos.jsonl"));
    for (const auto& j : arena::ParseJsonLines(
             arena::ReadFile(dir / "prompts.jsonl"), "prompts")) {
      inputs.prompts.push_back(arena::PromptFromJson(j));
    }
    arena::AttachFeatureScores(
        inputs.videos,
        arena::NormalizeAndSum(arena::ParseAutoMetricTable(
            arena::ReadFile(dir / "scores.csv"))));
    inputs.config = arena::LoadConfigToml(dir / "sched.toml").scheduler;

    auto truth = std::make_shared<const arena::GroundTruth>(
        arena::GroundTruthFromJson(
            arena::ParseJson(arena::ReadFile(dir / "truth.json"), "truth")));

    const arena::Timestamp t0 = arena::ParseTimestamp("2026-01-01T00:00:00.000Z");
    arena::StudyState study("demo", std::move(inputs), t0);
    for (const std::string annotator : {"lab1", "lab2", "lab3"}) {
      const std::string session =
          study.CreateSession(annotator, t0).front()["session_id"];
      const arena::SimulatedAnnotator sim(truth, 11, annotator);
      int tick = 0;
      while (const arena::VideoPair* pair = study.session(session).current()) {
        std::array<arena::Outcome, arena::kNumMetrics> verdicts{};
        for (arena::MetricId m : arena::kAllMetrics) {
          verdicts[arena::MetricIndex(m)] = sim.Judge(*pair, m);
        }
        study.RecordJudgment(session, pair->pair_id, verdicts,
                             t0 + std::chrono::seconds(++tick));
      }
    }
    arena::ReportBundle report =
        arena::BuildReport(study.records(), study.plan().model_ids);
    for (const auto& [id, s] : study.sessions()) {
      report.sessions[id] = arena::Summarize(s.scheduler().dispositions());
    }
    std::cout << arena::RenderTable(report);
  } catch (const std::exception& e) {
    std::cerr << "quickstart: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
