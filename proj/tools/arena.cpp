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

// arena ingest|plan|simulate|serve|estimate|bootstrap|report
//
// Exit codes: 0 ok, 2 invalid input, 3 optimizer did not converge, 4 I/O.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "arena/bootstrap.hpp"
#include "arena/config.hpp"
#include "arena/estimation.hpp"
#include "arena/metrics_ingest.hpp"
#include "arena/report.hpp"
#include "arena/scheduler.hpp"
#include "arena/service.hpp"
#include "arena/simulation.hpp"
#include "arena/study.hpp"

namespace {

using arena::Json;

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

void Emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    arena::WriteFile(path, text);
  }
}

std::string Pretty(const Json& j) { return j.dump(2) + "\n"; }

arena::ArenaConfig LoadConfig(const std::string& path) {
  return path.empty() ? arena::ArenaConfig{} : arena::LoadConfigToml(path);
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = arena::Trim(text.substr(pos, comma - pos));
    if (!item.empty()) out.push_back(item);
    pos = comma + 1;
  }
  return out;
}

// ingest --------------------------------------------------------------------

struct IngestArgs {
  std::string scores, videos, out;
  bool allow_partial = false;
};

int RunIngest(const IngestArgs& a) {
  const arena::AutoMetricTable table =
      arena::ParseAutoMetricTable(arena::ReadFile(a.scores));
  std::map<std::string, double> scores =
      arena::NormalizeAndSum(table, a.allow_partial);
  if (!a.videos.empty()) {
    std::vector<arena::Video> videos =
        arena::ReadVideosJsonl(arena::ReadFile(a.videos));
    arena::AttachFeatureScores(videos, scores);
    std::map<std::string, double> kept;
    for (const arena::Video& v : videos) kept[v.id] = *v.feature_score;
    scores = std::move(kept);
  }
  Emit(a.out, Pretty(arena::FeatureScoresToJson(scores)));
  return 0;
}

// plan ----------------------------------------------------------------------

struct PlanArgs {
  std::string features, videos, config, out;
  std::optional<std::uint64_t> seed;
};

int RunPlan(const PlanArgs& a) {
  std::vector<arena::Video> videos =
      arena::ReadVideosJsonl(arena::ReadFile(a.videos));
  if (!a.features.empty()) {
    arena::AttachFeatureScores(
        videos, arena::FeatureScoresFromJson(
                    arena::ParseJson(arena::ReadFile(a.features), a.features)));
  }
  arena::SchedulerConfig config = LoadConfig(a.config).scheduler;
  if (a.seed) config.seed = *a.seed;
  const arena::SchedulePlan plan = arena::BuildPlan(videos, config);
  std::cerr << "plan: " << plan.TotalPairs() << " pairs in "
            << plan.groups.size() << " groups, " << plan.StaticPairs()
            << " static, " << plan.batches.size() << " dynamic batches\n";
  Emit(a.out, Pretty(arena::ToJson(plan)));
  return 0;
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
  std::string plan, truth, config, out, records_out;
  std::optional<std::uint64_t> seed;
  std::string annotators = "sim";
  std::string mode = "dynamic";
  int seeds = 20;
  int prompts = 200;
  double noise = 0.3;
  std::string sizes = "2,3,4";
};

arena::GroundTruth LoadTruth(const std::string& path) {
  return arena::GroundTruthFromJson(
      arena::ParseJson(arena::ReadFile(path), path));
}

std::vector<std::uint64_t> SeedList(std::uint64_t first, int n) {
  if (n < 1) throw arena::ValidationError("--seeds must be >= 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
  return seeds;
}

int RunSimulateExperiment(const SimulateArgs& a, bool cost) {
  const arena::GroundTruth truth = LoadTruth(a.truth);
  arena::StudyOptions study;
  study.n_prompts = a.prompts;
  study.feature_noise = a.noise;
  const arena::SchedulerConfig config = LoadConfig(a.config).scheduler;
  const auto seeds = SeedList(*a.seed, a.seeds);
  if (cost) {
    const arena::CostReport report =
        arena::ExperimentCost(truth, study, config, seeds);
    Emit(a.out, Pretty(arena::ToJson(report)));
    std::cerr << "mean served fraction " << report.mean_served_fraction
              << ", ranking match in >= " << report.MinSeedsMatching() << "/"
              << seeds.size() << " seeds\n";
  } else {
    std::vector<int> sizes;
    for (const auto& s : SplitList(a.sizes)) {
      sizes.push_back(static_cast<int>(arena::ParseInt(s, "--sizes")));
    }
    const arena::SubsetSweepReport report =
        arena::ExperimentGrowth(truth, study, config, seeds, sizes);
    Emit(a.out, Pretty(arena::ToJson(report)));
  }
  return 0;
}

int RunSimulatePlan(const SimulateArgs& a) {
  if (a.plan.empty()) {
    throw arena::ValidationError(
        "simulate needs --plan, or the cost / growth experiment");
  }
  auto truth = std::make_shared<const arena::GroundTruth>(LoadTruth(a.truth));
  auto plan = std::make_shared<const arena::SchedulePlan>(arena::PlanFromJson(
      arena::ParseJson(arena::ReadFile(a.plan), a.plan)));
  if (a.mode != "dynamic" && a.mode != "full") {
    throw arena::ValidationError("--mode must be dynamic or full");
  }
  std::vector<arena::JudgmentRecord> records;
  Json sessions = Json::object();
  for (const std::string& annotator : SplitList(a.annotators)) {
    const arena::SimulatedAnnotator sim(truth, arena::DeriveSeed(*a.seed, "judge"),
                                        annotator);
    const arena::RunResult run =
        a.mode == "full"
            ? arena::RunFull(*plan, sim, annotator)
            : arena::RunDynamic(plan, sim,
                                arena::DeriveSeed(arena::DeriveSeed(*a.seed, "discard"),
                                                  annotator),
                                annotator);
    records.insert(records.end(), run.records.begin(), run.records.end());
    Json dispositions = Json::array();
    for (const auto& d : run.dispositions) dispositions.push_back(arena::ToJson(d));
    sessions[annotator] =
        Json{{"status", arena::StatusName(run.status)},
             {"judged_pairs", run.judged_pairs},
             {"discarded_pairs", run.discarded_pairs},
             {"total_pairs", run.total_pairs},
             {"served_fraction", run.ServedFraction()},
             {"updates", run.updates},
             {"summary", arena::ToJson(arena::Summarize(run.dispositions))},
             {"dispositions", dispositions},
             {"estimate", run.estimate ? arena::ToJson(*run.estimate) : Json()}};
  }
  const arena::ReportBundle pooled = arena::BuildReport(records, plan->model_ids);
  Emit(a.out, Pretty(Json{{"seed", *a.seed},
                          {"mode", a.mode},
                          {"sessions", sessions},
                          {"pooled", arena::ToJson(pooled)}}));
  if (!a.records_out.empty()) {
    arena::WriteFile(a.records_out, arena::WriteJudgmentsJsonl(records));
  }
  return 0;
}

// estimate ------------------------------------------------------------------

struct EstimateArgs {
  std::string tally, records, out;
  bool smoothing = false;
};

int RunEstimate(const EstimateArgs& a) {
  if (a.tally.empty() == a.records.empty()) {
    throw arena::ValidationError("estimate needs exactly one of --tally, --records");
  }
  const arena::ComparisonTally tally =
      !a.tally.empty()
          ? arena::ReadTallyCsv(arena::ReadFile(a.tally))
          : [&] {
              const auto records =
                  arena::ReadJudgmentsJsonl(arena::ReadFile(a.records));
              return arena::TallyFromJudgments(records,
                                               arena::ModelsInJudgments(records));
            }();
  arena::FitOptions fit;
  fit.smoothing = a.smoothing;
  const arena::StrengthEstimate est = arena::FitMle(tally, fit);
  Emit(a.out, Pretty(arena::ToJson(est)));
  for (const auto& [m, e] : est.metrics) {
    if (!e.converged) {
      std::cerr << "arena: fit for " << arena::MetricName(m)
                << " did not converge\n";
      return kExitNumeric;
    }
  }
  return 0;
}

// bootstrap -----------------------------------------------------------------

struct BootstrapArgs {
  std::string records, config, out, plan, mode;
  std::optional<std::uint64_t> seed;
  std::optional<int> resamples;
  std::optional<double> lower, upper;
};

int RunBootstrap(const BootstrapArgs& a) {
  arena::BootstrapConfig config = LoadConfig(a.config).bootstrap;
  config.seed = *a.seed;
  if (a.resamples) config.n_resamples = *a.resamples;
  if (a.lower) config.ci_lower_pct = *a.lower;
  if (a.upper) config.ci_upper_pct = *a.upper;
  if (!a.mode.empty()) config.rerun_mode = arena::ParseRerunMode(a.mode);
  std::shared_ptr<const arena::SchedulePlan> plan;
  if (!a.plan.empty()) {
    plan = std::make_shared<const arena::SchedulePlan>(arena::PlanFromJson(
        arena::ParseJson(arena::ReadFile(a.plan), a.plan)));
  }
  const auto records = arena::ReadJudgmentsJsonl(arena::ReadFile(a.records));
  const arena::ConfidenceReport report =
      arena::BootstrapCi(records, config, plan);
  Emit(a.out, Pretty(arena::ToJson(report)));
  return 0;
}

// report --------------------------------------------------------------------

struct ReportArgs {
  std::string records, study_log, ci, models, out, table;
};

int RunReport(const ReportArgs& a) {
  if (a.records.empty() == a.study_log.empty()) {
    throw arena::ValidationError("report needs exactly one of --records, --export");
  }
  arena::ReportBundle bundle =
      !a.study_log.empty()
          ? arena::ReportFromStudyLog(arena::ReadFile(a.study_log))
          : arena::BuildReport(
                arena::ReadJudgmentsJsonl(arena::ReadFile(a.records)),
                SplitList(a.models));
  if (!a.ci.empty()) {
    bundle.ci = arena::ConfidenceReportFromJson(
        arena::ParseJson(arena::ReadFile(a.ci), a.ci));
  }
  Emit(a.out, Pretty(arena::ToJson(bundle)));
  const std::string table = arena::RenderTable(bundle);
  if (a.table.empty()) {
    std::cerr << table;
  } else {
    Emit(a.table, table);
  }
  return 0;
}

// serve ---------------------------------------------------------------------

struct ServeArgs {
  std::string data_dir, bind, token, media_dir;
};

int RunServe(const ServeArgs& a) {
  arena::ServiceOptions options = arena::ServiceOptionsFromEnv();
  if (!a.data_dir.empty()) options.data_dir = a.data_dir;
  if (!a.token.empty()) options.token = a.token;
  if (!a.media_dir.empty()) options.media_dir = a.media_dir;
  std::string bind = a.bind;
  if (bind.empty()) {
    const char* env = std::getenv("ARENA_BIND_ADDR");
    bind = env ? env : "127.0.0.1:8080";
  }
  const auto [host, port] = arena::ParseBindAddress(bind);
  arena::ArenaService service(options);
  httplib::Server server;
  service.Register(server);
  std::cerr << "arena: serving " << service.study_count() << " studies from "
            << options.data_dir.string() << " on " << host << ":" << port
            << "\n";
  if (!server.listen(host, port)) {
    throw arena::IoError("cannot listen on " + bind);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise human evaluation of text-to-video models"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand(
      "ingest", "Normalize automatic metric scores into feature scores S(v)");
  ingest_cmd->add_option("--scores", ingest.scores,
                         "Automatic metric table (CSV or JSON)")
      ->required();
  ingest_cmd->add_option("--videos", ingest.videos,
                         "Videos JSONL; every video must have scores");
  ingest_cmd->add_option("--out", ingest.out, "Output features JSON (- for stdout)")
      ->capture_default_str();
  ingest_cmd->add_flag("--allow-partial", ingest.allow_partial,
                       "Fill missing metric cells with 0.5");

  PlanArgs plan;
  auto* plan_cmd = app.add_subcommand("plan", "Build the annotation plan");
  plan_cmd->add_option("--videos", plan.videos, "Videos JSONL")->required();
  plan_cmd->add_option("--features", plan.features,
                       "Feature scores JSON (video_id -> S(v))");
  plan_cmd->add_option("--config", plan.config,
                       "TOML config (defaults: alpha=1, n0_pairs=200, "
                       "batch_groups=8, update_every_batches=5, "
                       "stability_window=5)");
  plan_cmd->add_option("--seed", plan.seed, "Override scheduler seed");
  plan_cmd->add_option("--out", plan.out, "Output plan JSON (- for stdout)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand(
      "simulate", "Run simulated annotators on a plan, or an experiment");
  sim_cmd->require_subcommand(0, 1);
  sim_cmd->add_option("--truth", sim.truth, "Ground-truth strengths JSON")
      ->required();
  sim_cmd->add_option("--seed", sim.seed, "Seed (required)")->required();
  sim_cmd->add_option("--plan", sim.plan, "Plan JSON (plain simulate)");
  sim_cmd->add_option("--annotators", sim.annotators,
                      "Comma-separated annotator ids")
      ->capture_default_str();
  sim_cmd->add_option("--mode", sim.mode, "dynamic or full")
      ->capture_default_str();
  sim_cmd->add_option("--records-out", sim.records_out,
                      "Write judgment records JSONL");
  sim_cmd->add_option("--config", sim.config, "TOML scheduler config");
  sim_cmd->add_option("--seeds", sim.seeds,
                      "Replications for cost/growth (seed, seed+1, ...)")
      ->capture_default_str();
  sim_cmd->add_option("--prompts", sim.prompts, "Prompts per synthetic study")
      ->capture_default_str();
  sim_cmd->add_option("--noise", sim.noise, "Feature score noise sd")
      ->capture_default_str();
  sim_cmd->add_option("--sizes", sim.sizes, "Subset sizes for growth")
      ->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "Output JSON (- for stdout)");
  auto* cost_cmd = sim_cmd->add_subcommand(
      "cost", "Served fraction and ranking fidelity vs full annotation");
  auto* growth_cmd = sim_cmd->add_subcommand(
      "growth", "Annotation counts over model subsets");
  cost_cmd->fallthrough();
  growth_cmd->fallthrough();

  EstimateArgs est;
  auto* est_cmd =
      app.add_subcommand("estimate", "Fit Rao-Kupper strengths per metric");
  est_cmd->add_option("--tally", est.tally, "Tally CSV");
  est_cmd->add_option("--records", est.records, "Judgment records JSONL");
  est_cmd->add_flag("--smoothing", est.smoothing,
                    "Add 0.1 pseudo-counts to disconnected graphs");
  est_cmd->add_option("--out", est.out, "Output JSON (- for stdout)");

  BootstrapArgs boot;
  auto* boot_cmd = app.add_subcommand(
      "bootstrap", "Per-annotator stratified bootstrap intervals");
  boot_cmd->add_option("--records", boot.records, "Judgment records JSONL")
      ->required();
  boot_cmd->add_option("--seed", boot.seed, "Seed (required)")->required();
  boot_cmd->add_option("--resamples", boot.resamples, "Resamples [1000]");
  boot_cmd->add_option("--lower", boot.lower, "Lower percentile [2.5]");
  boot_cmd->add_option("--upper", boot.upper, "Upper percentile [97.5]");
  boot_cmd->add_option("--mode", boot.mode,
                       "ESTIMATE_ONLY or FULL_DYNAMIC [ESTIMATE_ONLY]");
  boot_cmd->add_option("--plan", boot.plan, "Plan JSON (FULL_DYNAMIC)");
  boot_cmd->add_option("--config", boot.config, "TOML config");
  boot_cmd->add_option("--out", boot.out, "Output JSON (- for stdout)");

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Rankings, counts and agreement");
  rep_cmd->add_option("--records", rep.records, "Judgment records JSONL");
  rep_cmd->add_option("--export", rep.study_log, "Study event log export");
  rep_cmd->add_option("--ci", rep.ci, "Bootstrap intervals JSON");
  rep_cmd->add_option("--models", rep.models,
                      "Comma-separated model ids (default: from records)");
  rep_cmd->add_option("--out", rep.out, "Output JSON (- for stdout)");
  rep_cmd->add_option("--table", rep.table,
                      "Write the text table here instead of stderr");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the annotation service");
  serve_cmd->add_option("--data-dir", serve.data_dir,
                        "Study storage [$ARENA_DATA_DIR or arena-data]");
  serve_cmd->add_option("--bind", serve.bind,
                        "host:port [$ARENA_BIND_ADDR or 127.0.0.1:8080]");
  serve_cmd->add_option("--token", serve.token,
                        "Shared bearer token [$ARENA_TOKEN]");
  serve_cmd->add_option("--media-dir", serve.media_dir,
                        "Serve files under /media [$ARENA_MEDIA_DIR]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*ingest_cmd) return RunIngest(ingest);
    if (*plan_cmd) return RunPlan(plan);
    if (*sim_cmd) {
      if (*cost_cmd) return RunSimulateExperiment(sim, true);
      if (*growth_cmd) return RunSimulateExperiment(sim, false);
      return RunSimulatePlan(sim);
    }
    if (*est_cmd) return RunEstimate(est);
    if (*boot_cmd) return RunBootstrap(boot);
    if (*rep_cmd) return RunReport(rep);
    if (*serve_cmd) return RunServe(serve);
  } catch (const arena::NumericError& e) {
    std::cerr << "arena: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const arena::IoError& e) {
    std::cerr << "arena: " << e.what() << "\n";
    return kExitIo;
  } catch (const arena::Error& e) {
    std::cerr << "arena: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Json::exception& e) {
    std::cerr << "arena: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
