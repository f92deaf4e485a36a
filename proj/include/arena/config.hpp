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

// TOML configuration. Keys mirror the SchedulerConfig and BootstrapConfig
// field names:
//
//   [scheduler]
//   alpha = 1.0
//   n0_pairs = 200
//   driving_score = "SINGLE_METRIC"
//   driving_metric = "human_preference"
//
//   [bootstrap]
//   n_resamples = 1000
//   rerun_mode = "ESTIMATE_ONLY"
//
// Scheduler keys may also sit at the top level when the file has no
// [scheduler] table. Unknown keys are rejected.

#pragma once

#include <set>
#include <string>
#include <string_view>

#include "arena/bootstrap.hpp"
#include "arena/scheduler.hpp"
#include "toml.hpp"

namespace arena {

struct ArenaConfig {
  SchedulerConfig scheduler;
  BootstrapConfig bootstrap;
};

namespace detail {

inline void CheckKeys(const toml::table& table, const std::set<std::string>& known,
                      std::string_view where) {
  for (const auto& [key, node] : table) {
    if (!known.count(std::string(key.str()))) {
      throw ValidationError("unknown key '" + std::string(key.str()) +
                            "' in " + std::string(where));
    }
  }
}

template <typename T>
T Get(const toml::table& table, std::string_view key, T fallback) {
  const toml::node* node = table.get(key);
  if (!node) return fallback;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = node->value<double>()) return *v;
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node->value<std::string>()) return *v;
  } else {
    if (auto v = node->value<std::int64_t>()) return static_cast<T>(*v);
  }
  throw ValidationError("config key '" + std::string(key) +
                        "' has the wrong type");
}

inline SchedulerConfig ReadScheduler(const toml::table& t,
                                     std::string_view where) {
  CheckKeys(t,
            {"alpha", "n0_pairs", "batch_groups", "update_every_batches",
             "stability_window", "seed", "driving_score", "driving_metric"},
            where);
  SchedulerConfig c;
  c.alpha = Get(t, "alpha", c.alpha);
  c.n0_pairs = Get(t, "n0_pairs", c.n0_pairs);
  c.batch_groups = Get(t, "batch_groups", c.batch_groups);
  c.update_every_batches =
      Get(t, "update_every_batches", c.update_every_batches);
  c.stability_window = Get(t, "stability_window", c.stability_window);
  c.seed = Get<std::uint64_t>(t, "seed", c.seed);
  const std::string driving =
      Get<std::string>(t, "driving_score", "PER_METRIC_MEAN");
  if (driving == "SINGLE_METRIC") {
    c.driving_score = DrivingScore::kSingleMetric;
    c.driving_metric = ParseMetric(
        Get<std::string>(t, "driving_metric", "human_preference"));
  } else if (driving != "PER_METRIC_MEAN") {
    throw ValidationError("unknown driving_score '" + driving + "'");
  }
  c.Validate();
  return c;
}

inline BootstrapConfig ReadBootstrap(const toml::table& t) {
  CheckKeys(t,
            {"n_resamples", "ci_lower_pct", "ci_upper_pct", "seed",
             "rerun_mode"},
            "[bootstrap]");
  BootstrapConfig c;
  c.n_resamples = Get(t, "n_resamples", c.n_resamples);
  c.ci_lower_pct = Get(t, "ci_lower_pct", c.ci_lower_pct);
  c.ci_upper_pct = Get(t, "ci_upper_pct", c.ci_upper_pct);
  c.seed = Get<std::uint64_t>(t, "seed", c.seed);
  c.rerun_mode =
      ParseRerunMode(Get<std::string>(t, "rerun_mode", "ESTIMATE_ONLY"));
  c.Validate();
  return c;
}

}  // namespace detail

inline ArenaConfig ParseConfigToml(std::string_view text,
                                   std::string_view source = "config") {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ValidationError("malformed TOML in " + std::string(source) + ": " +
                          std::string(e.description()));
  }
  ArenaConfig config;
  if (root.contains("scheduler") || root.contains("bootstrap")) {
    detail::CheckKeys(root, {"scheduler", "bootstrap"}, source);
    if (const auto* s = root["scheduler"].as_table()) {
      config.scheduler = detail::ReadScheduler(*s, "[scheduler]");
    }
    if (const auto* b = root["bootstrap"].as_table()) {
      config.bootstrap = detail::ReadBootstrap(*b);
    }
  } else {
    config.scheduler = detail::ReadScheduler(root, source);
  }
  return config;
}

inline ArenaConfig LoadConfigToml(const std::filesystem::path& path) {
  return ParseConfigToml(ReadFile(path), path.string());
}

}  // namespace arena
