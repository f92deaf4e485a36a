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

// HTTP front end for studies.
//
//   POST /v1/studies                     create study
//   POST /v1/studies/{id}/sessions       {"annotator_id": ...}
//   GET  /v1/sessions/{id}/next          pair payload or terminal status
//   POST /v1/sessions/{id}/judgments     {"pair_id": ..., "verdicts": {...}}
//   GET  /v1/studies/{id}/rankings       pooled live rankings
//   GET  /v1/studies/{id}/export         raw JSONL event log
//
// Errors come back as {"error": {"kind", "message"}} with 422 for
// validation, 409 for conflicts, 404 for unknown ids, 401 for a bad token.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>

#include "arena/study.hpp"
#include "httplib.h"

namespace arena {

struct ServiceOptions {
  std::filesystem::path data_dir = "arena-data";
  std::string token;      // empty disables the check
  std::string media_dir;  // served under /media when set
  std::function<Timestamp()> clock = NowUtc;
};

// Reads ARENA_DATA_DIR, ARENA_TOKEN and ARENA_MEDIA_DIR.
inline ServiceOptions ServiceOptionsFromEnv() {
  ServiceOptions o;
  if (const char* v = std::getenv("ARENA_DATA_DIR")) o.data_dir = v;
  if (const char* v = std::getenv("ARENA_TOKEN")) o.token = v;
  if (const char* v = std::getenv("ARENA_MEDIA_DIR")) o.media_dir = v;
  return o;
}

// "host:port"; a bare port binds 127.0.0.1.
inline std::pair<std::string, int> ParseBindAddress(std::string_view text) {
  const auto colon = text.rfind(':');
  const std::string host =
      colon == std::string_view::npos ? "127.0.0.1"
                                      : std::string(text.substr(0, colon));
  const std::string port = colon == std::string_view::npos
                               ? std::string(text)
                               : std::string(text.substr(colon + 1));
  const std::int64_t p = ParseInt(port, "bind port");
  if (p < 0 || p > 65535) {
    throw ValidationError("bind port out of range: " + port);
  }
  return {host.empty() ? "127.0.0.1" : host, static_cast<int>(p)};
}

class ArenaService {
 public:
  // Loads every study already present under the data directory.
  explicit ArenaService(ServiceOptions options) : options_(std::move(options)) {
    std::error_code ec;
    std::filesystem::create_directories(options_.data_dir, ec);
    if (ec) {
      throw IoError("cannot create " + options_.data_dir.string() + ": " +
                    ec.message());
    }
    for (const auto& entry :
         std::filesystem::directory_iterator(options_.data_dir)) {
      if (!entry.is_directory() ||
          !std::filesystem::exists(entry.path() / Study::kLogName)) {
        continue;
      }
      auto slot = std::make_shared<Slot>();
      slot->study = Study::Open(entry.path());
      studies_[slot->study->state().study_id()] = std::move(slot);
    }
  }

  std::size_t study_count() const {
    std::shared_lock lock(map_mu_);
    return studies_.size();
  }

  void Register(httplib::Server& server) {
    server.Post("/v1/studies", Wrap([this](const httplib::Request& req,
                                           httplib::Response& res) {
      CreateStudy(req, res);
    }));
    server.Post(R"(/v1/studies/([^/]+)/sessions)",
                Wrap([this](const httplib::Request& req,
                            httplib::Response& res) { CreateSession(req, res); }));
    server.Get(R"(/v1/sessions/([^/]+)/next)",
               Wrap([this](const httplib::Request& req,
                           httplib::Response& res) { Next(req, res); }));
    server.Post(R"(/v1/sessions/([^/]+)/judgments)",
                Wrap([this](const httplib::Request& req,
                            httplib::Response& res) { Judge(req, res); }));
    server.Get(R"(/v1/studies/([^/]+)/rankings)",
               Wrap([this](const httplib::Request& req,
                           httplib::Response& res) { Rankings(req, res); }));
    server.Get(R"(/v1/studies/([^/]+)/export)",
               Wrap([this](const httplib::Request& req,
                           httplib::Response& res) { Export(req, res); }));
    if (!options_.media_dir.empty()) {
      server.set_mount_point("/media", options_.media_dir);
    }
  }

 private:
  struct Slot {
    std::mutex write_mu;  // orders appends to this study's log
    std::unique_ptr<Study> study;
  };

  using Handler =
      std::function<void(const httplib::Request&, httplib::Response&)>;

  Handler Wrap(Handler inner) {
    return [this, inner = std::move(inner)](const httplib::Request& req,
                                            httplib::Response& res) {
      try {
        if (!options_.token.empty() &&
            req.get_header_value("Authorization") !=
                "Bearer " + options_.token) {
          Fail(res, 401, "unauthorized", "missing or wrong bearer token");
          return;
        }
        inner(req, res);
      } catch (const NotFoundError& e) {
        Fail(res, 404, "not_found", e.what());
      } catch (const ConflictError& e) {
        Fail(res, 409, "conflict", e.what());
      } catch (const ValidationError& e) {
        Fail(res, 422, "validation", e.what());
      } catch (const Json::exception& e) {
        Fail(res, 422, "validation", e.what());
      } catch (const std::exception& e) {
        Fail(res, 500, "internal", e.what());
      }
    };
  }

  static void Fail(httplib::Response& res, int status, std::string_view kind,
                   std::string_view message) {
    res.status = status;
    res.set_content(
        Json{{"error", {{"kind", kind}, {"message", message}}}}.dump(),
        "application/json");
  }

  static void Reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static Json Body(const httplib::Request& req) {
    Json j = Json::parse(req.body, nullptr, false);
    if (j.is_discarded()) throw ValidationError("request body is not JSON");
    return j;
  }

  std::shared_ptr<Slot> FindStudy(const std::string& id) const {
    std::shared_lock lock(map_mu_);
    const auto it = studies_.find(id);
    if (it == studies_.end()) {
      throw NotFoundError("unknown study '" + id + "'");
    }
    return it->second;
  }

  // Session ids are "<study_id>-sNNNN".
  std::shared_ptr<Slot> StudyOfSession(const std::string& session_id) const {
    const auto cut = session_id.rfind("-s");
    if (cut == std::string::npos) {
      throw NotFoundError("unknown session '" + session_id + "'");
    }
    try {
      return FindStudy(session_id.substr(0, cut));
    } catch (const NotFoundError&) {
      throw NotFoundError("unknown session '" + session_id + "'");
    }
  }

  void CreateStudy(const httplib::Request& req, httplib::Response& res) {
    StudyInputs inputs = StudyInputsFromJson(Body(req));
    const Timestamp now = options_.clock();
    auto slot = std::make_shared<Slot>();
    std::unique_lock lock(map_mu_);
    std::string id;
    for (std::uint64_t attempt = 0;; ++attempt) {
      id = MakeStudyId(inputs, now, attempt);
      if (!studies_.count(id) &&
          !std::filesystem::exists(options_.data_dir / id)) {
        break;
      }
    }
    slot->study = Study::Create(options_.data_dir, id, std::move(inputs), now);
    const StudyState& s = slot->study->state();
    Json body{{"study_id", id},
              {"total_pairs", s.plan().TotalPairs()},
              {"static_pairs", s.plan().StaticPairs()},
              {"groups", s.plan().groups.size()},
              {"models", s.plan().model_ids},
              {"config", ToJson(s.plan().config)}};
    studies_[id] = std::move(slot);
    Reply(res, 201, body);
  }

  void CreateSession(const httplib::Request& req, httplib::Response& res) {
    const Json body = Body(req);
    if (!body.contains("annotator_id") || !body["annotator_id"].is_string()) {
      throw ValidationError("annotator_id: expected a string");
    }
    auto slot = FindStudy(req.matches[1]);
    std::lock_guard lock(slot->write_mu);
    const std::string id = slot->study->CreateSession(
        body["annotator_id"].get<std::string>(), options_.clock());
    const StudySession& s = slot->study->state().session(id);
    Reply(res, 201,
          Json{{"session_id", id},
               {"study_id", slot->study->state().study_id()},
               {"annotator_id", s.annotator_id()},
               {"status", StatusName(s.status())},
               {"created", FormatTimestamp(s.created())}});
  }

  void Next(const httplib::Request& req, httplib::Response& res) {
    auto slot = StudyOfSession(req.matches[1]);
    std::lock_guard lock(slot->write_mu);
    Reply(res, 200, slot->study->state().NextPayload(req.matches[1]));
  }

  void Judge(const httplib::Request& req, httplib::Response& res) {
    const std::string session_id = req.matches[1];
    const Json body = Body(req);
    if (!body.contains("pair_id") || !body["pair_id"].is_string()) {
      throw ValidationError("pair_id: expected a string");
    }
    const std::string pair_id = body["pair_id"].get<std::string>();
    auto slot = StudyOfSession(session_id);
    std::lock_guard lock(slot->write_mu);
    const StudySession& s = slot->study->state().session(session_id);
    const VideoPair* current = s.current();
    if (s.status() != SessionStatus::kActive || !current ||
        current->pair_id != pair_id) {
      // Let the engine phrase the conflict.
      std::array<Outcome, kNumMetrics> any{};
      slot->study->RecordJudgment(session_id, pair_id, any, options_.clock());
    }
    const auto verdicts =
        ParseVerdicts(body.value("verdicts", Json()), s.swapped());
    const RecordAck ack = slot->study->RecordJudgment(session_id, pair_id,
                                                      verdicts, options_.clock());
    Json out{{"records_appended", ack.records_appended},
             {"updated", ack.updated},
             {"rankings_changed", ack.rankings_changed},
             {"status", StatusName(ack.status)}};
    if (ack.rankings) out["current_rankings"] = ToJson(*ack.rankings);
    Reply(res, 200, out);
  }

  void Rankings(const httplib::Request& req, httplib::Response& res) {
    auto slot = FindStudy(req.matches[1]);
    // Snapshot read; does not wait for writers.
    Reply(res, 200, *slot->study->state().RankingsSnapshot());
  }

  void Export(const httplib::Request& req, httplib::Response& res) {
    auto slot = FindStudy(req.matches[1]);
    std::string text;
    {
      std::lock_guard lock(slot->write_mu);
      text = slot->study->Export();
    }
    res.status = 200;
    res.set_content(std::move(text), "application/x-ndjson");
  }

  ServiceOptions options_;
  mutable std::shared_mutex map_mu_;
  std::map<std::string, std::shared_ptr<Slot>> studies_;
};

}  // namespace arena
