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

#include "arena/service.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "arena/simulation.hpp"

namespace arena {
namespace {

namespace fs = std::filesystem;

class Server {
 public:
  explicit Server(ServiceOptions options) : service_(std::move(options)) {
    service_.Register(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~Server() {
    server_.stop();
    thread_.join();
  }
  int port() const { return port_; }

 private:
  ArenaService service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("arena_service_test_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  ServiceOptions Options() {
    ServiceOptions o;
    o.data_dir = dir_;
    o.clock = [this] {
      return Timestamp{} + std::chrono::hours(490000) +
             std::chrono::seconds(tick_++);
    };
    return o;
  }

  static Json Parse(const httplib::Result& r) {
    EXPECT_TRUE(r) << "request failed";
    return Json::parse(r->body);
  }

  static Json StudyBody(int prompts) {
    GroundTruth truth = UniformTruth({"m0", "m1", "m2", "m3", "m4"},
                                     {0.0, 0.4, 0.8, 1.2, 1.6}, 1.3);
    StudyOptions options;
    options.n_prompts = prompts;
    Json videos = Json::array();
    Json features = Json::object();
    for (Video v : SyntheticVideos(truth, options, 3)) {
      features[v.id] = *v.feature_score;
      v.feature_score.reset();
      v.uri = "https://media.example/" + v.id + ".mp4";
      videos.push_back(ToJson(v));
    }
    return Json{{"videos", videos},
                {"features", features},
                {"config",
                 {{"alpha", 1.0},
                  {"n0_pairs", 20},
                  {"batch_groups", 2},
                  {"update_every_batches", 1},
                  {"stability_window", 3},
                  {"seed", 5},
                  {"driving_score", "PER_METRIC_MEAN"}}}};
  }

  static Json AllVerdicts(const std::string& v) {
    Json out = Json::object();
    for (MetricId m : kAllMetrics) out[std::string(MetricName(m))] = v;
    return out;
  }

  fs::path dir_;
  std::atomic<int> tick_{0};
};

TEST_F(ServiceTest, EndToEndSession) {
  Server server(Options());
  httplib::Client client("127.0.0.1", server.port());

  auto r = client.Post("/v1/studies", StudyBody(10).dump(), "application/json");
  ASSERT_EQ(r->status, 201) << r->body;
  const Json study = Parse(r);
  EXPECT_EQ(study["total_pairs"], 100);
  const std::string sid = study["study_id"];

  const Json before = Parse(client.Get("/v1/studies/" + sid + "/rankings"));
  EXPECT_EQ(before["status"], "static_phase_in_progress");

  r = client.Post("/v1/studies/" + sid + "/sessions",
                  R"({"annotator_id":"alice"})", "application/json");
  ASSERT_EQ(r->status, 201) << r->body;
  const std::string session = Parse(r)["session_id"];
  r = client.Post("/v1/studies/" + sid + "/sessions",
                  R"({"annotator_id":"alice"})", "application/json");
  EXPECT_EQ(r->status, 409);

  const Json next = Parse(client.Get("/v1/sessions/" + session + "/next"));
  EXPECT_EQ(next["status"], "ACTIVE");
  EXPECT_EQ(next["metrics"].size(), 6u);
  EXPECT_NE(next["left"]["uri"].get<std::string>().find("https://"),
            std::string::npos);
  // Idempotent until judged.
  EXPECT_EQ(Parse(client.Get("/v1/sessions/" + session + "/next")), next);

  // Partial verdicts are a validation error.
  Json partial = AllVerdicts("tie");
  partial.erase("human_preference");
  r = client.Post("/v1/sessions/" + session + "/judgments",
                  Json{{"pair_id", next["pair_id"]}, {"verdicts", partial}}.dump(),
                  "application/json");
  EXPECT_EQ(r->status, 422) << r->body;

  // Wrong pair is a conflict.
  r = client.Post("/v1/sessions/" + session + "/judgments",
                  Json{{"pair_id", "nope|a|b"}, {"verdicts", AllVerdicts("tie")}}
                      .dump(),
                  "application/json");
  EXPECT_EQ(r->status, 409) << r->body;

  // Judge "left" every time until the session ends.
  int judged = 0;
  bool saw_update = false;
  std::string status = "ACTIVE";
  std::string first_pair = next["pair_id"];
  while (status == "ACTIVE") {
    const Json n = Parse(client.Get("/v1/sessions/" + session + "/next"));
    if (n["status"] != "ACTIVE") break;
    r = client.Post(
        "/v1/sessions/" + session + "/judgments",
        Json{{"pair_id", n["pair_id"]}, {"verdicts", AllVerdicts("left")}}.dump(),
        "application/json");
    ASSERT_EQ(r->status, 200) << r->body;
    const Json ack = Parse(r);
    EXPECT_EQ(ack["records_appended"], 6);
    saw_update |= ack["updated"].get<bool>();
    status = ack["status"];
    ++judged;
  }
  EXPECT_TRUE(saw_update);
  EXPECT_GE(judged, 20);
  const Json done = Parse(client.Get("/v1/sessions/" + session + "/next"));
  EXPECT_TRUE(done["status"] == "COMPLETE" || done["status"] == "STOPPED_EARLY");
  EXPECT_FALSE(done.contains("pair_id"));

  // Already judged pair.
  r = client.Post("/v1/sessions/" + session + "/judgments",
                  Json{{"pair_id", first_pair}, {"verdicts", AllVerdicts("tie")}}
                      .dump(),
                  "application/json");
  EXPECT_EQ(r->status, 409);

  const Json a = Parse(client.Get("/v1/studies/" + sid + "/rankings"));
  const Json b = Parse(client.Get("/v1/studies/" + sid + "/rankings"));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a["status"], "ok");
  EXPECT_EQ(a["metrics"].size(), 6u);
  EXPECT_EQ(a["annotation_count"], judged);

  r = client.Get("/v1/studies/" + sid + "/export");
  ASSERT_EQ(r->status, 200);
  const ReplayResult replay = ReplayLog(r->body);
  EXPECT_EQ(replay.state->records().size(), 6u * judged);

  EXPECT_EQ(client.Get("/v1/studies/zzz/rankings")->status, 404);
  EXPECT_EQ(client.Get("/v1/sessions/zzz-s0001/next")->status, 404);
}

TEST_F(ServiceTest, CreateStudyErrors) {
  Server server(Options());
  httplib::Client client("127.0.0.1", server.port());
  Json body = StudyBody(2);
  body["features"].erase(body["videos"][0]["id"].get<std::string>());
  auto r = client.Post("/v1/studies", body.dump(), "application/json");
  EXPECT_EQ(r->status, 422);
  EXPECT_NE(r->body.find(body["videos"][0]["id"].get<std::string>()),
            std::string::npos);
  EXPECT_EQ(client.Post("/v1/studies", "{oops", "application/json")->status,
            422);
  // Two models, one prompt.
  Json tiny = {{"videos",
                {{{"id", "v1"}, {"prompt_id", "p"}, {"model_id", "a"}},
                 {{"id", "v2"}, {"prompt_id", "p"}, {"model_id", "b"}}}},
               {"features", {{"v1", 0.1}, {"v2", 0.9}}}};
  r = client.Post("/v1/studies", tiny.dump(), "application/json");
  ASSERT_EQ(r->status, 201);
  EXPECT_EQ(Parse(r)["total_pairs"], 1);
}

TEST_F(ServiceTest, RestartKeepsStateAndAtMostOnce) {
  std::string sid, session, judged_pair;
  Json next_after;
  {
    Server server(Options());
    httplib::Client client("127.0.0.1", server.port());
    sid = Parse(client.Post("/v1/studies", StudyBody(5).dump(),
                            "application/json"))["study_id"];
    session = Parse(client.Post("/v1/studies/" + sid + "/sessions",
                                R"({"annotator_id":"bob"})",
                                "application/json"))["session_id"];
    const Json n = Parse(client.Get("/v1/sessions/" + session + "/next"));
    judged_pair = n["pair_id"];
    ASSERT_EQ(client
                  .Post("/v1/sessions/" + session + "/judgments",
                        Json{{"pair_id", judged_pair},
                             {"verdicts", AllVerdicts("right")}}
                            .dump(),
                        "application/json")
                  ->status,
              200);
    next_after = Parse(client.Get("/v1/sessions/" + session + "/next"));
  }
  Server server(Options());
  httplib::Client client("127.0.0.1", server.port());
  EXPECT_EQ(Parse(client.Get("/v1/sessions/" + session + "/next")), next_after);
  auto r = client.Post(
      "/v1/sessions/" + session + "/judgments",
      Json{{"pair_id", judged_pair}, {"verdicts", AllVerdicts("left")}}.dump(),
      "application/json");
  EXPECT_EQ(r->status, 409);
}

TEST_F(ServiceTest, TokenIsEnforced) {
  ServiceOptions o = Options();
  o.token = "s3cret";
  Server server(o);
  httplib::Client client("127.0.0.1", server.port());
  EXPECT_EQ(client.Get("/v1/studies/x/rankings")->status, 401);
  httplib::Headers h = {{"Authorization", "Bearer s3cret"}};
  EXPECT_EQ(client.Get("/v1/studies/x/rankings", h)->status, 404);
}

TEST_F(ServiceTest, ConcurrentSessionsKeepLogOrdered) {
  Server server(Options());
  httplib::Client setup("127.0.0.1", server.port());
  const std::string sid = Parse(setup.Post("/v1/studies", StudyBody(8).dump(),
                                           "application/json"))["study_id"];
  std::vector<std::thread> workers;
  std::atomic<int> failures{0};
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      httplib::Client client("127.0.0.1", server.port());
      const auto created = client.Post(
          "/v1/studies/" + sid + "/sessions",
          Json{{"annotator_id", "w" + std::to_string(w)}}.dump(),
          "application/json");
      if (!created || created->status != 201) {
        ++failures;
        return;
      }
      const std::string session = Json::parse(created->body)["session_id"];
      for (int k = 0; k < 15; ++k) {
        const auto n = client.Get("/v1/sessions/" + session + "/next");
        const Json next = Json::parse(n->body);
        if (next["status"] != "ACTIVE") break;
        const auto r = client.Post(
            "/v1/sessions/" + session + "/judgments",
            Json{{"pair_id", next["pair_id"]},
                 {"verdicts", AllVerdicts(k % 2 ? "left" : "tie")}}
                .dump(),
            "application/json");
        if (!r || r->status != 200) ++failures;
      }
    });
  }
  for (auto& t : workers) t.join();
  EXPECT_EQ(failures.load(), 0);
  const auto r = setup.Get("/v1/studies/" + sid + "/export");
  const ReplayResult replay = ReplayLog(r->body);
  EXPECT_EQ(replay.state->sessions().size(), 4u);
  EXPECT_EQ(replay.state->records().size(), 4u * 15u * 6u);
  EXPECT_TRUE(replay.missing.empty());
}

TEST(BindAddress, Parses) {
  EXPECT_EQ(ParseBindAddress("0.0.0.0:9000"),
            (std::pair<std::string, int>{"0.0.0.0", 9000}));
  EXPECT_EQ(ParseBindAddress("8080"),
            (std::pair<std::string, int>{"127.0.0.1", 8080}));
  EXPECT_THROW(ParseBindAddress("host:99999"), ValidationError);
  EXPECT_THROW(ParseBindAddress("host:x"), ValidationError);
}

}  // namespace
}  // namespace arena
