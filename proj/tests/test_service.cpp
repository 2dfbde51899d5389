// Copyright 2026 The DISMOP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <regex>
#include <thread>

#include "dismop/embedding.hpp"
#include "dismop/io.hpp"
#include "dismop/service.hpp"
#include "fixtures.hpp"
#include "json.hpp"

using namespace dismop;
using fixture::error_of;
using nlohmann::json;

namespace {

const PolicyId kDdpg{AgentKind::kDdpg, DisorderScope::pooled(), Scale::kTask};
const PolicyId kBcq{AgentKind::kBcq, DisorderScope::only(Disorder::kAnxiety), Scale::kGoal};

// One trained workbench and a policies directory shared by every test.
struct Shared {
  Workbench wb;
  fixture::TempDir dir{"service-policies"};
  std::filesystem::path corpus_path;

  Shared() : wb(prepare_workbench(fixture::synth_corpus(24, 14, 0.2, 8), fixture::tiny_pipeline(2))) {
    save_checkpoint(fixture::train_cell(wb, kDdpg), dir / (kDdpg.name() + ".json"));
    save_checkpoint(fixture::train_cell(wb, kBcq), dir / (kBcq.name() + ".json"));
    corpus_path = dir / "corpus.jsonl.data";
    write_transcripts(wb.test, corpus_path);
  }
};

Shared& shared() {
  static Shared s;
  return s;
}

ServiceConfig config(const std::filesystem::path& state_dir = {}) {
  ServiceConfig cfg;
  cfg.policies_dir = shared().dir.path();
  cfg.state_dir = state_dir;
  cfg.interpretation_corpus = shared().corpus_path;
  cfg.id_seed = 17;
  return cfg;
}

json call(Service& svc, std::string_view method, std::string_view path, const json& body,
          int expect_status = 200) {
  const auto r = svc.handle(method, path, body.is_null() ? "" : body.dump());
  EXPECT_EQ(r.status, expect_status) << method << " " << path << " -> " << r.body;
  return json::parse(r.body);
}

std::string new_session(Service& svc, const PolicyId& id = kDdpg) {
  return call(svc, "POST", "/api/sessions", {{"disorder", "anxiety"}, {"policy_id", id.name()}})
      .at("session_id");
}

std::string turns_path(const std::string& id) { return "/api/sessions/" + id + "/turns"; }

json post_turn(Service& svc, const std::string& id, const Turn& t) {
  return call(svc, "POST", turns_path(id), {{"speaker", to_string(t.speaker)}, {"text", t.text}});
}

}  // namespace

TEST(Sessions, CreateReturnsDistinctUuids) {
  Service svc(config());
  const std::regex uuid("^[0-9a-f]{8}-[0-9a-f]{4}-4[0-9a-f]{3}-[89ab][0-9a-f]{3}-[0-9a-f]{12}$");
  const std::string a = new_session(svc), b = new_session(svc);
  EXPECT_TRUE(std::regex_match(a, uuid)) << a;
  EXPECT_TRUE(std::regex_match(b, uuid)) << b;
  EXPECT_NE(a, b);
}

TEST(Sessions, UnknownPolicyAndBadRequests) {
  Service svc(config());
  const json e = call(svc, "POST", "/api/sessions",
                      {{"disorder", "anxiety"}, {"policy_id", "td3-bond-all"}}, 404);
  EXPECT_EQ(e.at("error"), "UnknownPolicy");
  EXPECT_TRUE(e.contains("message"));
  EXPECT_EQ(call(svc, "POST", "/api/sessions", {{"disorder", "flu"}, {"policy_id", kDdpg.name()}}, 400)
                .at("error"),
            "InvalidArgument");
  EXPECT_EQ(svc.handle("POST", "/api/sessions", "{").status, 400);
  EXPECT_EQ(call(svc, "GET", "/api/sessions/nope", nullptr, 404).at("error"), "UnknownSession");
  EXPECT_EQ(call(svc, "DELETE", "/api/sessions", nullptr, 404).at("error"), "NotFound");
  EXPECT_EQ(call(svc, "GET", "/other", nullptr, 404).at("error"), "NotFound");
}

TEST(Turns, RecommendationOnlyAfterCompletePair) {
  Service svc(config());
  const std::string id = new_session(svc);
  const json t0 = post_turn(svc, id, fixture::turn(Speaker::kTherapist, "tell me about your week"));
  EXPECT_FALSE(t0.contains("recommendation"));
  EXPECT_EQ(t0.at("alliance").size(), 36u);
  EXPECT_TRUE(t0.at("scales").contains("task"));
  const json t1 = post_turn(svc, id, fixture::turn(Speaker::kPatient, "it was hard to sleep"));
  ASSERT_TRUE(t1.contains("recommendation"));
  EXPECT_GE(t1["recommendation"].at("margin").get<double>(), 0.0);
  EXPECT_FALSE(t1["recommendation"].at("label").get<std::string>().empty());
  const json s = call(svc, "GET", "/api/sessions/" + id, nullptr);
  EXPECT_EQ(s.at("turns").size(), 2u);
  EXPECT_EQ(s.at("pending_recommendation"), t1.at("recommendation"));
}

TEST(Turns, LeadingPatientTurnGetsNoRecommendation) {
  Service svc(config());
  const std::string id = new_session(svc);
  EXPECT_FALSE(post_turn(svc, id, fixture::turn(Speaker::kPatient, "hello there")).contains("recommendation"));
}

TEST(Turns, EmptyText) {
  Service svc(config());
  const std::string id = new_session(svc);
  EXPECT_EQ(call(svc, "POST", turns_path(id), {{"speaker", "patient"}, {"text", "  ..  "}}, 400)
                .at("error"),
            "EmptyText");
  EXPECT_EQ(call(svc, "POST", turns_path(id), {{"speaker", "patient"}}, 400).at("error"),
            "InvalidArgument");
  EXPECT_EQ(call(svc, "POST", turns_path("missing"), {{"speaker", "patient"}, {"text", "hi"}}, 404)
                .at("error"),
            "UnknownSession");
}

TEST(Feedback, RatingsIndicesAndRewards) {
  EXPECT_EQ(feedback_reward(5), 1.0);
  EXPECT_EQ(feedback_reward(1), -1.0);
  EXPECT_EQ(feedback_reward(3), 0.0);
  EXPECT_EQ(error_of([] { feedback_reward(0); }), ErrorCode::kBadRating);
  EXPECT_EQ(error_of([] { feedback_reward(6); }), ErrorCode::kBadRating);

  Service svc(config());
  const std::string id = new_session(svc);
  post_turn(svc, id, fixture::turn(Speaker::kTherapist, "how are you"));
  post_turn(svc, id, fixture::turn(Speaker::kPatient, "tired"));
  const std::string fb = "/api/sessions/" + id + "/feedback";
  EXPECT_EQ(call(svc, "POST", fb, {{"turn_index", 1}, {"accepted", true}, {"rating", 5}}).at("reward"),
            1.0);
  EXPECT_EQ(call(svc, "POST", fb, {{"turn_index", 1}, {"accepted", false}, {"rating", 0}}, 400)
                .at("error"),
            "BadRating");
  EXPECT_EQ(call(svc, "POST", fb, {{"turn_index", 2}, {"accepted", true}, {"rating", 4}}, 400)
                .at("error"),
            "BadIndex");
  EXPECT_EQ(call(svc, "POST", fb, {{"turn_index", -1}, {"accepted", true}, {"rating", 4}}, 400)
                .at("error"),
            "BadIndex");
  const json s = call(svc, "GET", "/api/sessions/" + id, nullptr);
  ASSERT_EQ(s.at("feedback_log").size(), 1u);
  EXPECT_EQ(s["feedback_log"][0].at("reward"), 1.0);
}

TEST(Persistence, RestartRestoresSessionsAndFeedback) {
  fixture::TempDir state("service-state");
  std::string id;
  json before;
  {
    Service svc(config(state.path()));
    id = new_session(svc);
    post_turn(svc, id, fixture::turn(Speaker::kTherapist, "what brings you in"));
    post_turn(svc, id, fixture::turn(Speaker::kPatient, "i worry all the time"));
    call(svc, "POST", "/api/sessions/" + id + "/feedback",
         {{"turn_index", 1}, {"accepted", false}, {"rating", 2}});
    before = call(svc, "GET", "/api/sessions/" + id, nullptr);
  }
  Service again(config(state.path()));
  const json after = call(again, "GET", "/api/sessions/" + id, nullptr);
  EXPECT_EQ(after.at("turns"), before.at("turns"));
  EXPECT_EQ(after.at("feedback_log"), before.at("feedback_log"));
  EXPECT_EQ(after.at("pending_recommendation"), before.at("pending_recommendation"));

  const auto records = load_feedback_log(state / "feedback.jsonl");
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].reward, -0.5);
  const auto overrides = feedback_overrides(records);
  EXPECT_EQ(overrides[0].session_id, id);
  const Corpus log = load_session_log(state / "sessions.jsonl");
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log.sessions[0].turns.size(), 2u);
  EXPECT_EQ(log.sessions[0].disorder, Disorder::kAnxiety);
}

TEST(Equivalence, LiveMatchesBatch) {
  Service svc(config());
  const auto& wb = shared().wb;
  const LoadedPolicy& policy = svc.policy(kDdpg.name());
  std::size_t compared = 0;
  for (const auto& session : wb.test.sessions) {
    const std::string id = new_session(svc);
    std::vector<json> live;
    for (const auto& t : session.turns) live.push_back(post_turn(svc, id, t));
    for (std::size_t i = 0; i < session.turns.size(); ++i) {
      const ScaleScores want = scale_scores(
          svc.inventory(), score_turn(svc.inventory(), embed_text(wb.config.embedder, session.turns[i].text)));
      EXPECT_EQ(live[i]["scales"]["task"].get<double>(), want.task);
      EXPECT_EQ(live[i]["scales"]["bond"].get<double>(), want.bond);
      EXPECT_EQ(live[i]["scales"]["goal"].get<double>(), want.goal);
    }
    Corpus one;
    one.sessions.push_back(session);
    for (const auto& t : checkpoint_transitions(policy.checkpoint, one, svc.inventory())) {
      const TopicId batch =
          decode_action(policy.checkpoint.space, policy.agent->select_action(t.state)).topic_id;
      ASSERT_TRUE(live[t.meta.patient_turn].contains("recommendation"));
      EXPECT_EQ(live[t.meta.patient_turn]["recommendation"]["topic_id"].get<TopicId>(), batch);
      ++compared;
    }
  }
  EXPECT_GT(compared, 0u);
}

TEST(Concurrency, PerSessionOrderIsPreserved) {
  Service svc(config());
  const std::string shared_id = new_session(svc);
  constexpr int kThreads = 4, kTurns = 25;
  std::vector<std::thread> workers;
  for (int w = 0; w < kThreads; ++w) {
    workers.emplace_back([&, w] {
      const std::string own = new_session(svc, kBcq);
      for (int i = 0; i < kTurns; ++i) {
        const std::string text = "worker" + std::to_string(w) + " step" + std::to_string(i);
        svc.add_turn(shared_id, i % 2 ? Speaker::kPatient : Speaker::kTherapist, text);
        svc.add_turn(own, i % 2 ? Speaker::kPatient : Speaker::kTherapist, text);
      }
    });
  }
  for (auto& t : workers) t.join();
  const json s = json::parse(svc.session_json(shared_id));
  ASSERT_EQ(s.at("turns").size(), std::size_t(kThreads * kTurns));
  std::vector<int> next(kThreads, 0);
  for (std::size_t i = 0; i < s["turns"].size(); ++i) {
    const auto& t = s["turns"][i];
    EXPECT_EQ(t.at("turn_index"), i);
    const std::string text = t.at("text");
    const int w = text[6] - '0';
    EXPECT_EQ(text, "worker" + std::to_string(w) + " step" + std::to_string(next[w]++));
  }
}

TEST(Policies, ListingAndInterpretation) {
  Service svc(config());
  const json list = call(svc, "GET", "/api/policies", nullptr);
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0].at("policy_id"), kBcq.name());
  EXPECT_EQ(list[1].at("row_label"), "DISMOP-DDPG-TASK");
  EXPECT_TRUE(list[1].at("compatible").get<bool>());
  EXPECT_EQ(list[1].at("topics").size(), 7u);

  const json interp = call(svc, "GET", "/api/policies/" + kDdpg.name() + "/interpretation", nullptr);
  EXPECT_EQ(interp.at("trajectory").at("endpoint_index"), 10);
  EXPECT_EQ(interp.at("trajectory").at("points").size(), 11u);
  EXPECT_EQ(interp.at("transition_matrix").at("matrix").size(), 7u);
  EXPECT_EQ(call(svc, "GET", "/api/policies/nope/interpretation", nullptr, 404).at("error"),
            "UnknownPolicy");
}

TEST(Policies, IncompatibleEmbedderIsRefused) {
  ServiceConfig cfg = config();
  cfg.pipeline.embedder.dim = 300;
  Service svc(cfg);
  const json list = call(svc, "GET", "/api/policies", nullptr);
  EXPECT_FALSE(list[0].at("compatible").get<bool>());
  const json e = call(svc, "POST", "/api/sessions",
                      {{"disorder", "anxiety"}, {"policy_id", kDdpg.name()}}, 409);
  EXPECT_EQ(e.at("error"), "ProvenanceMismatch");
}

TEST(Config, ParsesKeys) {
  const auto cfg = parse_service_config(
      R"({"policies_dir":"p","state_dir":"s","id_seed":5,"pipeline":{"frame_size":4}})");
  EXPECT_EQ(cfg.policies_dir, "p");
  EXPECT_EQ(cfg.state_dir, "s");
  EXPECT_EQ(cfg.id_seed, 5u);
  EXPECT_EQ(cfg.pipeline.frame_size, 4u);
  EXPECT_EQ(error_of([] { parse_service_config("{"); }), ErrorCode::kInvalidConfig);
}
