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

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "dismop/checkpoint.hpp"
#include "dismop/corpus.hpp"
#include "dismop/interpret.hpp"

namespace dismop {

struct ServiceConfig {
  std::filesystem::path policies_dir;
  // sessions.jsonl and feedback.jsonl live here; empty disables persistence.
  std::filesystem::path state_dir;
  // Sessions used to compute interpretations on demand; empty means only
  // precomputed "<policy>.interpretation.json" files in policies_dir are served.
  std::filesystem::path interpretation_corpus;
  PipelineConfig pipeline;  // runtime embedder and inventory
  // Seeds session-id generation; absent means a random device seed.
  std::optional<std::uint64_t> id_seed;
};

// Keys: policies_dir, state_dir, interpretation_corpus, pipeline{...}, id_seed.
ServiceConfig parse_service_config(std::string_view json_text);

struct Recommendation {
  TopicId topic_id = 0;
  std::string label;
  double margin = 0.0;
};

struct LiveTurn {
  Turn turn;
  Vec embedding;
  AllianceVector alliance{};
  ScaleScores scales;
  double topic_margin = 0.0;
  std::optional<Recommendation> recommendation;  // made right after this turn
};

struct FeedbackRecord {
  std::string session_id;
  std::size_t turn_index = 0;
  bool accepted = false;
  int rating = 3;
  double reward = 0.0;  // (rating - 3) / 2
  std::string timestamp;
};

// rating in 1..5; throws kBadRating.
double feedback_reward(int rating);

struct LiveSession {
  std::string session_id;
  Disorder disorder = Disorder::kAnxiety;
  std::string policy_id;
  std::vector<LiveTurn> turns;
  std::optional<Recommendation> pending;
  std::vector<FeedbackRecord> feedback;
  mutable std::mutex mutex;
};

struct LoadedPolicy {
  std::string policy_id;  // file stem
  Checkpoint checkpoint;
  std::unique_ptr<Agent> agent;
  std::vector<std::string> provenance_issues;  // empty when compatible
};

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON
};

// The live companion: sessions, per-turn scoring, recommendations, feedback.
// Operations on one session are serialized by its mutex; different sessions
// proceed in parallel; policies are shared read-only.
class Service {
 public:
  explicit Service(ServiceConfig cfg);

  std::string create_session(Disorder disorder, const std::string& policy_id);
  // Returns the JSON view of the new turn.
  std::string add_turn(const std::string& session_id, Speaker speaker, std::string_view text);
  void record_feedback(const std::string& session_id, std::size_t turn_index, bool accepted,
                       int rating);
  std::string session_json(const std::string& session_id) const;
  std::string policies_json() const;
  std::string interpretation_json(const std::string& policy_id);

  // Routes one API request; errors become {"error": code, "message": text}.
  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body);

  const Inventory& inventory() const { return inventory_; }
  const LoadedPolicy& policy(const std::string& policy_id) const;
  std::vector<std::string> policy_ids() const;

 private:
  std::shared_ptr<LiveSession> find(const std::string& session_id) const;
  std::string new_session_id();
  std::string append_turn(LiveSession& s, Speaker speaker, std::string_view text);
  void replay_state();
  void log_event(const std::string& file, const std::string& line);

  ServiceConfig cfg_;
  Inventory inventory_;
  std::map<std::string, LoadedPolicy> policies_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions_;

  std::mutex id_mutex_;
  Rng id_rng_;

  std::mutex log_mutex_;
  std::mutex interpretation_mutex_;
  std::map<std::string, std::string> interpretations_;
};

// State vector the service feeds the policy after the latest complete pair:
// frame_state over the last min(W, pairs) pairs. Empty when no pair exists.
Vec live_state(const SessionTranscript& transcript, const std::vector<Vec>& turn_embeddings,
               std::size_t frame_size, ContextMode mode);

// Reads a feedback log and turns each record into a reward override keyed by
// (session id, turn index of the patient turn the rated recommendation
// followed).
std::vector<FeedbackRecord> load_feedback_log(const std::filesystem::path& path);
std::vector<RewardOverride> feedback_overrides(const std::vector<FeedbackRecord>& records);

// Rebuilds transcripts from a sessions.jsonl event log. Turns come back
// unlabeled, so transitions built from them rely on auto-labeling.
Corpus load_session_log(const std::filesystem::path& path);

}  // namespace dismop
