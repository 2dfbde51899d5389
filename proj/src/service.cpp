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

#include "dismop/service.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <random>
#include <sstream>

#include "dismop/error.hpp"
#include "dismop/io.hpp"
#include "json.hpp"

namespace dismop {

using nlohmann::json;

namespace {

constexpr const char* kSessionLog = "sessions.jsonl";
constexpr const char* kFeedbackLog = "feedback.jsonl";
constexpr std::string_view kInterpretationSuffix = ".interpretation.json";

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t device_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

json recommendation_json(const Recommendation& r) {
  return {{"topic_id", r.topic_id}, {"label", r.label}, {"margin", r.margin}};
}

json scales_json(const ScaleScores& s) {
  return {{"task", s.task}, {"bond", s.bond}, {"goal", s.goal}};
}

json turn_json(const LiveTurn& t, std::size_t index, const TopicCatalog& catalog) {
  json j;
  j["turn_index"] = index;
  j["speaker"] = to_string(t.turn.speaker);
  j["text"] = t.turn.text;
  j["alliance"] = t.alliance;
  j["scales"] = scales_json(t.scales);
  j["topic"] = *t.turn.topic;
  j["topic_label"] = catalog.label(*t.turn.topic);
  j["topic_margin"] = t.topic_margin;
  if (t.recommendation) j["recommendation"] = recommendation_json(*t.recommendation);
  return j;
}

json feedback_json(const FeedbackRecord& f) {
  return {{"session_id", f.session_id}, {"turn_index", f.turn_index},
          {"accepted", f.accepted},     {"rating", f.rating},
          {"reward", f.reward},         {"timestamp", f.timestamp}};
}

FeedbackRecord feedback_from_json(const json& j) {
  FeedbackRecord f;
  f.session_id = j.at("session_id").get<std::string>();
  f.turn_index = j.at("turn_index").get<std::size_t>();
  f.accepted = j.at("accepted").get<bool>();
  f.rating = j.at("rating").get<int>();
  f.reward = feedback_reward(f.rating);
  f.timestamp = j.value("timestamp", std::string());
  return f;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownSession:
    case ErrorCode::kUnknownPolicy:
    case ErrorCode::kNotFound:
    case ErrorCode::kEmptyTestSet:
      return 404;
    case ErrorCode::kProvenanceMismatch:
      return 409;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParseError:
    case ErrorCode::kEmptyText:
    case ErrorCode::kZeroNorm:
    case ErrorCode::kBadIndex:
    case ErrorCode::kBadRating:
    case ErrorCode::kUnknownTopic:
      return 400;
    default:
      return 500;
  }
}

HttpResponse error_response(int status, std::string_view code, std::string_view message) {
  return {status, json{{"error", code}, {"message", message}}.dump()};
}

std::vector<std::string> split_path(std::string_view path) {
  if (const auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto end = path.find('/', start);
    const auto piece = path.substr(start, end == std::string_view::npos ? end : end - start);
    if (!piece.empty()) parts.emplace_back(piece);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return parts;
}

json parse_body(std::string_view body) {
  try {
    json j = json::parse(body.empty() ? std::string_view("{}") : body);
    if (!j.is_object()) fail(ErrorCode::kParseError, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParseError, std::string("request body: ") + e.what());
  }
}

template <typename T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) fail(ErrorCode::kInvalidArgument, std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kInvalidArgument, std::string("field '") + name + "' has the wrong type");
  }
}

}  // namespace

double feedback_reward(int rating) {
  if (rating < 1 || rating > 5) {
    fail(ErrorCode::kBadRating, "rating " + std::to_string(rating) + " outside 1..5");
  }
  return (rating - 3) / 2.0;
}

ServiceConfig parse_service_config(std::string_view json_text) {
  ServiceConfig cfg;
  try {
    const json j = json::parse(json_text);
    cfg.policies_dir = j.value("policies_dir", std::string());
    cfg.state_dir = j.value("state_dir", std::string());
    cfg.interpretation_corpus = j.value("interpretation_corpus", std::string());
    if (j.contains("pipeline")) cfg.pipeline = parse_pipeline_config(j["pipeline"].dump());
    if (j.contains("id_seed")) cfg.id_seed = j["id_seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidConfig, std::string("service config: ") + e.what());
  }
  return cfg;
}

Vec live_state(const SessionTranscript& transcript, const std::vector<Vec>& turn_embeddings,
               std::size_t frame_size, ContextMode mode) {
  const auto pairs = extract_pairs(transcript);
  if (pairs.empty()) return {};
  const std::size_t take = std::min(frame_size, pairs.size());
  std::vector<Vec> pair_emb;
  for (std::size_t k = pairs.size() - take; k < pairs.size(); ++k) {
    pair_emb.push_back(pair_embedding(turn_embeddings[pairs[k].therapist],
                                      turn_embeddings[pairs[k].patient]));
  }
  return frame_state(pair_emb, turn_embeddings[pairs.back().patient], mode);
}

// --- Service -------------------------------------------------------------------

Service::Service(ServiceConfig cfg)
    : cfg_(std::move(cfg)),
      inventory_(load_pipeline_inventory(cfg_.pipeline)),
      id_rng_(cfg_.id_seed ? *cfg_.id_seed : device_seed()) {
  if (!cfg_.policies_dir.empty()) {
    if (!std::filesystem::is_directory(cfg_.policies_dir)) {
      fail(ErrorCode::kIo, "policies directory '" + cfg_.policies_dir.string() + "' not found");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(cfg_.policies_dir)) {
      const std::string name = entry.path().filename().string();
      if (entry.is_regular_file() && entry.path().extension() == ".json" &&
          !ends_with(name, kInterpretationSuffix)) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    const std::string embedder_hash = config_hash(cfg_.pipeline.embedder);
    for (const auto& path : files) {
      LoadedPolicy p;
      p.policy_id = path.stem().string();
      p.checkpoint = load_checkpoint(path);
      p.agent = restore_agent(p.checkpoint);
      p.provenance_issues = check_provenance(
          p.checkpoint, {embedder_hash, inventory_.hash(), p.checkpoint.hashes.actionspace},
          false);
      policies_.emplace(p.policy_id, std::move(p));
    }
  }
  if (!cfg_.state_dir.empty()) {
    std::filesystem::create_directories(cfg_.state_dir);
    replay_state();
  }
}

const LoadedPolicy& Service::policy(const std::string& policy_id) const {
  const auto it = policies_.find(policy_id);
  if (it == policies_.end()) fail(ErrorCode::kUnknownPolicy, "unknown policy '" + policy_id + "'");
  return it->second;
}

std::vector<std::string> Service::policy_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, p] : policies_) ids.push_back(id);
  return ids;
}

std::shared_ptr<LiveSession> Service::find(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    fail(ErrorCode::kUnknownSession, "unknown session '" + session_id + "'");
  }
  return it->second;
}

std::string Service::new_session_id() {
  std::lock_guard lock(id_mutex_);
  const std::uint64_t hi = id_rng_.next_u64();
  const std::uint64_t lo = id_rng_.next_u64();
  // RFC 4122 version 4 layout.
  char buf[40];
  std::snprintf(buf, sizeof buf, "%08x-%04x-4%03x-%04x-%012llx",
                static_cast<unsigned>(hi >> 32), static_cast<unsigned>((hi >> 16) & 0xffff),
                static_cast<unsigned>(hi & 0x0fff),
                static_cast<unsigned>(0x8000 | ((lo >> 48) & 0x3fff)),
                static_cast<unsigned long long>(lo & 0xffffffffffffULL));
  return buf;
}

void Service::log_event(const std::string& file, const std::string& line) {
  if (cfg_.state_dir.empty()) return;
  std::lock_guard lock(log_mutex_);
  append_line(cfg_.state_dir / file, line);
}

std::string Service::create_session(Disorder disorder, const std::string& policy_id) {
  const LoadedPolicy& p = policy(policy_id);
  if (!p.provenance_issues.empty()) {
    std::string msg = "policy '" + policy_id + "' is incompatible with the runtime:";
    for (const auto& issue : p.provenance_issues) msg += " " + issue + ";";
    fail(ErrorCode::kProvenanceMismatch, msg);
  }
  auto session = std::make_shared<LiveSession>();
  session->disorder = disorder;
  session->policy_id = policy_id;
  {
    std::unique_lock lock(sessions_mutex_);
    do {
      session->session_id = new_session_id();
    } while (sessions_.count(session->session_id) > 0);
    sessions_.emplace(session->session_id, session);
  }
  log_event(kSessionLog, json{{"event", "create"},
                              {"session_id", session->session_id},
                              {"disorder", to_string(disorder)},
                              {"policy_id", policy_id},
                              {"timestamp", utc_timestamp()}}
                             .dump());
  return session->session_id;
}

std::string Service::append_turn(LiveSession& s, Speaker speaker, std::string_view text) {
  const LoadedPolicy& p = policy(s.policy_id);
  const Checkpoint& ckpt = p.checkpoint;
  const ActionSpace& space = ckpt.space;

  LiveTurn lt;
  lt.turn.speaker = speaker;
  lt.turn.text = std::string(text);
  lt.embedding = embed_text(cfg_.pipeline.embedder, text);
  lt.alliance = score_turn(inventory_, lt.embedding);
  lt.scales = scale_scores(inventory_, lt.alliance);
  const Decoded topic = decode_action(space, space.project(lt.embedding));
  lt.turn.topic = topic.topic_id;
  lt.topic_margin = topic.margin;
  s.turns.push_back(std::move(lt));

  if (speaker == Speaker::kPatient) {
    SessionTranscript transcript;
    std::vector<Vec> embeddings;
    for (const auto& t : s.turns) {
      transcript.turns.push_back(t.turn);
      embeddings.push_back(t.embedding);
    }
    const auto pairs = extract_pairs(transcript);
    // Only a patient turn that closes a pair triggers a recommendation.
    if (!pairs.empty() && pairs.back().patient + 1 == s.turns.size()) {
      const Vec state = live_state(transcript, embeddings, ckpt.frame_size, ckpt.context_mode);
      const Decoded d = decode_action(space, p.agent->select_action(state));
      Recommendation r{d.topic_id, space.catalog.label(d.topic_id), d.margin};
      s.turns.back().recommendation = r;
      s.pending = r;
    }
  }
  return turn_json(s.turns.back(), s.turns.size() - 1, space.catalog).dump();
}

std::string Service::add_turn(const std::string& session_id, Speaker speaker,
                              std::string_view text) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  std::string out = append_turn(*s, speaker, text);
  log_event(kSessionLog, json{{"event", "turn"},
                              {"session_id", session_id},
                              {"speaker", to_string(speaker)},
                              {"text", text},
                              {"timestamp", utc_timestamp()}}
                             .dump());
  return out;
}

void Service::record_feedback(const std::string& session_id, std::size_t turn_index,
                              bool accepted, int rating) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  FeedbackRecord f;
  f.reward = feedback_reward(rating);
  if (turn_index >= s->turns.size()) {
    fail(ErrorCode::kBadIndex, "turn_index " + std::to_string(turn_index) + " but session has " +
                                   std::to_string(s->turns.size()) + " turns");
  }
  f.session_id = session_id;
  f.turn_index = turn_index;
  f.accepted = accepted;
  f.rating = rating;
  f.timestamp = utc_timestamp();
  s->feedback.push_back(f);
  log_event(kFeedbackLog, feedback_json(f).dump());
}

std::string Service::session_json(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  const TopicCatalog& catalog = policy(s->policy_id).checkpoint.space.catalog;
  json j;
  j["session_id"] = s->session_id;
  j["disorder"] = to_string(s->disorder);
  j["policy_id"] = s->policy_id;
  json turns = json::array();
  for (std::size_t i = 0; i < s->turns.size(); ++i) turns.push_back(turn_json(s->turns[i], i, catalog));
  j["turns"] = std::move(turns);
  j["pending_recommendation"] = s->pending ? recommendation_json(*s->pending) : json(nullptr);
  json fb = json::array();
  for (const auto& f : s->feedback) fb.push_back(feedback_json(f));
  j["feedback_log"] = std::move(fb);
  return j.dump();
}

std::string Service::policies_json() const {
  json out = json::array();
  for (const auto& [id, p] : policies_) {
    const auto& c = p.checkpoint;
    out.push_back({{"policy_id", id},
                   {"name", c.id.name()},
                   {"row_label", c.id.row_label()},
                   {"kind", to_string(c.id.kind)},
                   {"disorder", to_string(c.id.disorder)},
                   {"reward_scale", to_string(c.id.reward)},
                   {"action_space", to_string(c.space.kind)},
                   {"topics", json::parse(catalog_to_json(c.space.catalog))["topics"]},
                   {"compatible", p.provenance_issues.empty()},
                   {"provenance_issues", p.provenance_issues}});
  }
  return out.dump();
}

std::string Service::interpretation_json(const std::string& policy_id) {
  const LoadedPolicy& p = policy(policy_id);
  std::lock_guard lock(interpretation_mutex_);
  if (const auto it = interpretations_.find(policy_id); it != interpretations_.end()) {
    return it->second;
  }
  const auto precomputed =
      cfg_.policies_dir / (policy_id + std::string(kInterpretationSuffix));
  std::string out;
  if (std::filesystem::exists(precomputed)) {
    out = json::parse(read_file(precomputed)).dump();
  } else if (!cfg_.interpretation_corpus.empty()) {
    const Corpus corpus =
        filter_disorder(load_transcripts(cfg_.interpretation_corpus), p.checkpoint.id.disorder);
    const auto transitions = checkpoint_transitions(p.checkpoint, corpus, inventory_);
    if (transitions.empty()) {
      fail(ErrorCode::kEmptyTestSet, "interpretation corpus yields no transitions for '" +
                                         policy_id + "'");
    }
    const PcaModel pca = fit_action_pca(transitions);
    const auto traj = average_policy_trajectory(*p.agent, transitions, pca, p.checkpoint.space);
    const auto matrix = one_step_transition_matrix(*p.agent, transitions, p.checkpoint.space);
    json j;
    j["policy_id"] = policy_id;
    j["trajectory"] = json::parse(export_plot_data(traj, ExportFormat::kJson));
    j["transition_matrix"] = json::parse(export_plot_data(matrix, ExportFormat::kJson));
    out = j.dump();
  } else {
    fail(ErrorCode::kNotFound, "no interpretation available for '" + policy_id + "'");
  }
  interpretations_.emplace(policy_id, out);
  return out;
}

void Service::replay_state() {
  const auto sessions_path = cfg_.state_dir / kSessionLog;
  if (std::filesystem::exists(sessions_path)) {
    std::istringstream in(read_file(sessions_path));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json e = json::parse(line);
      const std::string id = e.at("session_id").get<std::string>();
      if (e.at("event") == "create") {
        auto s = std::make_shared<LiveSession>();
        s->session_id = id;
        s->disorder = parse_disorder(e.at("disorder").get<std::string>());
        s->policy_id = e.at("policy_id").get<std::string>();
        if (policies_.count(s->policy_id) == 0) continue;  // policy no longer served
        sessions_.emplace(id, std::move(s));
      } else if (e.at("event") == "turn") {
        const auto it = sessions_.find(id);
        if (it == sessions_.end()) continue;
        append_turn(*it->second, parse_speaker(e.at("speaker").get<std::string>()),
                    e.at("text").get<std::string>());
      }
    }
  }
  for (const auto& f : load_feedback_log(cfg_.state_dir / kFeedbackLog)) {
    const auto it = sessions_.find(f.session_id);
    if (it != sessions_.end()) it->second->feedback.push_back(f);
  }
}

HttpResponse Service::handle(std::string_view method, std::string_view path,
                             std::string_view body) {
  try {
    const auto parts = split_path(path);
    const auto n = parts.size();
    if (n < 2 || parts[0] != "api") fail(ErrorCode::kNotFound, "no route for " + std::string(path));

    if (parts[1] == "sessions") {
      if (n == 2 && method == "POST") {
        const json req = parse_body(body);
        Disorder disorder;
        try {
          disorder = parse_disorder(field<std::string>(req, "disorder"));
        } catch (const Error& e) {
          fail(ErrorCode::kInvalidArgument, e.what());
        }
        const auto id = create_session(disorder, field<std::string>(req, "policy_id"));
        return {200, json{{"session_id", id}}.dump()};
      }
      if (n == 3 && method == "GET") return {200, session_json(parts[2])};
      if (n == 4 && parts[3] == "turns" && method == "POST") {
        const json req = parse_body(body);
        const Speaker speaker = parse_speaker(field<std::string>(req, "speaker"));
        return {200, add_turn(parts[2], speaker, field<std::string>(req, "text"))};
      }
      if (n == 4 && parts[3] == "feedback" && method == "POST") {
        const json req = parse_body(body);
        const auto index = field<long long>(req, "turn_index");
        if (index < 0) fail(ErrorCode::kBadIndex, "turn_index must be non-negative");
        const int rating = field<int>(req, "rating");
        record_feedback(parts[2], static_cast<std::size_t>(index), field<bool>(req, "accepted"),
                        rating);
        return {200, json{{"ok", true}, {"reward", feedback_reward(rating)}}.dump()};
      }
    } else if (parts[1] == "policies" && method == "GET") {
      if (n == 2) return {200, policies_json()};
      if (n == 4 && parts[3] == "interpretation") return {200, interpretation_json(parts[2])};
    }
    fail(ErrorCode::kNotFound, "no route for " + std::string(method) + " " + std::string(path));
  } catch (const Error& e) {
    return error_response(http_status(e.code()), error_code_name(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "Internal", e.what());
  }
}

std::vector<FeedbackRecord> load_feedback_log(const std::filesystem::path& path) {
  std::vector<FeedbackRecord> out;
  if (!std::filesystem::exists(path)) return out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(feedback_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

std::vector<RewardOverride> feedback_overrides(const std::vector<FeedbackRecord>& records) {
  std::vector<RewardOverride> out;
  for (const auto& f : records) out.push_back({f.session_id, f.turn_index, f.reward});
  return out;
}

Corpus load_session_log(const std::filesystem::path& path) {
  Corpus corpus;
  std::map<std::string, std::size_t> index;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json e = json::parse(line);
      const std::string id = e.at("session_id").get<std::string>();
      if (e.at("event") == "create") {
        index[id] = corpus.sessions.size();
        SessionTranscript s;
        s.session_id = id;
        s.disorder = parse_disorder(e.at("disorder").get<std::string>());
        corpus.sessions.push_back(std::move(s));
      } else if (const auto it = index.find(id); it != index.end()) {
        Turn t;
        t.speaker = parse_speaker(e.at("speaker").get<std::string>());
        t.text = e.at("text").get<std::string>();
        corpus.sessions[it->second].turns.push_back(std::move(t));
      }
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return corpus;
}

}  // namespace dismop
