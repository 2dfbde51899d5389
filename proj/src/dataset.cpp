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

#include "dismop/dataset.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include "dismop/error.hpp"
#include "dismop/io.hpp"
#include "dismop/rng.hpp"
#include "json.hpp"

namespace dismop {

using nlohmann::json;

std::vector<TurnPair> extract_pairs(const SessionTranscript& session) {
  std::vector<TurnPair> pairs;
  std::optional<std::size_t> pending;
  for (std::size_t i = 0; i < session.turns.size(); ++i) {
    if (session.turns[i].speaker == Speaker::kTherapist) {
      pending = i;
    } else if (pending) {
      pairs.push_back({*pending, i, pairs.size()});
      pending.reset();
    }
  }
  return pairs;
}

std::string_view to_string(ContextMode mode) {
  return mode == ContextMode::kHistoryMean ? "history_mean" : "history_mean_plus_last_patient";
}

ContextMode parse_context_mode(std::string_view s) {
  if (s == "history_mean") return ContextMode::kHistoryMean;
  if (s == "history_mean_plus_last_patient") return ContextMode::kHistoryMeanPlusLastPatient;
  fail(ErrorCode::kInvalidArgument, "unknown context mode '" + std::string(s) + "'");
}

std::size_t state_dim(std::size_t embed_dim, ContextMode mode) {
  return mode == ContextMode::kHistoryMean ? embed_dim : 2 * embed_dim;
}

Vec pair_embedding(std::span<const double> therapist, std::span<const double> patient) {
  if (therapist.size() != patient.size()) fail(ErrorCode::kDimMismatch, "pair turn dims differ");
  Vec out(therapist.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (therapist[i] + patient[i]);
  return out;
}

Vec frame_state(std::span<const Vec> pair_embeddings, std::span<const double> last_patient,
                ContextMode mode) {
  if (pair_embeddings.empty()) fail(ErrorCode::kInvalidArgument, "frame has no pairs");
  const std::size_t d = pair_embeddings.front().size();
  Vec state(d, 0.0);
  for (const auto& p : pair_embeddings) {
    if (p.size() != d) fail(ErrorCode::kDimMismatch, "ragged pair embeddings");
    for (std::size_t i = 0; i < d; ++i) state[i] += p[i];
  }
  const double n = static_cast<double>(pair_embeddings.size());
  for (double& x : state) x /= n;
  if (mode == ContextMode::kHistoryMeanPlusLastPatient) {
    if (last_patient.size() != d) fail(ErrorCode::kDimMismatch, "patient embedding dim");
    state.insert(state.end(), last_patient.begin(), last_patient.end());
  }
  return state;
}

namespace {

TopicId therapist_topic(const Turn& turn, std::span<const double> embedding,
                        const ActionSpace& space, const BuildSpec& spec,
                        const std::string& session_id, std::size_t turn_index) {
  if (turn.topic) {
    space.catalog.index_of(*turn.topic);  // validates membership
    return *turn.topic;
  }
  if (!spec.auto_label) {
    fail(ErrorCode::kUnlabeledTurn, "session '" + session_id + "' turn " +
                                        std::to_string(turn_index) + " has no topic label");
  }
  return decode_action(space, space.project(embedding)).topic_id;
}

}  // namespace

std::vector<Transition> build_transitions(const Corpus& corpus, const Inventory& inv,
                                          const ActionSpace& space,
                                          const EmbedderConfig& cfg, const BuildSpec& spec) {
  validate(cfg);
  if (spec.frame_size == 0) fail(ErrorCode::kInvalidArgument, "frame size must be positive");
  if (inv.dim() != cfg.dim) {
    fail(ErrorCode::kDimMismatch, "inventory embedded at dim " + std::to_string(inv.dim()) +
                                      ", embedder dim " + std::to_string(cfg.dim));
  }
  if (!space.projection && space.dim() != cfg.dim) {
    fail(ErrorCode::kDimMismatch, "action space dim " + std::to_string(space.dim()) +
                                      " vs embedder dim " + std::to_string(cfg.dim));
  }
  const std::size_t w = spec.frame_size;
  std::vector<Transition> out;

  for (const auto& session : corpus.sessions) {
    const auto pairs = extract_pairs(session);
    const std::size_t p = pairs.size();
    if (p < w + 1) continue;

    std::vector<Vec> therapist_emb(p), patient_emb(p), pair_emb(p);
    std::vector<TopicId> topics(p);
    for (std::size_t k = 0; k < p; ++k) {
      therapist_emb[k] = embed_text(cfg, session.turns[pairs[k].therapist].text);
      patient_emb[k] = embed_text(cfg, session.turns[pairs[k].patient].text);
      pair_emb[k] = pair_embedding(therapist_emb[k], patient_emb[k]);
      topics[k] = therapist_topic(session.turns[pairs[k].therapist], therapist_emb[k], space,
                                  spec, session.session_id, pairs[k].therapist);
    }

    auto state_at = [&](std::size_t t) {
      return frame_state(std::span<const Vec>(pair_emb).subspan(t + 1 - w, w), patient_emb[t],
                         spec.context_mode);
    };

    Vec state = state_at(w - 1);
    for (std::size_t t = w - 1; t + 1 < p; ++t) {
      Transition tr;
      tr.state = std::move(state);
      tr.next_state = state_at(t + 1);
      state = tr.next_state;
      tr.action = encode_topic(space, topics[t + 1]);
      const auto alliance = score_turn(inv, patient_emb[t + 1]);
      tr.reward = scale_scores(inv, alliance).get(spec.reward);
      tr.done = (t + 1 == p - 1);
      tr.meta.session_id = session.session_id;
      tr.meta.pair_index = t;
      tr.meta.current_topic = topics[t];
      tr.meta.action_topic = topics[t + 1];
      tr.meta.frame_topics.assign(topics.begin() + static_cast<std::ptrdiff_t>(t + 1 - w),
                                  topics.begin() + static_cast<std::ptrdiff_t>(t + 1));
      tr.meta.patient_turn = pairs[t].patient;
      out.push_back(std::move(tr));
    }
  }
  return out;
}

std::string dataset_cache_key(const EmbedderConfig& cfg, const Inventory& inv,
                              const ActionSpace& space, const BuildSpec& spec) {
  json j;
  j["embedder"] = config_hash(cfg);
  j["inventory"] = inv.hash();
  j["action_space"] = space.hash();
  j["frame_size"] = spec.frame_size;
  j["reward"] = to_string(spec.reward);
  j["context_mode"] = to_string(spec.context_mode);
  j["auto_label"] = spec.auto_label;
  return content_hash(j.dump());
}

namespace {

constexpr std::string_view kCacheSchema = "dismop-transitions/1";

json transition_json(const Transition& t) {
  json meta;
  meta["session_id"] = t.meta.session_id;
  meta["pair_index"] = t.meta.pair_index;
  meta["current_topic"] = t.meta.current_topic;
  meta["action_topic"] = t.meta.action_topic;
  meta["frame_topics"] = t.meta.frame_topics;
  meta["patient_turn"] = t.meta.patient_turn;
  json j;
  j["state"] = t.state;
  j["action"] = t.action;
  j["reward"] = t.reward;
  j["next_state"] = t.next_state;
  j["done"] = t.done;
  j["meta"] = std::move(meta);
  return j;
}

Transition transition_from_json(const json& j) {
  Transition t;
  t.state = j.at("state").get<Vec>();
  t.action = j.at("action").get<Vec>();
  t.reward = j.at("reward").get<double>();
  t.next_state = j.at("next_state").get<Vec>();
  t.done = j.at("done").get<bool>();
  const auto& m = j.at("meta");
  t.meta.session_id = m.at("session_id").get<std::string>();
  t.meta.pair_index = m.at("pair_index").get<std::size_t>();
  t.meta.current_topic = m.at("current_topic").get<TopicId>();
  t.meta.action_topic = m.at("action_topic").get<TopicId>();
  t.meta.frame_topics = m.at("frame_topics").get<std::vector<TopicId>>();
  t.meta.patient_turn = m.at("patient_turn").get<std::size_t>();
  return t;
}

}  // namespace

std::string transitions_to_jsonl(const std::vector<Transition>& transitions,
                                 const std::string& key) {
  std::string out =
      json{{"schema", kCacheSchema}, {"key", key}, {"count", transitions.size()}}.dump();
  out += '\n';
  for (const auto& t : transitions) {
    out += transition_json(t).dump();
    out += '\n';
  }
  return out;
}

void write_transition_cache(const std::filesystem::path& path,
                            const std::vector<Transition>& transitions,
                            const std::string& key) {
  write_file(path, transitions_to_jsonl(transitions, key));
}

std::vector<Transition> read_transition_cache(const std::filesystem::path& path,
                                              const std::string& expected_key) {
  const std::string text = read_file(path);
  std::vector<Transition> out;
  std::size_t pos = 0, line_no = 0, expected_count = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      if (line_no == 1) {
        if (j.at("schema").get<std::string>() != kCacheSchema) {
          fail(ErrorCode::kSchemaVersionMismatch, "transition cache schema");
        }
        if (j.at("key").get<std::string>() != expected_key) {
          fail(ErrorCode::kProvenanceMismatch,
               "transition cache key " + j.at("key").get<std::string>() + " != " +
                   expected_key);
        }
        expected_count = j.at("count").get<std::size_t>();
        continue;
      }
      out.push_back(transition_from_json(j));
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (line_no == 0 || out.size() != expected_count) {
    fail(ErrorCode::kParseError, "transition cache is truncated");
  }
  return out;
}

std::vector<std::vector<std::size_t>> sample_batches(std::size_t n, std::size_t batch_size,
                                                     std::uint64_t epoch_seed) {
  if (n == 0) fail(ErrorCode::kEmptyDataset, "no transitions to batch");
  if (batch_size == 0) fail(ErrorCode::kInvalidArgument, "batch size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(epoch_seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index(i + 1)]);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

TransitionBatch make_batch(const std::vector<Transition>& transitions,
                           std::span<const std::size_t> indices) {
  if (indices.empty()) fail(ErrorCode::kEmptyDataset, "empty batch");
  const auto& first = transitions.at(indices.front());
  const auto b = static_cast<Eigen::Index>(indices.size());
  const auto ds = static_cast<Eigen::Index>(first.state.size());
  const auto da = static_cast<Eigen::Index>(first.action.size());
  TransitionBatch batch{Eigen::MatrixXd(b, ds), Eigen::MatrixXd(b, da), Eigen::VectorXd(b),
                        Eigen::MatrixXd(b, ds), Eigen::VectorXd(b)};
  for (Eigen::Index r = 0; r < b; ++r) {
    const auto& t = transitions.at(indices[static_cast<std::size_t>(r)]);
    if (static_cast<Eigen::Index>(t.state.size()) != ds ||
        static_cast<Eigen::Index>(t.next_state.size()) != ds ||
        static_cast<Eigen::Index>(t.action.size()) != da) {
      fail(ErrorCode::kDimMismatch, "transitions in a batch disagree on dimensions");
    }
    for (Eigen::Index c = 0; c < ds; ++c) {
      batch.states(r, c) = t.state[static_cast<std::size_t>(c)];
      batch.next_states(r, c) = t.next_state[static_cast<std::size_t>(c)];
    }
    for (Eigen::Index c = 0; c < da; ++c) batch.actions(r, c) = t.action[static_cast<std::size_t>(c)];
    batch.rewards(r) = t.reward;
    batch.dones(r) = t.done ? 1.0 : 0.0;
  }
  return batch;
}

TransitionBatch make_batch(const std::vector<Transition>& transitions) {
  std::vector<std::size_t> all(transitions.size());
  std::iota(all.begin(), all.end(), 0);
  return make_batch(transitions, all);
}

std::pair<std::vector<Transition>, std::vector<Transition>> split_transitions(
    const std::vector<Transition>& transitions, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "train_fraction must lie in (0, 1)");
  }
  const std::size_t n = transitions.size();
  if (n < 2) fail(ErrorCode::kTooFewSessions, "need at least two transitions to split");
  const auto n_train =
      static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  Rng rng(derive_seed(spec.split_seed, n_train));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index(i + 1)]);
  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;
  std::pair<std::vector<Transition>, std::vector<Transition>> out;
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? out.first : out.second).push_back(transitions[i]);
  }
  return out;
}

std::size_t override_rewards(std::vector<Transition>& transitions,
                             std::span<const RewardOverride> overrides) {
  std::map<std::pair<std::string, std::size_t>, double> lookup;
  for (const auto& o : overrides) lookup[{o.session_id, o.patient_turn}] = o.reward;
  std::size_t changed = 0;
  for (auto& t : transitions) {
    auto it = lookup.find({t.meta.session_id, t.meta.patient_turn});
    if (it != lookup.end()) {
      t.reward = it->second;
      ++changed;
    }
  }
  return changed;
}

}  // namespace dismop
