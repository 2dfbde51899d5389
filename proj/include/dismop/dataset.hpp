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

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dismop/actionspace.hpp"
#include "dismop/alliance.hpp"
#include "dismop/corpus.hpp"
#include "dismop/embedding.hpp"

namespace dismop {

// Indices into SessionTranscript::turns of one (therapist, patient) dyad.
struct TurnPair {
  std::size_t therapist = 0;
  std::size_t patient = 0;
  std::size_t pair_index = 0;
};

// A therapist turn followed by a patient turn forms a pair. Leading patient
// turns and patient turns without a preceding therapist turn are skipped;
// of several consecutive therapist turns only the last one is paired.
std::vector<TurnPair> extract_pairs(const SessionTranscript& session);

enum class ContextMode { kHistoryMean, kHistoryMeanPlusLastPatient };

std::string_view to_string(ContextMode mode);
ContextMode parse_context_mode(std::string_view s);

struct BuildSpec {
  std::size_t frame_size = 10;
  Scale reward = Scale::kTask;
  ContextMode context_mode = ContextMode::kHistoryMean;
  // Label unlabeled therapist turns by decoding their own embedding.
  bool auto_label = true;
};

struct TransitionMeta {
  std::string session_id;
  std::size_t pair_index = 0;  // t: last pair inside the state's frame
  TopicId current_topic = 0;   // therapist topic of pair t
  TopicId action_topic = 0;    // therapist topic of pair t+1
  std::vector<TopicId> frame_topics;  // therapist topics of pairs t-W+1..t
  std::size_t patient_turn = 0;       // turn index of the patient turn of pair t
};

struct Transition {
  Vec state;
  Vec action;
  double reward = 0.0;
  Vec next_state;
  bool done = false;
  TransitionMeta meta;
};

// Mean over the pair embeddings (each the mean of its two turn embeddings),
// optionally followed by the latest patient embedding. The live service builds
// its states through this same function.
Vec frame_state(std::span<const Vec> pair_embeddings, std::span<const double> last_patient,
                ContextMode mode);
Vec pair_embedding(std::span<const double> therapist, std::span<const double> patient);

std::size_t state_dim(std::size_t embed_dim, ContextMode mode);

// One transition per t in [W-1, P-2] for every session with P pairs, i.e.
// max(0, P - W) per session, ordered by (session order, pair index).
std::vector<Transition> build_transitions(const Corpus& corpus, const Inventory& inv,
                                          const ActionSpace& space,
                                          const EmbedderConfig& cfg, const BuildSpec& spec);

std::string dataset_cache_key(const EmbedderConfig& cfg, const Inventory& inv,
                              const ActionSpace& space, const BuildSpec& spec);
void write_transition_cache(const std::filesystem::path& path,
                            const std::vector<Transition>& transitions,
                            const std::string& key);
std::string transitions_to_jsonl(const std::vector<Transition>& transitions,
                                 const std::string& key);
// Throws kProvenanceMismatch when the stored key differs from `expected_key`.
std::vector<Transition> read_transition_cache(const std::filesystem::path& path,
                                              const std::string& expected_key);

// Seeded Fisher-Yates shuffle of [0, n) cut into ceil(n / batch_size) batches;
// the last one may be short. Throws kEmptyDataset when n == 0.
std::vector<std::vector<std::size_t>> sample_batches(std::size_t n, std::size_t batch_size,
                                                     std::uint64_t epoch_seed);

struct TransitionBatch {
  Eigen::MatrixXd states;       // B x d_s
  Eigen::MatrixXd actions;      // B x d_a
  Eigen::VectorXd rewards;      // B
  Eigen::MatrixXd next_states;  // B x d_s
  Eigen::VectorXd dones;        // B, 1.0 for terminal rows

  Eigen::Index size() const { return states.rows(); }
};

TransitionBatch make_batch(const std::vector<Transition>& transitions,
                           std::span<const std::size_t> indices);
TransitionBatch make_batch(const std::vector<Transition>& transitions);

// Transition-level split, for SplitUnit::kTransition.
std::pair<std::vector<Transition>, std::vector<Transition>> split_transitions(
    const std::vector<Transition>& transitions, const SplitSpec& spec);

// Replaces the reward of the transition whose state ends at `patient_turn` of
// `session_id`: that is the patient turn after which the rated recommendation
// was made. Returns how many transitions were overridden.
struct RewardOverride {
  std::string session_id;
  std::size_t patient_turn = 0;
  double reward = 0.0;
};
std::size_t override_rewards(std::vector<Transition>& transitions,
                             std::span<const RewardOverride> overrides);

}  // namespace dismop
