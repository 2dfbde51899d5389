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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dismop/agents.hpp"
#include "dismop/pipeline.hpp"

namespace dismop {

inline constexpr std::string_view kCheckpointSchema = "dismop-ckpt/1";

// One DISMOP grid cell.
struct PolicyId {
  AgentKind kind = AgentKind::kDdpg;
  DisorderScope disorder;
  Scale reward = Scale::kTask;

  // "ddpg-task-anxiety"; doubles as the checkpoint file stem.
  std::string name() const;
  // "DISMOP-DDPG-TASK"
  std::string row_label() const;
  bool operator==(const PolicyId&) const = default;
};

// Throws kUnknownPolicy.
PolicyId parse_policy_id(std::string_view name);

// Grid order: agents DDPG, TD3, BCQ; within each, Task, Bond, Goal.
std::vector<std::string> grid_row_labels();
// anxiety, depression, schizophrenia, suicidal, all
std::vector<DisorderScope> grid_scopes();

struct Provenance {
  std::string embedder;
  std::string inventory;
  std::string actionspace;
  bool operator==(const Provenance&) const = default;
};

Provenance runtime_provenance(const EmbedderConfig& cfg, const Inventory& inv,
                              const ActionSpace& space);

struct Checkpoint {
  PolicyId id;
  AgentHyper hyper;
  Provenance hashes;
  std::uint64_t seed = 0;
  std::vector<Vec> losses;  // [epoch, mean losses...]
  // What the service needs to rebuild states and decode actions.
  EmbedderConfig embedder;
  std::size_t frame_size = 10;
  ContextMode context_mode = ContextMode::kHistoryMean;
  std::size_t state_dim = 0;
  ActionSpace space;
  std::map<std::string, Mlp> nets;
};

// Canonical JSON: sorted keys, shortest round-trip number formatting, so
// save -> load -> save reproduces the bytes.
std::string checkpoint_to_json(const Checkpoint& ckpt);
// Throws kCorruptCheckpoint on any parse, schema or shape failure.
Checkpoint checkpoint_from_json(std::string_view json_text);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Compares stored hashes with the runtime's. With `strict` a difference
// throws kProvenanceMismatch; otherwise it is returned as warnings.
std::vector<std::string> check_provenance(const Checkpoint& ckpt, const Provenance& runtime,
                                          bool strict);

// Rebuilds the agent and installs the stored weights. Optimizer state is not
// stored, so the result is for inference.
std::unique_ptr<Agent> restore_agent(const Checkpoint& ckpt);

// Transitions of `corpus` built the way the checkpoint's training data was:
// same embedder, frame size, context mode, action space and reward scale.
std::vector<Transition> checkpoint_transitions(const Checkpoint& ckpt, const Corpus& corpus,
                                               const Inventory& inv);

struct TrainContext {
  PolicyId id;
  EmbedderConfig embedder;
  std::string inventory_hash;
  const ActionSpace* space = nullptr;
  std::size_t frame_size = 10;
  ContextMode context_mode = ContextMode::kHistoryMean;
};

TrainContext train_context(const Workbench& wb, const PolicyId& id);

Checkpoint train_policy(const std::vector<Transition>& transitions, const AgentHyper& hyper,
                        std::uint64_t seed, const TrainContext& ctx,
                        const std::function<void(const TrainProgress&)>& on_epoch = {});

struct GridProgress {
  std::size_t index = 0;  // 0-based cell index
  std::size_t total = 0;
  PolicyId id;
  std::size_t n_transitions = 0;
};

// Cell seed = derive_seed(seed, cell index in grid order); the scope column is
// the outer loop. "All" pools every disorder's training sessions.
std::vector<Checkpoint> train_dismop_grid(
    const Workbench& wb, std::uint64_t seed,
    const std::function<void(const GridProgress&)>& on_cell = {});

}  // namespace dismop
