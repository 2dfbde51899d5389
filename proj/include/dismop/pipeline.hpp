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
#include <string>
#include <string_view>
#include <vector>

#include "dismop/actionspace.hpp"
#include "dismop/agents.hpp"
#include "dismop/alliance.hpp"
#include "dismop/corpus.hpp"
#include "dismop/dataset.hpp"
#include "dismop/embedding.hpp"

namespace dismop {

// Everything that turns a corpus into transitions, shared by the CLI, the grid
// driver and the service so that batch and live paths agree.
struct PipelineConfig {
  EmbedderConfig embedder;
  std::filesystem::path inventory_path;  // empty: data_dir()/wai_default.json
  std::filesystem::path catalog_path;    // empty: default catalog
  std::size_t frame_size = 10;
  ContextMode context_mode = ContextMode::kHistoryMean;
  SpaceKind space_kind = SpaceKind::kDoc;
  bool auto_label = true;
  SplitSpec split;
  AgentHyper hyper;
};

// Keys: embedder{dim,seed,ngram_max}, inventory, catalog, frame_size,
// context_mode, action_space, auto_label, split{train_fraction,seed},
// hyper{...}. Missing keys keep their defaults.
PipelineConfig parse_pipeline_config(std::string_view json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string pipeline_config_to_json(const PipelineConfig& cfg);

Inventory load_pipeline_inventory(const PipelineConfig& cfg);
TopicCatalog load_pipeline_catalog(const PipelineConfig& cfg);

// Centroids from the labeled turns of `corpus`, reduced by a PCA fit on all of
// its turn embeddings for the kPca/kPca2 variants.
ActionSpace prepare_action_space(const Corpus& corpus, const PipelineConfig& cfg,
                                 const TopicCatalog& catalog);

BuildSpec build_spec(const PipelineConfig& cfg, Scale reward);

// The split corpus and the assets derived from its training half.
struct Workbench {
  PipelineConfig config;
  Inventory inventory;
  ActionSpace space;
  Corpus train;
  Corpus test;

  std::vector<Transition> transitions(const Corpus& corpus, Scale reward) const;
};

// Splits `corpus` by cfg.split.
Workbench prepare_workbench(const Corpus& corpus, const PipelineConfig& cfg);
// Uses an existing split.
Workbench prepare_workbench(Corpus train, Corpus test, const PipelineConfig& cfg);

}  // namespace dismop
