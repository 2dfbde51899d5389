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

#include "dismop/pipeline.hpp"

#include "dismop/error.hpp"
#include "dismop/io.hpp"
#include "dismop/pca.hpp"
#include "json.hpp"

namespace dismop {

using nlohmann::json;

PipelineConfig parse_pipeline_config(std::string_view json_text) {
  PipelineConfig cfg;
  try {
    const json j = json::parse(json_text);
    if (j.contains("embedder")) cfg.embedder = parse_embedder_config(j["embedder"].dump());
    cfg.inventory_path = j.value("inventory", std::string());
    cfg.catalog_path = j.value("catalog", std::string());
    cfg.frame_size = j.value("frame_size", cfg.frame_size);
    if (j.contains("context_mode")) {
      cfg.context_mode = parse_context_mode(j["context_mode"].get<std::string>());
    }
    if (j.contains("action_space")) {
      cfg.space_kind = parse_space_kind(j["action_space"].get<std::string>());
    }
    cfg.auto_label = j.value("auto_label", cfg.auto_label);
    if (j.contains("split")) {
      const auto& s = j["split"];
      cfg.split.train_fraction = s.value("train_fraction", cfg.split.train_fraction);
      cfg.split.split_seed = s.value("seed", cfg.split.split_seed);
    }
    if (j.contains("hyper")) cfg.hyper = merge_hyper(cfg.hyper, j["hyper"].dump());
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidConfig, std::string("pipeline config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidConfig) throw;
    fail(ErrorCode::kInvalidConfig, std::string("pipeline config: ") + e.what());
  }
  if (cfg.frame_size == 0) fail(ErrorCode::kInvalidConfig, "frame_size must be >= 1");
  validate(cfg.embedder);
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(read_file(path));
}

std::string pipeline_config_to_json(const PipelineConfig& cfg) {
  json j;
  j["embedder"] = json::parse(canonical_json(cfg.embedder));
  j["inventory"] = cfg.inventory_path.string();
  j["catalog"] = cfg.catalog_path.string();
  j["frame_size"] = cfg.frame_size;
  j["context_mode"] = to_string(cfg.context_mode);
  j["action_space"] = to_string(cfg.space_kind);
  j["auto_label"] = cfg.auto_label;
  j["split"] = {{"train_fraction", cfg.split.train_fraction}, {"seed", cfg.split.split_seed}};
  j["hyper"] = json::parse(hyper_to_json(cfg.hyper));
  return j.dump();
}

Inventory load_pipeline_inventory(const PipelineConfig& cfg) {
  if (cfg.inventory_path.empty()) return load_default_inventory(cfg.embedder);
  return load_inventory(cfg.inventory_path, cfg.embedder);
}

TopicCatalog load_pipeline_catalog(const PipelineConfig& cfg) {
  if (cfg.catalog_path.empty()) return TopicCatalog::default_catalog();
  return load_catalog(cfg.catalog_path);
}

ActionSpace prepare_action_space(const Corpus& corpus, const PipelineConfig& cfg,
                                 const TopicCatalog& catalog) {
  ActionSpace doc = build_action_space(corpus, cfg.embedder, catalog);
  if (cfg.space_kind == SpaceKind::kDoc) return doc;
  std::vector<Vec> rows;
  for (const auto& s : corpus.sessions) {
    for (const auto& t : s.turns) rows.push_back(embed_text(cfg.embedder, t.text));
  }
  const std::size_t k = target_dim(cfg.space_kind, cfg.embedder.dim);
  if (rows.size() < 2 || k > std::min(rows.size(), cfg.embedder.dim)) {
    fail(ErrorCode::kInsufficientComponents,
         "need " + std::to_string(k) + " components from " + std::to_string(rows.size()) +
             " turns of dim " + std::to_string(cfg.embedder.dim));
  }
  return reduce_action_space(doc, cfg.space_kind, fit_pca(rows, k));
}

BuildSpec build_spec(const PipelineConfig& cfg, Scale reward) {
  BuildSpec spec;
  spec.frame_size = cfg.frame_size;
  spec.reward = reward;
  spec.context_mode = cfg.context_mode;
  spec.auto_label = cfg.auto_label;
  return spec;
}

std::vector<Transition> Workbench::transitions(const Corpus& corpus, Scale reward) const {
  return build_transitions(corpus, inventory, space, config.embedder, build_spec(config, reward));
}

Workbench prepare_workbench(const Corpus& corpus, const PipelineConfig& cfg) {
  auto [train, test] = split_sessions(corpus, cfg.split);
  return prepare_workbench(std::move(train), std::move(test), cfg);
}

Workbench prepare_workbench(Corpus train, Corpus test, const PipelineConfig& cfg) {
  Inventory inventory = load_pipeline_inventory(cfg);
  ActionSpace space = prepare_action_space(train, cfg, load_pipeline_catalog(cfg));
  return Workbench{cfg, std::move(inventory), std::move(space), std::move(train),
                   std::move(test)};
}

}  // namespace dismop
