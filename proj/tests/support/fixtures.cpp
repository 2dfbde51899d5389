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

#include "fixtures.hpp"

#include <atomic>
#include <unistd.h>

#include "dismop/io.hpp"

namespace fixture {

dismop::SynthConfig synth(std::size_t sessions, std::size_t pairs, double noise,
                          std::uint64_t seed) {
  auto cfg = dismop::load_synth_config(dismop::data_dir() / "synth_default.json");
  cfg.n_sessions = sessions;
  cfg.pairs_per_session = pairs;
  cfg.noise_rate = noise;
  cfg.seed = seed;
  return cfg;
}

dismop::Corpus synth_corpus(std::size_t sessions, std::size_t pairs, double noise,
                            std::uint64_t seed) {
  return dismop::generate_synthetic_corpus(synth(sessions, pairs, noise, seed));
}

World world(const dismop::Corpus& corpus, dismop::Scale reward) {
  dismop::EmbedderConfig emb;
  auto inv = dismop::load_default_inventory(emb);
  auto space = dismop::build_action_space(corpus, emb, dismop::TopicCatalog::default_catalog());
  dismop::BuildSpec spec;
  spec.reward = reward;
  auto tr = dismop::build_transitions(corpus, inv, space, emb, spec);
  return World{emb, std::move(inv), std::move(space), std::move(tr)};
}

dismop::PipelineConfig tiny_pipeline(std::size_t epochs) {
  dismop::PipelineConfig cfg;
  cfg.hyper.hidden = {8};
  cfg.hyper.epochs = epochs;
  cfg.hyper.bcq.latent_dim = 2;
  cfg.hyper.bcq.n_action_samples = 3;
  cfg.split.train_fraction = 0.75;
  return cfg;
}

dismop::Checkpoint train_cell(const dismop::Workbench& wb, const dismop::PolicyId& id,
                              std::uint64_t seed) {
  return dismop::train_policy(wb.transitions(filter_disorder(wb.train, id.disorder), id.reward),
                              wb.config.hyper, seed, dismop::train_context(wb, id));
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("dismop-" + tag + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

dismop::Turn turn(dismop::Speaker speaker, std::string text,
                  std::optional<dismop::TopicId> topic) {
  return dismop::Turn{speaker, std::move(text), topic};
}

}  // namespace fixture
