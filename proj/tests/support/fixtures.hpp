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
#include <vector>

#include "dismop/actionspace.hpp"
#include "dismop/alliance.hpp"
#include "dismop/checkpoint.hpp"
#include "dismop/corpus.hpp"
#include "dismop/dataset.hpp"
#include "dismop/error.hpp"
#include "dismop/pipeline.hpp"

namespace fixture {

// The bundled generator config with a few fields replaced.
dismop::SynthConfig synth(std::size_t sessions, std::size_t pairs, double noise,
                          std::uint64_t seed);
dismop::Corpus synth_corpus(std::size_t sessions, std::size_t pairs, double noise,
                            std::uint64_t seed);

// Everything needed to build transitions from a corpus in-process.
struct World {
  dismop::EmbedderConfig embedder;
  dismop::Inventory inventory;
  dismop::ActionSpace space;
  std::vector<dismop::Transition> transitions;
};
World world(const dismop::Corpus& corpus, dismop::Scale reward = dismop::Scale::kTask);

// Small networks and one epoch, for tests that need a checkpoint but not a
// good one.
dismop::PipelineConfig tiny_pipeline(std::size_t epochs = 1);
dismop::Checkpoint train_cell(const dismop::Workbench& wb, const dismop::PolicyId& id,
                              std::uint64_t seed = 1);

// Fresh empty directory under the system temp dir, removed by the destructor.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Code of the dismop::Error thrown by f, or nullopt when f returns.
template <typename F>
std::optional<dismop::ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const dismop::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

dismop::Turn turn(dismop::Speaker speaker, std::string text,
                  std::optional<dismop::TopicId> topic = std::nullopt);

}  // namespace fixture
