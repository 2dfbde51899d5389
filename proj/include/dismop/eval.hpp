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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dismop/actionspace.hpp"
#include "dismop/checkpoint.hpp"
#include "dismop/dataset.hpp"
#include "dismop/policy.hpp"

namespace dismop {

struct AccuracyReport {
  std::size_t n_test = 0;
  double accuracy = 0.0;
  // confusion[i][j]: truth catalog index i, prediction catalog index j.
  std::vector<std::vector<std::size_t>> confusion;
  // Only topics that occur as ground truth.
  std::map<TopicId, double> per_topic_recall;
};

// Prediction = decode(act(transition)); throws kEmptyTestSet.
AccuracyReport turn_level_accuracy(const Policy& policy, const std::vector<Transition>& test,
                                   const ActionSpace& space);

struct AccuracyGrid {
  std::vector<std::string> rows;     // grid_row_labels()
  std::vector<std::string> columns;  // anxiety ... all
  std::vector<std::vector<double>> cells;
  std::vector<std::vector<bool>> winners;  // per-column maxima
};

struct GridEntry {
  PolicyId id;
  double accuracy = 0.0;
};

// Places entries into the 9 x 5 layout; throws kMissingCell naming the first
// empty cell.
AccuracyGrid assemble_grid(const std::vector<GridEntry>& entries);

// Evaluates each checkpoint on the test sessions of its own column (every
// test session for "all") with transitions rebuilt under its reward scale.
AccuracyGrid accuracy_grid(const std::vector<Checkpoint>& checkpoints, const Corpus& test,
                           const Inventory& inv);

// header "policy,anxiety,depression,schizophrenia,suicidal,all", values %.4f
std::string grid_to_csv(const AccuracyGrid& grid);
// Same layout; column winners in bold.
std::string grid_to_markdown(const AccuracyGrid& grid);

}  // namespace dismop
