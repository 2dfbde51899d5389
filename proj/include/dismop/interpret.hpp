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

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "dismop/actionspace.hpp"
#include "dismop/dataset.hpp"
#include "dismop/pca.hpp"
#include "dismop/policy.hpp"

namespace dismop {

inline constexpr std::string_view kTrajectorySchema = "dismop-traj/1";
inline constexpr std::string_view kTransitionMatrixSchema = "dismop-transmat/1";

using Point2 = std::array<double, 2>;

struct TrajectorySummary {
  // W history points followed by the recommendation, z-scored per axis.
  std::vector<Point2> points;
  std::vector<TopicId> point_topics;
  std::size_t endpoint_index = 0;
  // Axes whose averaged coordinates did not vary; left at 0.
  std::array<bool, 2> degenerate_axes{false, false};
};

// PCA(k=2) over the ground-truth action vectors of `train`.
PcaModel fit_action_pca(const std::vector<Transition>& train);

// Averages, over the test transitions, the W frame-topic actions followed by
// the policy's action, first in 2-d PCA coordinates (then z-scored) and in the
// original space (then decoded for the labels). Throws kEmptyTestSet.
TrajectorySummary average_policy_trajectory(const Policy& policy,
                                            const std::vector<Transition>& test,
                                            const PcaModel& pca, const ActionSpace& space);

struct TransitionMatrix {
  std::vector<TopicId> topics;              // catalog order
  std::vector<std::vector<double>> matrix;  // row: current topic, column: recommended
  std::vector<std::size_t> support;         // transitions per row
};

// Throws kEmptyTestSet.
TransitionMatrix one_step_transition_matrix(const Policy& policy,
                                            const std::vector<Transition>& test,
                                            const ActionSpace& space);

enum class ExportFormat { kJson, kCsv };

// "json" or "csv"; throws kUnsupportedFormat.
ExportFormat parse_export_format(std::string_view s);

std::string export_plot_data(const TrajectorySummary& summary, ExportFormat format);
std::string export_plot_data(const TransitionMatrix& matrix, ExportFormat format);

TrajectorySummary parse_trajectory_json(std::string_view json_text);
TransitionMatrix parse_transition_matrix_json(std::string_view json_text);

}  // namespace dismop
