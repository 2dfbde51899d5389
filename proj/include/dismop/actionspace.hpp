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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dismop/corpus.hpp"
#include "dismop/embedding.hpp"
#include "dismop/pca.hpp"
#include "dismop/types.hpp"

namespace dismop {

inline constexpr std::string_view kCatalogSchema = "dismop-topics/1";

struct Topic {
  TopicId id = 0;
  std::string label;
  bool operator==(const Topic&) const = default;
};

class TopicCatalog {
 public:
  TopicCatalog() = default;
  // Throws kInvalidConfig on duplicate ids or fewer than two topics.
  explicit TopicCatalog(std::vector<Topic> topics);

  // {0,1,2,3,6,7,8} with their labels; ids 4 and 5 are intentionally absent.
  static TopicCatalog default_catalog();

  const std::vector<Topic>& topics() const { return topics_; }
  std::size_t size() const { return topics_.size(); }
  bool contains(TopicId id) const;
  // Position of `id` in catalog order; throws kUnknownTopic.
  std::size_t index_of(TopicId id) const;
  const std::string& label(TopicId id) const;

  bool operator==(const TopicCatalog&) const = default;

 private:
  std::vector<Topic> topics_;
};

TopicCatalog parse_catalog(std::string_view json_text);
TopicCatalog load_catalog(const std::filesystem::path& path);
std::string catalog_to_json(const TopicCatalog& catalog);

enum class SpaceKind { kDoc, kPca, kPca2 };

std::string_view to_string(SpaceKind kind);
SpaceKind parse_space_kind(std::string_view s);

struct Bounds {
  Vec lo;
  Vec hi;

  Vec midpoint() const;
  Vec half_width() const;
  bool contains(std::span<const double> a, double slack = 0.0) const;
  Vec clamp(std::span<const double> a) const;
};

// Per-dimension min/max over the rows, each side pushed out by 10% of the
// range with a floor of 1e-6.
Bounds bounds_around(const std::vector<Vec>& rows);

struct Decoded {
  TopicId topic_id = 0;
  double margin = 0.0;  // best minus second-best cosine similarity
};

// Linear map from the embedder's space into a reduced action space.
struct Projection {
  Vec mean;
  std::vector<Vec> components;

  Vec apply(std::span<const double> x) const;
};

struct ActionSpace {
  TopicCatalog catalog;
  std::vector<Vec> centroids;  // one row per catalog topic, in catalog order
  SpaceKind kind = SpaceKind::kDoc;
  Bounds bounds;
  std::optional<Projection> projection;  // absent for kDoc

  std::size_t dim() const { return centroids.empty() ? 0 : centroids.front().size(); }
  // Maps an embedder-space vector into this space (identity for kDoc).
  Vec project(std::span<const double> embedding) const;
  std::string hash() const;
};

std::string action_space_to_json(const ActionSpace& space);
ActionSpace action_space_from_json(std::string_view json_text);

// Centroid of each topic = mean embedding of every turn carrying that label.
// Throws kTopicWithoutSupport listing the topics no turn is labeled with, and
// kUnknownTopic for labels outside the catalog.
ActionSpace build_action_space(const Corpus& corpus, const EmbedderConfig& cfg,
                               const TopicCatalog& catalog);

// Re-expresses a kDoc space in the leading `pca` components: 36 for kPca,
// 2 for kPca2. Throws kInsufficientComponents.
ActionSpace reduce_action_space(const ActionSpace& space, SpaceKind target,
                                const PcaModel& pca);
std::size_t target_dim(SpaceKind kind, std::size_t doc_dim);

// Nearest centroid by cosine similarity; ties go to the smaller topic id.
Decoded decode_action(const ActionSpace& space, std::span<const double> a);
const Vec& encode_topic(const ActionSpace& space, TopicId topic);

}  // namespace dismop
