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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dismop/embedding.hpp"
#include "dismop/types.hpp"

namespace dismop {

inline constexpr std::string_view kInventorySchema = "dismop-wai/1";
inline constexpr std::size_t kInventoryItems = 36;
inline constexpr std::size_t kItemsPerScale = 12;

struct InventoryItem {
  int item_id = 0;  // 1..36
  std::string text;
  Scale scale = Scale::kTask;
  int sign = 1;  // +1 or -1 from the key table
};

using AllianceVector = std::array<double, kInventoryItems>;

struct ScaleScores {
  double task = 0.0;
  double bond = 0.0;
  double goal = 0.0;

  double get(Scale s) const;
  bool operator==(const ScaleScores&) const = default;
};

// The 36-item inventory with one unit-norm embedding per item. Row i of the
// embedding table belongs to items()[i], and items are kept in id order.
class Inventory {
 public:
  // Validates count, per-scale balance, signs and ids, then embeds the texts.
  Inventory(std::vector<InventoryItem> items, const EmbedderConfig& cfg);
  // For tests and for callers that already hold item embeddings.
  Inventory(std::vector<InventoryItem> items, std::vector<Vec> embeddings,
            const EmbedderConfig& cfg);

  const std::vector<InventoryItem>& items() const { return items_; }
  const std::vector<Vec>& embeddings() const { return embeddings_; }
  const EmbedderConfig& embedder() const { return embedder_; }
  std::size_t dim() const { return embedder_.dim; }
  // Hash over item ids/texts/scales/signs and the embedder config.
  const std::string& hash() const { return hash_; }

 private:
  void validate_and_sort();

  std::vector<InventoryItem> items_;
  std::vector<Vec> embeddings_;
  EmbedderConfig embedder_;
  std::string hash_;
};

std::vector<InventoryItem> parse_inventory_items(std::string_view json_text);
Inventory load_inventory(const std::filesystem::path& path, const EmbedderConfig& cfg);
// data_dir()/wai_default.json
Inventory load_default_inventory(const EmbedderConfig& cfg);

// scores[i] = cosine(turn_embedding, item i embedding).
AllianceVector score_turn(const Inventory& inv, std::span<const double> turn_embedding);

// Signed per-scale sums, accumulated in item order.
ScaleScores scale_scores(const Inventory& inv, const AllianceVector& v);

}  // namespace dismop
