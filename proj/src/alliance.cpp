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

#include "dismop/alliance.hpp"

#include <algorithm>
#include <cmath>

#include "dismop/error.hpp"
#include "dismop/io.hpp"
#include "json.hpp"

namespace dismop {

double ScaleScores::get(Scale s) const {
  switch (s) {
    case Scale::kTask: return task;
    case Scale::kBond: return bond;
    case Scale::kGoal: return goal;
  }
  return task;
}

Inventory::Inventory(std::vector<InventoryItem> items, const EmbedderConfig& cfg)
    : items_(std::move(items)), embedder_(cfg) {
  validate(embedder_);
  validate_and_sort();
  embeddings_.reserve(items_.size());
  for (const auto& item : items_) {
    try {
      embeddings_.push_back(embed_text(embedder_, item.text));
    } catch (const Error& e) {
      fail(e.code(), "inventory item " + std::to_string(item.item_id) + ": " + e.what());
    }
  }
}

Inventory::Inventory(std::vector<InventoryItem> items, std::vector<Vec> embeddings,
                     const EmbedderConfig& cfg)
    : items_(std::move(items)), embedder_(cfg) {
  validate(embedder_);
  if (embeddings.size() != items_.size()) {
    fail(ErrorCode::kWrongItemCount, "one embedding per item required");
  }
  // Keep each embedding attached to its item while sorting by id.
  std::vector<std::pair<InventoryItem, Vec>> zipped;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (embeddings[i].size() != embedder_.dim) {
      fail(ErrorCode::kDimMismatch, "item embedding dim differs from embedder dim");
    }
    zipped.emplace_back(std::move(items_[i]), std::move(embeddings[i]));
  }
  std::stable_sort(zipped.begin(), zipped.end(), [](const auto& a, const auto& b) {
    return a.first.item_id < b.first.item_id;
  });
  items_.clear();
  for (auto& [item, emb] : zipped) {
    items_.push_back(std::move(item));
    embeddings_.push_back(std::move(emb));
  }
  validate_and_sort();
}

void Inventory::validate_and_sort() {
  if (items_.size() != kInventoryItems) {
    fail(ErrorCode::kWrongItemCount, "inventory has " + std::to_string(items_.size()) +
                                         " items, expected 36");
  }
  std::stable_sort(items_.begin(), items_.end(),
                   [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
  std::array<std::size_t, 3> per_scale{};
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& item = items_[i];
    if (item.item_id != static_cast<int>(i) + 1) {
      fail(ErrorCode::kWrongItemCount, "item ids must be exactly 1..36");
    }
    if (item.sign != 1 && item.sign != -1) {
      fail(ErrorCode::kInvalidSign, "item " + std::to_string(item.item_id) +
                                        " has sign " + std::to_string(item.sign));
    }
    if (item.text.empty()) {
      fail(ErrorCode::kEmptyText, "item " + std::to_string(item.item_id) + " has no text");
    }
    ++per_scale[static_cast<std::size_t>(item.scale)];
  }
  for (std::size_t count : per_scale) {
    if (count != kItemsPerScale) {
      fail(ErrorCode::kScaleImbalance, "each scale needs exactly 12 items");
    }
  }

  nlohmann::json j = nlohmann::json::array();
  for (const auto& item : items_) {
    j.push_back({{"id", item.item_id},
                 {"text", item.text},
                 {"scale", to_string(item.scale)},
                 {"sign", item.sign}});
  }
  hash_ = content_hash(j.dump() + canonical_json(embedder_));
}

std::vector<InventoryItem> parse_inventory_items(std::string_view json_text) {
  std::vector<InventoryItem> items;
  try {
    auto j = nlohmann::json::parse(json_text);
    if (j.value("schema", std::string()) != kInventorySchema) {
      fail(ErrorCode::kSchemaVersionMismatch,
           "inventory schema must be '" + std::string(kInventorySchema) + "'");
    }
    for (const auto& ij : j.at("items")) {
      InventoryItem item;
      item.item_id = ij.at("id").get<int>();
      item.text = ij.at("text").get<std::string>();
      item.scale = parse_scale(ij.at("scale").get<std::string>());
      item.sign = ij.at("sign").get<int>();
      items.push_back(std::move(item));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParseError, std::string("inventory: ") + e.what());
  }
  return items;
}

Inventory load_inventory(const std::filesystem::path& path, const EmbedderConfig& cfg) {
  return Inventory(parse_inventory_items(read_file(path)), cfg);
}

Inventory load_default_inventory(const EmbedderConfig& cfg) {
  return load_inventory(data_dir() / "wai_default.json", cfg);
}

AllianceVector score_turn(const Inventory& inv, std::span<const double> turn_embedding) {
  if (turn_embedding.size() != inv.dim()) {
    fail(ErrorCode::kDimMismatch, "turn embedding dim " +
                                      std::to_string(turn_embedding.size()) +
                                      " vs inventory dim " + std::to_string(inv.dim()));
  }
  AllianceVector scores{};
  for (std::size_t i = 0; i < kInventoryItems; ++i) {
    scores[i] = cosine_similarity(turn_embedding, inv.embeddings()[i]);
  }
  return scores;
}

ScaleScores scale_scores(const Inventory& inv, const AllianceVector& v) {
  ScaleScores out;
  for (std::size_t i = 0; i < kInventoryItems; ++i) {
    if (!std::isfinite(v[i])) {
      fail(ErrorCode::kNonFiniteScore, "score " + std::to_string(i + 1) + " is not finite");
    }
    const auto& item = inv.items()[i];
    const double contribution = item.sign * v[i];
    switch (item.scale) {
      case Scale::kTask: out.task += contribution; break;
      case Scale::kBond: out.bond += contribution; break;
      case Scale::kGoal: out.goal += contribution; break;
    }
  }
  return out;
}

}  // namespace dismop
