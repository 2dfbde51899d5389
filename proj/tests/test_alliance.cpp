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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "dismop/alliance.hpp"
#include "dismop/io.hpp"
#include "dismop/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dismop;
using fixture::error_of;

namespace {

std::vector<InventoryItem> default_items() {
  return parse_inventory_items(read_file(data_dir() / "wai_default.json"));
}

Vec random_unit(Rng& rng, std::size_t d) {
  Vec v(d);
  double n = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    n += x * x;
  }
  for (auto& x : v) x /= std::sqrt(n);
  return v;
}

// 36 items, all +1, with caller-provided embeddings.
Inventory synthetic_inventory(const std::vector<Vec>& emb, std::size_t dim) {
  auto items = default_items();
  for (auto& it : items) it.sign = 1;
  return Inventory(items, emb, EmbedderConfig{dim, 0, 1});
}

}  // namespace

TEST(Inventory, BundledFileIsBalanced) {
  const Inventory inv = load_default_inventory({});
  std::array<int, 3> counts{};
  for (const auto& it : inv.items()) ++counts[static_cast<int>(it.scale)];
  EXPECT_EQ(counts, (std::array<int, 3>{12, 12, 12}));
  for (std::size_t i = 0; i < 36; ++i) {
    EXPECT_EQ(inv.items()[i].item_id, static_cast<int>(i) + 1);
    EXPECT_NEAR(l2_norm(inv.embeddings()[i]), 1.0, 1e-12);
  }
}

TEST(Inventory, ValidationErrors) {
  const EmbedderConfig cfg;
  auto items = default_items();
  auto short_list = items;
  short_list.pop_back();
  EXPECT_EQ(error_of([&] { Inventory(short_list, cfg); }), ErrorCode::kWrongItemCount);
  auto zero_sign = items;
  zero_sign[4].sign = 0;
  EXPECT_EQ(error_of([&] { Inventory(zero_sign, cfg); }), ErrorCode::kInvalidSign);
  auto lopsided = items;
  for (auto& it : lopsided) {
    if (it.scale == Scale::kBond) {
      it.scale = Scale::kTask;
      break;
    }
  }
  EXPECT_EQ(error_of([&] { Inventory(lopsided, cfg); }), ErrorCode::kScaleImbalance);
}

TEST(Inventory, HashDependsOnSignsAndEmbedder) {
  auto items = default_items();
  const Inventory a(items, EmbedderConfig{});
  items[0].sign = -items[0].sign;
  EXPECT_NE(a.hash(), Inventory(items, EmbedderConfig{}).hash());
  EXPECT_NE(a.hash(), load_default_inventory({300, 0, 1}).hash());
}

TEST(ScoreTurn, SelfSimilarityOfItemSeven) {
  const Inventory inv = load_default_inventory({});
  const auto s = score_turn(inv, inv.embeddings()[6]);
  EXPECT_NEAR(s[6], 1.0, 1e-12);
}

TEST(ScoreTurn, HeldOutDimensionIsOrthogonalToEveryItem) {
  Rng rng(2);
  std::vector<Vec> emb;
  for (int i = 0; i < 36; ++i) {
    Vec v = random_unit(rng, 7);
    v.push_back(0.0);
    emb.push_back(v);
  }
  const Inventory inv = synthetic_inventory(emb, 8);
  Vec turn(8, 0.0);
  turn[7] = 1.0;
  for (double x : score_turn(inv, turn)) EXPECT_EQ(x, 0.0);
}

TEST(ScoreTurn, BitwiseEqualToLoopOracle) {
  const Inventory inv = load_default_inventory({});
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Vec t = random_unit(rng, inv.dim());
    const auto got = score_turn(inv, t);
    const auto want = oracle::alliance(inv.embeddings(), t);
    ASSERT_EQ(got, want);
    const auto sc = scale_scores(inv, got);
    const auto ws = oracle::scales(inv.items(), want);
    ASSERT_EQ(sc.task, ws[0]);
    ASSERT_EQ(sc.bond, ws[1]);
    ASSERT_EQ(sc.goal, ws[2]);
  }
}

TEST(ScoreTurn, DimMismatch) {
  const Inventory inv = load_default_inventory({});
  EXPECT_EQ(error_of([&] { score_turn(inv, Vec(3, 1.0)); }), ErrorCode::kDimMismatch);
}

TEST(ScoreTurn, OneLipschitzPerCoordinate) {
  const Inventory inv = load_default_inventory({});
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const Vec a = random_unit(rng, inv.dim());
    Vec b = a;
    for (auto& x : b) x += 1e-3 * rng.normal();
    double n = 0.0;
    for (double x : b) n += x * x;
    for (auto& x : b) x /= std::sqrt(n);
    double delta = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) delta += (a[k] - b[k]) * (a[k] - b[k]);
    delta = std::sqrt(delta);
    const auto sa = score_turn(inv, a), sb = score_turn(inv, b);
    for (std::size_t k = 0; k < 36; ++k) EXPECT_LE(std::abs(sa[k] - sb[k]), delta * (1 + 1e-9));
  }
}

TEST(ScaleScores, UniformScores) {
  Rng rng(1);
  std::vector<Vec> emb;
  for (int i = 0; i < 36; ++i) emb.push_back(random_unit(rng, 4));
  const Inventory inv = synthetic_inventory(emb, 4);
  AllianceVector v;
  v.fill(0.25);
  const auto s = scale_scores(inv, v);
  EXPECT_EQ(s.task, 3.0);
  EXPECT_EQ(s.bond, 3.0);
  EXPECT_EQ(s.goal, 3.0);
}

TEST(ScaleScores, FlippingOneTaskSign) {
  Rng rng(1);
  std::vector<Vec> emb;
  for (int i = 0; i < 36; ++i) emb.push_back(random_unit(rng, 4));
  const Inventory inv = synthetic_inventory(emb, 4);
  AllianceVector v;
  v.fill(0.5);
  auto items = inv.items();
  const auto task_it = std::find_if(items.begin(), items.end(),
                                    [](const auto& it) { return it.scale == Scale::kTask; });
  task_it->sign = -1;
  const Inventory flipped(items, inv.embeddings(), inv.embedder());
  const auto before = scale_scores(inv, v), after = scale_scores(flipped, v);
  EXPECT_DOUBLE_EQ(before.task - after.task, 1.0);
  EXPECT_EQ(before.bond, after.bond);
  EXPECT_EQ(before.goal, after.goal);
}

TEST(ScaleScores, ShippedSignsOnSampledVector) {
  const Inventory inv = load_default_inventory({});
  Rng rng(8);
  AllianceVector v;
  for (auto& x : v) x = 2.0 * rng.uniform() - 1.0;
  // Hand-summed in a spreadsheet-like layout: one column per scale.
  double col[3] = {0, 0, 0};
  for (std::size_t i = 0; i < 36; ++i) {
    col[static_cast<int>(inv.items()[i].scale)] += inv.items()[i].sign * v[i];
  }
  const auto s = scale_scores(inv, v);
  EXPECT_EQ(s.task, col[0]);
  EXPECT_EQ(s.bond, col[1]);
  EXPECT_EQ(s.goal, col[2]);
  for (double x : {s.task, s.bond, s.goal}) {
    EXPECT_LE(std::abs(x), 12.0);
  }
}

TEST(ScaleScores, NonFinite) {
  const Inventory inv = load_default_inventory({});
  AllianceVector v{};
  v[3] = std::nan("");
  EXPECT_EQ(error_of([&] { scale_scores(inv, v); }), ErrorCode::kNonFiniteScore);
}

TEST(ScaleScores, PermutingItemIdsPermutesScores) {
  const Inventory inv = load_default_inventory({});
  std::vector<int> perm(36);
  std::iota(perm.begin(), perm.end(), 1);
  Rng rng(6);
  for (std::size_t i = 35; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
  auto items = inv.items();
  for (std::size_t i = 0; i < 36; ++i) items[i].item_id = perm[i];
  const Inventory permuted(items, inv.embeddings(), inv.embedder());
  const Vec t = random_unit(rng, inv.dim());
  const auto a = score_turn(inv, t), b = score_turn(permuted, t);
  for (std::size_t i = 0; i < 36; ++i) EXPECT_EQ(b[perm[i] - 1], a[i]);
  const auto sa = scale_scores(inv, a), sb = scale_scores(permuted, b);
  EXPECT_NEAR(sa.task, sb.task, 1e-12);
  EXPECT_NEAR(sa.bond, sb.bond, 1e-12);
  EXPECT_NEAR(sa.goal, sb.goal, 1e-12);
}
