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

#include "dismop/actionspace.hpp"
#include "dismop/embedding.hpp"
#include "dismop/pca.hpp"
#include "dismop/pipeline.hpp"
#include "dismop/rng.hpp"
#include "fixtures.hpp"

using namespace dismop;
using fixture::error_of;

namespace {

const std::vector<TopicId> kIds = {0, 1, 2, 3, 6, 7, 8};

ActionSpace space_of(SpaceKind kind, const Corpus& c) {
  PipelineConfig cfg;
  cfg.space_kind = kind;
  return prepare_action_space(c, cfg, TopicCatalog::default_catalog());
}

double dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// One labeled pair per topic, each turn a single lexicon word.
Corpus one_turn_per_topic() {
  SessionTranscript s{"s", Disorder::kAnxiety, {}};
  const std::vector<std::string> words = {"alpha", "bravo", "charlie", "delta",
                                          "echo",  "foxtrot", "golf"};
  for (std::size_t i = 0; i < kIds.size(); ++i) {
    s.turns.push_back(fixture::turn(Speaker::kTherapist, words[i], kIds[i]));
  }
  Corpus c;
  c.sessions.push_back(s);
  return c;
}

}  // namespace

TEST(Catalog, DefaultIdsAndLabels) {
  const auto cat = TopicCatalog::default_catalog();
  ASSERT_EQ(cat.size(), 7u);
  for (std::size_t i = 0; i < kIds.size(); ++i) EXPECT_EQ(cat.topics()[i].id, kIds[i]);
  EXPECT_EQ(cat.label(1), "play");
  EXPECT_EQ(cat.label(6), "dealing with stress");
  EXPECT_FALSE(cat.contains(4));
  EXPECT_FALSE(cat.contains(5));
  EXPECT_EQ(parse_catalog(catalog_to_json(cat)), cat);
  EXPECT_EQ(error_of([] { TopicCatalog({{1, "a"}, {1, "b"}}); }), ErrorCode::kInvalidConfig);
}

TEST(Build, SingletonTopicsGiveTheirEmbeddings) {
  const Corpus c = one_turn_per_topic();
  const auto space = build_action_space(c, {}, TopicCatalog::default_catalog());
  const std::vector<std::string> words = {"alpha", "bravo", "charlie", "delta",
                                          "echo",  "foxtrot", "golf"};
  for (std::size_t i = 0; i < kIds.size(); ++i) {
    EXPECT_EQ(encode_topic(space, kIds[i]), embed_text({}, words[i]));
  }
}

TEST(Build, DuplicatingTurnsKeepsCentroids) {
  const Corpus c = fixture::synth_corpus(6, 8, 0.2, 4);
  Corpus doubled = c;
  for (auto& s : doubled.sessions) {
    const auto turns = s.turns;
    s.turns.insert(s.turns.end(), turns.begin(), turns.end());
  }
  const auto a = build_action_space(c, {}, TopicCatalog::default_catalog());
  const auto b = build_action_space(doubled, {}, TopicCatalog::default_catalog());
  for (std::size_t i = 0; i < a.centroids.size(); ++i) {
    for (std::size_t k = 0; k < a.dim(); ++k) {
      EXPECT_NEAR(a.centroids[i][k], b.centroids[i][k], 1e-15);
    }
  }
}

TEST(Build, DisjointLexiconsSeparateCentroids) {
  const auto space = space_of(SpaceKind::kDoc, fixture::synth_corpus(20, 10, 0.0, 1));
  double min_d = 1e9;
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = i + 1; j < 7; ++j) {
      min_d = std::min(min_d, dist(space.centroids[i], space.centroids[j]));
    }
  }
  EXPECT_GT(min_d, 0.1);
}

TEST(Build, MissingTopicIsReported) {
  Corpus c = one_turn_per_topic();
  c.sessions[0].turns.pop_back();
  try {
    build_action_space(c, {}, TopicCatalog::default_catalog());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTopicWithoutSupport);
    EXPECT_NE(std::string(e.what()).find('8'), std::string::npos);
  }
}

TEST(Bounds, PaddedByTenPercentWithFloor) {
  const Bounds b = bounds_around({{0.0, 1.0}, {2.0, 1.0}});
  EXPECT_DOUBLE_EQ(b.lo[0], -0.2);
  EXPECT_DOUBLE_EQ(b.hi[0], 2.2);
  EXPECT_DOUBLE_EQ(b.lo[1], 1.0 - 1e-6);
  EXPECT_DOUBLE_EQ(b.hi[1], 1.0 + 1e-6);
}

TEST(Decode, RoundTripInEveryVariant) {
  const Corpus c = fixture::synth_corpus(30, 10, 0.1, 2);
  for (SpaceKind kind : {SpaceKind::kDoc, SpaceKind::kPca, SpaceKind::kPca2}) {
    const auto space = space_of(kind, c);
    EXPECT_EQ(space.dim(), target_dim(kind, 64));
    for (TopicId t : kIds) {
      EXPECT_EQ(decode_action(space, encode_topic(space, t)).topic_id, t) << to_string(kind);
      for (std::size_t i = 0; i < space.dim(); ++i) {
        EXPECT_TRUE(space.bounds.contains(encode_topic(space, t)));
      }
    }
  }
}

TEST(Decode, SelfDecodeHasPositiveMargin) {
  const auto space = space_of(SpaceKind::kDoc, fixture::synth_corpus(20, 10, 0.0, 1));
  const auto d = decode_action(space, encode_topic(space, 2));
  EXPECT_EQ(d.topic_id, 2);
  EXPECT_GT(d.margin, 0.0);
}

TEST(Decode, TieGoesToSmallerId) {
  ActionSpace space;
  space.catalog = TopicCatalog({{7, "seven"}, {2, "two"}});
  space.centroids = {{1.0, 0.0}, {0.0, 1.0}};
  space.bounds = bounds_around(space.centroids);
  const auto d = decode_action(space, Vec{0.5, 0.5});
  EXPECT_EQ(d.topic_id, 2);
  EXPECT_EQ(d.margin, 0.0);
}

TEST(Decode, ScaleInvariant) {
  const auto space = space_of(SpaceKind::kDoc, fixture::synth_corpus(20, 10, 0.0, 1));
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    Vec a(space.dim());
    for (auto& x : a) x = rng.normal();
    Vec b = a;
    const double lambda = 0.01 + 10.0 * rng.uniform();
    for (auto& x : b) x *= lambda;
    EXPECT_EQ(decode_action(space, a).topic_id, decode_action(space, b).topic_id);
  }
}

TEST(Decode, RobustToNoiseAtQuarterMargin) {
  const auto space = space_of(SpaceKind::kDoc, fixture::synth_corpus(20, 10, 0.0, 1));
  const Vec c6 = encode_topic(space, 6);
  // The margin is a cosine gap, so the noise is measured relative to |c6|.
  const double sigma = 0.25 * decode_action(space, c6).margin * l2_norm(c6);
  Rng rng(1234);
  int hits = 0;
  for (int i = 0; i < 1000; ++i) {
    Vec a = c6;
    for (auto& x : a) x += sigma * rng.normal();
    hits += decode_action(space, a).topic_id == 6;
  }
  EXPECT_GE(hits, 990);
}

TEST(Decode, ClampedActionsAlwaysDecode) {
  const Corpus c = fixture::synth_corpus(20, 10, 0.0, 1);
  for (SpaceKind kind : {SpaceKind::kDoc, SpaceKind::kPca, SpaceKind::kPca2}) {
    const auto space = space_of(kind, c);
    Rng rng(5);
    for (int i = 0; i < 300; ++i) {
      Vec a(space.dim());
      for (auto& x : a) x = 5.0 * rng.normal();
      const Vec clamped = space.bounds.clamp(a);
      EXPECT_TRUE(space.bounds.contains(clamped));
      EXPECT_NO_THROW(decode_action(space, clamped));
    }
  }
}

TEST(Decode, Errors) {
  const auto space = space_of(SpaceKind::kDoc, fixture::synth_corpus(20, 10, 0.0, 1));
  EXPECT_EQ(error_of([&] { decode_action(space, Vec(space.dim(), 0.0)); }), ErrorCode::kZeroNorm);
  EXPECT_EQ(error_of([&] { decode_action(space, Vec(3, 1.0)); }), ErrorCode::kDimMismatch);
  EXPECT_EQ(error_of([&] { encode_topic(space, 5); }), ErrorCode::kUnknownTopic);
}

TEST(Encode, StableReference) {
  const auto space = space_of(SpaceKind::kDoc, fixture::synth_corpus(20, 10, 0.0, 1));
  const Vec* first = &encode_topic(space, 3);
  EXPECT_EQ(first, &encode_topic(space, 3));
  EXPECT_EQ(*first, encode_topic(space, 3));
}

TEST(Reduce, IdentityProjectionOnlyShifts) {
  const EmbedderConfig cfg{36, 0, 1};
  const auto space =
      build_action_space(fixture::synth_corpus(10, 10, 0.0, 1), cfg, TopicCatalog::default_catalog());
  PcaModel pca;
  Rng rng(3);
  pca.mean.resize(36);
  for (auto& x : pca.mean) x = 0.01 * rng.normal();
  for (std::size_t i = 0; i < 36; ++i) {
    Vec e(36, 0.0);
    e[i] = 1.0;
    pca.components.push_back(e);
  }
  pca.explained_variance.assign(36, 1.0);
  const auto reduced = reduce_action_space(space, SpaceKind::kPca, pca);
  for (std::size_t t = 0; t < 7; ++t) {
    for (std::size_t i = 0; i < 36; ++i) {
      EXPECT_NEAR(reduced.centroids[t][i], space.centroids[t][i] - pca.mean[i], 1e-15);
    }
  }
}

TEST(Reduce, Pca2ShapeAndContraction) {
  const Corpus c = fixture::synth_corpus(20, 10, 0.0, 1);
  const auto doc = space_of(SpaceKind::kDoc, c);
  const auto p2 = space_of(SpaceKind::kPca2, c);
  const auto p36 = space_of(SpaceKind::kPca, c);
  ASSERT_EQ(p2.centroids.size(), 7u);
  EXPECT_EQ(p2.dim(), 2u);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 7; ++j) {
      const double d = dist(doc.centroids[i], doc.centroids[j]);
      EXPECT_LE(dist(p2.centroids[i], p2.centroids[j]), d + 1e-9);
      EXPECT_LE(dist(p36.centroids[i], p36.centroids[j]), d + 1e-9);
    }
  }
}

TEST(Reduce, TooFewComponents) {
  const auto space = space_of(SpaceKind::kDoc, fixture::synth_corpus(20, 10, 0.0, 1));
  PcaModel pca;
  pca.mean.assign(space.dim(), 0.0);
  pca.components.assign(1, Vec(space.dim(), 0.125));
  pca.explained_variance = {1.0};
  EXPECT_EQ(error_of([&] { reduce_action_space(space, SpaceKind::kPca2, pca); }),
            ErrorCode::kInsufficientComponents);
}

TEST(Space, JsonRoundTripKeepsHash) {
  const auto space = space_of(SpaceKind::kPca2, fixture::synth_corpus(20, 10, 0.0, 1));
  const auto back = action_space_from_json(action_space_to_json(space));
  EXPECT_EQ(back.hash(), space.hash());
  EXPECT_EQ(action_space_to_json(back), action_space_to_json(space));
}
