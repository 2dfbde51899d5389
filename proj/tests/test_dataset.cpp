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

#include <algorithm>
#include <cmath>

#include "dismop/dataset.hpp"
#include "dismop/embedding.hpp"
#include "dismop/io.hpp"
#include "dismop/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dismop;
using fixture::error_of;

namespace {

const std::vector<TopicId> kIds = {0, 1, 2, 3, 6, 7, 8};

// Alternating session of `pairs` pairs; pair k has topic kIds[k % 7].
SessionTranscript session(const std::string& id, std::size_t pairs) {
  SessionTranscript s{id, Disorder::kDepression, {}};
  for (std::size_t k = 0; k < pairs; ++k) {
    const TopicId t = kIds[k % kIds.size()];
    s.turns.push_back(fixture::turn(Speaker::kTherapist, "topic" + std::to_string(t) + " ask", t));
    s.turns.push_back(
        fixture::turn(Speaker::kPatient, "topic" + std::to_string(t) + " reply " + std::to_string(k)));
  }
  return s;
}

// Random speaker sequences, including leading patient turns and runs.
Corpus ragged_corpus(Rng& rng) {
  Corpus c;
  const std::size_t n = 1 + rng.uniform_index(12);
  for (std::size_t i = 0; i < n; ++i) {
    SessionTranscript s{"r" + std::to_string(i), Disorder::kAnxiety, {}};
    const std::size_t len = rng.uniform_index(60);
    for (std::size_t k = 0; k < len; ++k) {
      const bool therapist = rng.uniform() < 0.55;
      const TopicId t = kIds[rng.uniform_index(7)];
      s.turns.push_back(fixture::turn(therapist ? Speaker::kTherapist : Speaker::kPatient,
                                      "word" + std::to_string(t), t));
    }
    c.sessions.push_back(s);
  }
  return c;
}

const fixture::World& base_world() {
  static const fixture::World w = fixture::world(fixture::synth_corpus(40, 20, 0.1, 8));
  return w;
}

}  // namespace

TEST(Pairs, SkipsLeadingPatientAndKeepsLastTherapist) {
  SessionTranscript s{"s", Disorder::kAnxiety, {}};
  s.turns = {fixture::turn(Speaker::kPatient, "hi"), fixture::turn(Speaker::kTherapist, "a"),
             fixture::turn(Speaker::kTherapist, "b"), fixture::turn(Speaker::kPatient, "c"),
             fixture::turn(Speaker::kPatient, "d"), fixture::turn(Speaker::kTherapist, "e"),
             fixture::turn(Speaker::kPatient, "f")};
  const auto pairs = extract_pairs(s);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].therapist, 2u);
  EXPECT_EQ(pairs[0].patient, 3u);
  EXPECT_EQ(pairs[1].therapist, 5u);
  EXPECT_EQ(pairs[1].pair_index, 1u);
}

TEST(Build, TwelvePairsGiveTwoTransitions) {
  const auto& w = base_world();
  Corpus c;
  c.sessions = {session("a", 12), session("b", 10)};
  const auto tr = build_transitions(c, w.inventory, w.space, w.embedder, BuildSpec{});
  ASSERT_EQ(tr.size(), 2u);
  EXPECT_FALSE(tr[0].done);
  EXPECT_TRUE(tr[1].done);
  EXPECT_EQ(tr[0].meta.pair_index, 9u);
  EXPECT_EQ(tr[0].meta.current_topic, kIds[9 % 7]);
  EXPECT_EQ(tr[0].meta.action_topic, kIds[10 % 7]);
  EXPECT_EQ(tr[0].next_state, tr[1].state);
}

TEST(Build, CountMatchesRecountOnRaggedCorpora) {
  const auto& w = base_world();
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const Corpus c = ragged_corpus(rng);
    const auto tr = build_transitions(c, w.inventory, w.space, w.embedder, BuildSpec{});
    EXPECT_EQ(tr.size(), oracle::count_transitions(c, 10)) << trial;
  }
}

TEST(Build, StateIsMeanOfPairMeans) {
  const auto& w = base_world();
  Corpus c;
  c.sessions = {session("a", 13)};
  const auto tr = build_transitions(c, w.inventory, w.space, w.embedder, BuildSpec{});
  const auto& s = c.sessions[0];
  for (const auto& t : tr) {
    Vec want(64, 0.0);
    for (std::size_t k = t.meta.pair_index + 1 - 10; k <= t.meta.pair_index; ++k) {
      const Vec a = embed_text(w.embedder, s.turns[2 * k].text);
      const Vec b = embed_text(w.embedder, s.turns[2 * k + 1].text);
      for (std::size_t i = 0; i < 64; ++i) want[i] += (a[i] + b[i]) / 2.0 / 10.0;
    }
    for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(t.state[i], want[i], 1e-14);
  }
}

TEST(Build, PlusLastPatientAppendsEmbedding) {
  const auto& w = base_world();
  Corpus c;
  c.sessions = {session("a", 12)};
  BuildSpec spec;
  spec.context_mode = ContextMode::kHistoryMeanPlusLastPatient;
  const auto plain = build_transitions(c, w.inventory, w.space, w.embedder, BuildSpec{});
  const auto tr = build_transitions(c, w.inventory, w.space, w.embedder, spec);
  ASSERT_EQ(tr.size(), 2u);
  ASSERT_EQ(tr[0].state.size(), 128u);
  EXPECT_TRUE(std::equal(plain[0].state.begin(), plain[0].state.end(), tr[0].state.begin()));
  const Vec last = embed_text(w.embedder, c.sessions[0].turns[2 * 9 + 1].text);
  EXPECT_TRUE(std::equal(last.begin(), last.end(), tr[0].state.begin() + 64));
}

TEST(Build, TaskRewardForItemOneResponse) {
  auto items = base_world().inventory.items();
  for (auto& it : items) it.sign = 1;
  const EmbedderConfig emb;
  const Inventory inv(items, emb);
  const auto& w = base_world();
  Corpus c;
  c.sessions = {session("a", 11)};
  c.sessions[0].turns[21].text = inv.items()[0].text;  // patient turn of pair 10
  const auto tr = build_transitions(c, inv, w.space, emb, BuildSpec{});
  ASSERT_EQ(tr.size(), 1u);
  const auto scores = oracle::alliance(inv.embeddings(), inv.embeddings()[0]);
  EXPECT_EQ(tr[0].reward, oracle::scales(inv.items(), scores)[0]);
  double expected = 1.0;
  for (std::size_t i = 1; i < 36; ++i) {
    if (inv.items()[i].scale == Scale::kTask) expected += scores[i];
  }
  EXPECT_NEAR(tr[0].reward, expected, 1e-12);
}

TEST(Build, RewardScaleSelectsComponent) {
  const Corpus c = fixture::synth_corpus(3, 12, 0.0, 1);
  const auto& w = base_world();
  for (Scale scale : kAllScales) {
    BuildSpec spec;
    spec.reward = scale;
    const auto tr = build_transitions(c, w.inventory, w.space, w.embedder, spec);
    for (const auto& t : tr) {
      const auto& s = c.sessions[0];
      if (t.meta.session_id != s.session_id) continue;
      const Vec e = embed_text(w.embedder, s.turns[2 * (t.meta.pair_index + 1) + 1].text);
      const auto sc = oracle::scales(w.inventory.items(), oracle::alliance(w.inventory.embeddings(), e));
      EXPECT_EQ(t.reward, sc[static_cast<int>(scale)]);
    }
  }
}

TEST(Build, DatasetInvariants) {
  const auto& w = base_world();
  for (const auto& t : w.transitions) {
    EXPECT_EQ(t.action, encode_topic(w.space, t.meta.action_topic));
    EXPECT_EQ(decode_action(w.space, t.action).topic_id, t.meta.action_topic);
    EXPECT_LE(std::abs(t.reward), 12.0);
    EXPECT_LE(l2_norm(t.state), 1.0 + 1e-12);
    EXPECT_EQ(t.meta.frame_topics.size(), 10u);
    EXPECT_EQ(t.meta.frame_topics.back(), t.meta.current_topic);
  }
}

TEST(Build, UnlabeledTurns) {
  const auto& w = base_world();
  Corpus c = fixture::synth_corpus(2, 12, 0.0, 3);
  Corpus stripped = c;
  for (auto& s : stripped.sessions) {
    for (auto& t : s.turns) t.topic.reset();
  }
  BuildSpec strict;
  strict.auto_label = false;
  EXPECT_EQ(error_of([&] { build_transitions(stripped, w.inventory, w.space, w.embedder, strict); }),
            ErrorCode::kUnlabeledTurn);
  // Synthetic turns draw only from their topic's lexicon, so decoding recovers the label.
  const auto labeled = build_transitions(c, w.inventory, w.space, w.embedder, BuildSpec{});
  const auto auto_labeled = build_transitions(stripped, w.inventory, w.space, w.embedder, BuildSpec{});
  ASSERT_EQ(labeled.size(), auto_labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    EXPECT_EQ(labeled[i].meta.action_topic, auto_labeled[i].meta.action_topic);
  }
}

TEST(Build, DimMismatch) {
  const auto& w = base_world();
  const EmbedderConfig other{32, 0, 1};
  EXPECT_EQ(error_of([&] {
              build_transitions(fixture::synth_corpus(2, 12, 0.0, 3), w.inventory, w.space, other,
                                BuildSpec{});
            }),
            ErrorCode::kDimMismatch);
}

TEST(Cache, RoundTripAndKeyCheck) {
  const auto& w = base_world();
  fixture::TempDir dir("cache");
  const std::string key = dataset_cache_key(w.embedder, w.inventory, w.space, BuildSpec{});
  write_transition_cache(dir / "t.jsonl", w.transitions, key);
  const auto back = read_transition_cache(dir / "t.jsonl", key);
  ASSERT_EQ(back.size(), w.transitions.size());
  EXPECT_EQ(transitions_to_jsonl(back, key), read_file(dir / "t.jsonl"));
  BuildSpec bond;
  bond.reward = Scale::kBond;
  const std::string other = dataset_cache_key(w.embedder, w.inventory, w.space, bond);
  EXPECT_NE(key, other);
  EXPECT_EQ(error_of([&] { read_transition_cache(dir / "t.jsonl", other); }),
            ErrorCode::kProvenanceMismatch);
}

TEST(Batches, Sizes) {
  auto sizes = [](std::size_t n) {
    std::vector<std::size_t> out;
    for (const auto& b : sample_batches(n, 32, 1)) out.push_back(b.size());
    return out;
  };
  EXPECT_EQ(sizes(64), (std::vector<std::size_t>{32, 32}));
  EXPECT_EQ(sizes(33), (std::vector<std::size_t>{32, 1}));
  EXPECT_EQ(error_of([] { sample_batches(0, 32, 1); }), ErrorCode::kEmptyDataset);
}

TEST(Batches, SeededAndAPermutation) {
  EXPECT_EQ(sample_batches(1000, 32, 5), sample_batches(1000, 32, 5));
  EXPECT_NE(sample_batches(1000, 32, 5), sample_batches(1000, 32, 6));
  std::vector<std::size_t> all;
  for (const auto& b : sample_batches(1000, 32, 5)) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
}

TEST(Batches, MatrixLayout) {
  const auto& w = base_world();
  const std::vector<std::size_t> idx = {3, 0, 7};
  const auto b = make_batch(w.transitions, idx);
  ASSERT_EQ(b.size(), 3);
  for (int r = 0; r < 3; ++r) {
    const auto& t = w.transitions[idx[r]];
    EXPECT_EQ(b.rewards(r), t.reward);
    EXPECT_EQ(b.dones(r), t.done ? 1.0 : 0.0);
    for (std::size_t k = 0; k < t.state.size(); ++k) EXPECT_EQ(b.states(r, k), t.state[k]);
    for (std::size_t k = 0; k < t.action.size(); ++k) EXPECT_EQ(b.actions(r, k), t.action[k]);
  }
}

TEST(Overrides, ReplaceMatchingRewardOnly) {
  auto tr = base_world().transitions;
  const auto& target = tr[5];
  const RewardOverride o{target.meta.session_id, target.meta.patient_turn, 0.5};
  const auto before = tr;
  EXPECT_EQ(override_rewards(tr, std::span<const RewardOverride>(&o, 1)), 1u);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    EXPECT_EQ(tr[i].reward, i == 5 ? 0.5 : before[i].reward);
  }
}

TEST(SplitTransitions, Partition) {
  const auto& tr = base_world().transitions;
  const auto [a, b] = split_transitions(tr, SplitSpec{0.8, 3, SplitUnit::kTransition});
  EXPECT_EQ(a.size() + b.size(), tr.size());
  EXPECT_EQ(a.size(), static_cast<std::size_t>(std::llround(0.8 * tr.size())));
}
