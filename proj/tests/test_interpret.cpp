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
#include <sstream>

#include "dismop/agents.hpp"
#include "dismop/interpret.hpp"
#include "dismop/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dismop;
using fixture::error_of;

namespace {

// Recommends planted(current topic).
class ChainPolicy : public Policy {
 public:
  ChainPolicy(const ActionSpace& space, std::map<TopicId, TopicId> chain)
      : space_(space), chain_(std::move(chain)) {}
  Vec select_action(std::span<const double>) const override {
    fail(ErrorCode::kInvalidArgument, "needs the transition");
  }
  Vec act(const Transition& t) const override {
    return encode_topic(space_, chain_.at(t.meta.current_topic));
  }

 private:
  const ActionSpace& space_;
  std::map<TopicId, TopicId> chain_;
};

std::vector<Transition> transitions_in(const fixture::World& w, const Corpus& c) {
  return build_transitions(c, w.inventory, w.space, w.embedder, BuildSpec{});
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST(Pca, CollinearDataHasOneComponent) {
  std::vector<Vec> rows;
  for (int i = 0; i < 20; ++i) rows.push_back({double(i), 2.0 * i});
  const PcaModel m = fit_pca(rows, 2);
  EXPECT_TRUE(m.degenerate);
  ASSERT_EQ(m.n_components(), 1u);
  EXPECT_NEAR(m.components[0][0], 1.0 / std::sqrt(5.0), 1e-10);
  EXPECT_NEAR(m.components[0][1], 2.0 / std::sqrt(5.0), 1e-10);
  // Var(x) + Var(2x) with the n - 1 denominator: 5 * 35.
  EXPECT_NEAR(m.explained_variance[0], 175.0, 1e-8);
}

TEST(Pca, MatchesJacobiEigenvalues) {
  Rng rng(4);
  std::vector<Vec> rows;
  const double scale[6] = {5.0, 3.0, 2.0, 1.2, 0.6, 0.2};
  for (int i = 0; i < 30; ++i) {
    Vec r(6);
    for (int c = 0; c < 6; ++c) r[c] = scale[c] * rng.normal() + (c == 1 ? 0.5 * r[0] : 0.0);
    rows.push_back(r);
  }
  const PcaModel m = fit_pca(rows, 6);
  const auto want = oracle::jacobi_eigenvalues(oracle::covariance(rows));
  ASSERT_EQ(m.n_components(), 6u);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_NEAR(m.explained_variance[k], want[k], 1e-8 * want[0]) << k;
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_NEAR(dot(m.components[k], m.components[j]), k == j ? 1.0 : 0.0, 1e-8);
    }
  }
  for (std::size_t k = 1; k < 6; ++k) {
    EXPECT_LE(m.explained_variance[k], m.explained_variance[k - 1]);
  }
}

TEST(Pca, ProjectionAndErrors) {
  std::vector<Vec> rows = {{1, 0}, {-1, 0}, {0, 0.5}, {0, -0.5}};
  const PcaModel m = fit_pca(rows, 2);
  const Vec p = m.project(Vec{2.0, 0.0});
  // Power iteration stops on the Rayleigh quotient, so vectors carry ~1e-6 error.
  EXPECT_NEAR(std::abs(p[0]), 2.0, 1e-5);
  EXPECT_NEAR(p[1], 0.0, 1e-5);
  EXPECT_EQ(error_of([] { fit_pca({{1.0, 2.0}}, 1); }), ErrorCode::kDegenerateData);
  EXPECT_EQ(error_of([&] { fit_pca(rows, 3); }), ErrorCode::kDegenerateData);
}

TEST(Trajectory, ElevenStandardizedPoints) {
  const auto w = fixture::world(fixture::synth_corpus(30, 20, 0.2, 1));
  const PcaModel pca = fit_action_pca(w.transitions);
  const auto s = average_policy_trajectory(OracleReplayPolicy(w.space), w.transitions, pca, w.space);
  ASSERT_EQ(s.points.size(), 11u);
  EXPECT_EQ(s.point_topics.size(), 11u);
  EXPECT_EQ(s.endpoint_index, 10u);
  for (std::size_t k = 0; k < 2; ++k) {
    ASSERT_FALSE(s.degenerate_axes[k]);
    double mean = 0.0, var = 0.0;
    for (const auto& p : s.points) mean += p[k];
    mean /= 11.0;
    for (const auto& p : s.points) var += (p[k] - mean) * (p[k] - mean);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(var / 11.0, 1.0, 1e-9);
  }
}

TEST(Trajectory, ConstantTopicIsDegenerate) {
  const auto w = fixture::world(fixture::synth_corpus(20, 15, 0.0, 2));
  auto cfg = fixture::synth(40, 15, 0.0, 2);
  for (auto& [from, to] : cfg.planted_policy) to = from;
  // Identity chain: every session stays on its first topic. Keep topic 6.
  std::vector<Transition> on_six;
  for (const auto& t : transitions_in(w, generate_synthetic_corpus(cfg))) {
    if (t.meta.current_topic == 6) on_six.push_back(t);
  }
  if (on_six.empty()) GTEST_SKIP() << "no session starts on topic 6";
  const auto s = average_policy_trajectory(ConstantPolicy(w.space, 6), on_six,
                                           fit_action_pca(w.transitions), w.space);
  EXPECT_TRUE(s.degenerate_axes[0]);
  EXPECT_TRUE(s.degenerate_axes[1]);
  for (const auto& p : s.points) {
    EXPECT_EQ(p[0], 0.0);
    EXPECT_EQ(p[1], 0.0);
  }
  EXPECT_EQ(s.endpoint_index, 10u);
  for (TopicId t : s.point_topics) EXPECT_EQ(t, 6u);
}

TEST(Trajectory, DifferentChainsDiffer) {
  auto cfg_a = fixture::synth(60, 20, 0.0, 3);
  auto cfg_b = cfg_a;
  cfg_b.planted_policy = {{0, 8}, {8, 7}, {7, 6}, {6, 3}, {3, 2}, {2, 1}, {1, 0}};
  const auto w = fixture::world(generate_synthetic_corpus(cfg_a));
  const auto test_b = transitions_in(w, generate_synthetic_corpus(cfg_b));
  const PcaModel pca = fit_action_pca(w.transitions);
  const auto a = average_policy_trajectory(ChainPolicy(w.space, cfg_a.planted_policy),
                                           w.transitions, pca, w.space);
  const auto b = average_policy_trajectory(ChainPolicy(w.space, cfg_b.planted_policy), test_b,
                                           pca, w.space);
  double widest = 0.0;
  for (std::size_t i = 0; i < 11; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      widest = std::max(widest, std::abs(a.points[i][k] - b.points[i][k]));
    }
  }
  EXPECT_GT(widest, 0.5);
}

TEST(Trajectory, EmptyTestSet) {
  const auto w = fixture::world(fixture::synth_corpus(8, 15, 0.0, 2));
  EXPECT_EQ(error_of([&] {
              average_policy_trajectory(ConstantPolicy(w.space, 0), {},
                                        fit_action_pca(w.transitions), w.space);
            }),
            ErrorCode::kEmptyTestSet);
  EXPECT_EQ(error_of([&] { one_step_transition_matrix(ConstantPolicy(w.space, 0), {}, w.space); }),
            ErrorCode::kEmptyTestSet);
}

TEST(Matrix, ConstantPolicyGivesOneHotColumns) {
  const auto w = fixture::world(fixture::synth_corpus(20, 15, 0.3, 4));
  const auto m = one_step_transition_matrix(ConstantPolicy(w.space, 3), w.transitions, w.space);
  ASSERT_EQ(m.topics, (std::vector<TopicId>{0, 1, 2, 3, 6, 7, 8}));
  std::size_t total = 0;
  for (std::size_t r = 0; r < 7; ++r) {
    total += m.support[r];
    if (m.support[r] == 0) continue;
    for (std::size_t c = 0; c < 7; ++c) EXPECT_EQ(m.matrix[r][c], m.topics[c] == 3 ? 1.0 : 0.0);
  }
  EXPECT_EQ(total, w.transitions.size());
}

TEST(Matrix, ReplayRowsAreDistributions) {
  const auto w = fixture::world(fixture::synth_corpus(40, 20, 0.3, 5));
  const auto m = one_step_transition_matrix(OracleReplayPolicy(w.space), w.transitions, w.space);
  for (std::size_t r = 0; r < 7; ++r) {
    if (m.support[r] == 0) continue;
    double sum = 0.0;
    for (double v : m.matrix[r]) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Matrix, BehaviorClonedPolicyRecoversPlantedChain) {
  const auto cfg = fixture::synth(200, 30, 0.0, 6);
  const auto w = fixture::world(generate_synthetic_corpus(cfg));
  auto test_cfg = cfg;
  test_cfg.seed = 1006;
  test_cfg.n_sessions = 40;
  const auto test = transitions_in(w, generate_synthetic_corpus(test_cfg));
  AgentHyper h;
  h.pretrain_epochs = 100;
  h.epochs = 0;
  const auto res = train_agent(AgentKind::kDdpg, w.transitions, h, 1, w.space.bounds);
  const auto m = one_step_transition_matrix(*res.agent, test, w.space);
  for (std::size_t r = 0; r < 7; ++r) {
    if (m.support[r] == 0) continue;
    const TopicId planted = cfg.planted_policy.at(m.topics[r]);
    for (std::size_t c = 0; c < 7; ++c) {
      EXPECT_NEAR(m.matrix[r][c], m.topics[c] == planted ? 1.0 : 0.0, 0.05)
          << "row " << m.topics[r] << " col " << m.topics[c];
    }
  }
}

TEST(Export, JsonRoundTripAndCsvShape) {
  const auto w = fixture::world(fixture::synth_corpus(20, 15, 0.2, 7));
  const OracleReplayPolicy replay(w.space);
  const auto s = average_policy_trajectory(replay, w.transitions, fit_action_pca(w.transitions),
                                           w.space);
  const std::string js = export_plot_data(s, ExportFormat::kJson);
  EXPECT_NE(js.find("\"endpoint_index\":10"), std::string::npos);
  const auto back = parse_trajectory_json(js);
  EXPECT_EQ(back.points, s.points);
  EXPECT_EQ(back.point_topics, s.point_topics);

  const auto m = one_step_transition_matrix(replay, w.transitions, w.space);
  const auto mback = parse_transition_matrix_json(export_plot_data(m, ExportFormat::kJson));
  EXPECT_EQ(mback.matrix, m.matrix);
  EXPECT_EQ(mback.support, m.support);

  std::istringstream csv(export_plot_data(m, ExportFormat::kCsv));
  std::size_t lines = 0;
  for (std::string line; std::getline(csv, line); ++lines) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7) << line;
  }
  EXPECT_EQ(lines, 8u);

  std::istringstream traj(export_plot_data(s, ExportFormat::kCsv));
  std::string header, line;
  std::getline(traj, header);
  EXPECT_EQ(header, "index,x,y,topic,endpoint");
  std::size_t endpoints = 0, rows = 0;
  while (std::getline(traj, line)) {
    ++rows;
    endpoints += line.back() == '1';
  }
  EXPECT_EQ(rows, 11u);
  EXPECT_EQ(endpoints, 1u);
}

TEST(Export, FormatsAndSchemas) {
  EXPECT_EQ(parse_export_format("csv"), ExportFormat::kCsv);
  EXPECT_EQ(error_of([] { parse_export_format("png"); }), ErrorCode::kUnsupportedFormat);
  EXPECT_EQ(error_of([] { parse_trajectory_json(R"({"schema":"dismop-traj/2"})"); }),
            ErrorCode::kSchemaVersionMismatch);
  EXPECT_EQ(error_of([] { parse_transition_matrix_json("[]"); }), ErrorCode::kParseError);
}
