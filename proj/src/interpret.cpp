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

#include "dismop/interpret.hpp"

#include <cmath>
#include <cstdio>

#include "dismop/error.hpp"
#include "json.hpp"

namespace dismop {

using nlohmann::json;

PcaModel fit_action_pca(const std::vector<Transition>& train) {
  std::vector<Vec> rows;
  rows.reserve(train.size());
  for (const auto& t : train) rows.push_back(t.action);
  return fit_pca(rows, 2);
}

TrajectorySummary average_policy_trajectory(const Policy& policy,
                                            const std::vector<Transition>& test,
                                            const PcaModel& pca, const ActionSpace& space) {
  if (test.empty()) fail(ErrorCode::kEmptyTestSet, "no test transitions");
  const std::size_t w = test.front().meta.frame_topics.size();
  const std::size_t n_points = w + 1;
  const std::size_t d = space.dim();

  std::vector<Point2> sum2(n_points, Point2{0.0, 0.0});
  std::vector<Vec> sum_full(n_points, Vec(d, 0.0));
  auto add = [&](std::size_t i, const Vec& a) {
    const Vec p = pca.project(a, 2);
    for (std::size_t k = 0; k < 2; ++k) sum2[i][k] += k < p.size() ? p[k] : 0.0;
    for (std::size_t j = 0; j < d; ++j) sum_full[i][j] += a[j];
  };
  for (const Transition& t : test) {
    if (t.meta.frame_topics.size() != w) {
      fail(ErrorCode::kShapeMismatch, "test transitions mix frame sizes");
    }
    for (std::size_t i = 0; i < w; ++i) add(i, encode_topic(space, t.meta.frame_topics[i]));
    add(w, policy.act(t));
  }

  const double n = static_cast<double>(test.size());
  TrajectorySummary out;
  out.endpoint_index = w;
  out.points.resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    for (std::size_t k = 0; k < 2; ++k) out.points[i][k] = sum2[i][k] / n;
    Vec mean(d);
    for (std::size_t j = 0; j < d; ++j) mean[j] = sum_full[i][j] / n;
    out.point_topics.push_back(decode_action(space, mean).topic_id);
  }

  for (std::size_t k = 0; k < 2; ++k) {
    double mu = 0.0, scale = 0.0;
    for (const auto& p : out.points) {
      mu += p[k];
      scale = std::max(scale, std::abs(p[k]));
    }
    mu /= static_cast<double>(n_points);
    double var = 0.0;
    for (const auto& p : out.points) var += (p[k] - mu) * (p[k] - mu);
    var /= static_cast<double>(n_points);
    const double sd = std::sqrt(var);
    // Coinciding points still leave rounding residue in the mean.
    if (sd <= 1e-12 * std::max(1.0, scale)) {
      out.degenerate_axes[k] = true;
      for (auto& p : out.points) p[k] = 0.0;
    } else {
      for (auto& p : out.points) p[k] = (p[k] - mu) / sd;
    }
  }
  return out;
}

TransitionMatrix one_step_transition_matrix(const Policy& policy,
                                            const std::vector<Transition>& test,
                                            const ActionSpace& space) {
  if (test.empty()) fail(ErrorCode::kEmptyTestSet, "no test transitions");
  const std::size_t k = space.catalog.size();
  TransitionMatrix m;
  for (const auto& topic : space.catalog.topics()) m.topics.push_back(topic.id);
  m.matrix.assign(k, std::vector<double>(k, 0.0));
  m.support.assign(k, 0);
  for (const Transition& t : test) {
    const std::size_t row = space.catalog.index_of(t.meta.current_topic);
    const TopicId col = decode_action(space, policy.act(t)).topic_id;
    m.matrix[row][space.catalog.index_of(col)] += 1.0;
    ++m.support[row];
  }
  for (std::size_t r = 0; r < k; ++r) {
    if (m.support[r] == 0) continue;
    for (double& v : m.matrix[r]) v /= static_cast<double>(m.support[r]);
  }
  return m;
}

ExportFormat parse_export_format(std::string_view s) {
  if (s == "json") return ExportFormat::kJson;
  if (s == "csv") return ExportFormat::kCsv;
  fail(ErrorCode::kUnsupportedFormat, "unsupported export format '" + std::string(s) + "'");
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string export_plot_data(const TrajectorySummary& s, ExportFormat format) {
  if (format == ExportFormat::kJson) {
    json j;
    j["schema"] = kTrajectorySchema;
    j["points"] = s.points;
    j["point_topics"] = s.point_topics;
    j["endpoint_index"] = s.endpoint_index;
    j["degenerate_axes"] = s.degenerate_axes;
    return j.dump();
  }
  std::string out = "index,x,y,topic,endpoint\n";
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    out += std::to_string(i) + "," + num(s.points[i][0]) + "," + num(s.points[i][1]) + "," +
           std::to_string(s.point_topics[i]) + "," + (i == s.endpoint_index ? "1" : "0") + "\n";
  }
  return out;
}

std::string export_plot_data(const TransitionMatrix& m, ExportFormat format) {
  if (format == ExportFormat::kJson) {
    json j;
    j["schema"] = kTransitionMatrixSchema;
    j["topics"] = m.topics;
    j["matrix"] = m.matrix;
    j["support"] = m.support;
    return j.dump();
  }
  std::string out = "topic";
  for (TopicId t : m.topics) out += "," + std::to_string(t);
  out += "\n";
  for (std::size_t r = 0; r < m.topics.size(); ++r) {
    out += std::to_string(m.topics[r]);
    for (double v : m.matrix[r]) out += "," + num(v);
    out += "\n";
  }
  return out;
}

TrajectorySummary parse_trajectory_json(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    if (j.at("schema").get<std::string>() != kTrajectorySchema) {
      fail(ErrorCode::kSchemaVersionMismatch, "expected " + std::string(kTrajectorySchema));
    }
    TrajectorySummary s;
    s.points = j.at("points").get<std::vector<Point2>>();
    s.point_topics = j.at("point_topics").get<std::vector<TopicId>>();
    s.endpoint_index = j.at("endpoint_index").get<std::size_t>();
    s.degenerate_axes = j.value("degenerate_axes", std::array<bool, 2>{false, false});
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("trajectory: ") + e.what());
  }
}

TransitionMatrix parse_transition_matrix_json(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    if (j.at("schema").get<std::string>() != kTransitionMatrixSchema) {
      fail(ErrorCode::kSchemaVersionMismatch, "expected " + std::string(kTransitionMatrixSchema));
    }
    TransitionMatrix m;
    m.topics = j.at("topics").get<std::vector<TopicId>>();
    m.matrix = j.at("matrix").get<std::vector<std::vector<double>>>();
    m.support = j.at("support").get<std::vector<std::size_t>>();
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("transition matrix: ") + e.what());
  }
}

}  // namespace dismop
