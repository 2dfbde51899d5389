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

#include "dismop/eval.hpp"

#include <cstdio>
#include <map>
#include <tuple>

#include "dismop/error.hpp"

namespace dismop {

AccuracyReport turn_level_accuracy(const Policy& policy, const std::vector<Transition>& test,
                                   const ActionSpace& space) {
  if (test.empty()) fail(ErrorCode::kEmptyTestSet, "no test transitions");
  const std::size_t k = space.catalog.size();
  AccuracyReport r;
  r.n_test = test.size();
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t hits = 0;
  for (const Transition& t : test) {
    const TopicId predicted = decode_action(space, policy.act(t)).topic_id;
    const std::size_t truth = space.catalog.index_of(t.meta.action_topic);
    ++r.confusion[truth][space.catalog.index_of(predicted)];
    if (predicted == t.meta.action_topic) ++hits;
  }
  r.accuracy = static_cast<double>(hits) / static_cast<double>(r.n_test);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t support = 0;
    for (std::size_t c : r.confusion[i]) support += c;
    if (support > 0) {
      r.per_topic_recall[space.catalog.topics()[i].id] =
          static_cast<double>(r.confusion[i][i]) / static_cast<double>(support);
    }
  }
  return r;
}

AccuracyGrid assemble_grid(const std::vector<GridEntry>& entries) {
  AccuracyGrid g;
  g.rows = grid_row_labels();
  const auto scopes = grid_scopes();
  for (const auto& s : scopes) g.columns.push_back(to_string(s));

  std::map<std::pair<std::string, std::string>, double> lookup;
  for (const auto& e : entries) lookup[{e.id.row_label(), to_string(e.id.disorder)}] = e.accuracy;

  g.cells.assign(g.rows.size(), std::vector<double>(g.columns.size(), 0.0));
  g.winners.assign(g.rows.size(), std::vector<bool>(g.columns.size(), false));
  for (std::size_t r = 0; r < g.rows.size(); ++r) {
    for (std::size_t c = 0; c < g.columns.size(); ++c) {
      const auto it = lookup.find({g.rows[r], g.columns[c]});
      if (it == lookup.end()) {
        fail(ErrorCode::kMissingCell, "no result for " + g.rows[r] + " / " + g.columns[c]);
      }
      g.cells[r][c] = it->second;
    }
  }
  for (std::size_t c = 0; c < g.columns.size(); ++c) {
    double best = g.cells[0][c];
    for (std::size_t r = 1; r < g.rows.size(); ++r) best = std::max(best, g.cells[r][c]);
    for (std::size_t r = 0; r < g.rows.size(); ++r) g.winners[r][c] = g.cells[r][c] == best;
  }
  return g;
}

AccuracyGrid accuracy_grid(const std::vector<Checkpoint>& checkpoints, const Corpus& test,
                           const Inventory& inv) {
  std::map<std::tuple<std::string, Scale, std::string>, std::vector<Transition>> test_sets;
  std::vector<GridEntry> entries;
  for (const Checkpoint& ckpt : checkpoints) {
    const auto key = std::make_tuple(to_string(ckpt.id.disorder), ckpt.id.reward,
                                     ckpt.hashes.actionspace);
    auto it = test_sets.find(key);
    if (it == test_sets.end()) {
      it = test_sets
               .emplace(key, checkpoint_transitions(
                                 ckpt, filter_disorder(test, ckpt.id.disorder), inv))
               .first;
    }
    const auto agent = restore_agent(ckpt);
    entries.push_back({ckpt.id, turn_level_accuracy(*agent, it->second, ckpt.space).accuracy});
  }
  return assemble_grid(entries);
}

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string grid_to_csv(const AccuracyGrid& grid) {
  std::string out = "policy";
  for (const auto& c : grid.columns) out += "," + c;
  out += "\n";
  for (std::size_t r = 0; r < grid.rows.size(); ++r) {
    out += grid.rows[r];
    for (double v : grid.cells[r]) out += "," + fixed4(v);
    out += "\n";
  }
  return out;
}

std::string grid_to_markdown(const AccuracyGrid& grid) {
  std::string out = "| Policy |";
  for (const auto& c : grid.columns) out += " " + c + " |";
  out += "\n|---|";
  for (std::size_t c = 0; c < grid.columns.size(); ++c) out += "---|";
  out += "\n";
  for (std::size_t r = 0; r < grid.rows.size(); ++r) {
    out += "| " + grid.rows[r] + " |";
    for (std::size_t c = 0; c < grid.columns.size(); ++c) {
      const std::string v = fixed4(grid.cells[r][c]);
      out += grid.winners[r][c] ? " **" + v + "** |" : " " + v + " |";
    }
    out += "\n";
  }
  return out;
}

}  // namespace dismop
