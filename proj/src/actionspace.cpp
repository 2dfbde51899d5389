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

#include "dismop/actionspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "dismop/error.hpp"
#include "dismop/io.hpp"
#include "json.hpp"

namespace dismop {

using nlohmann::json;

TopicCatalog::TopicCatalog(std::vector<Topic> topics) : topics_(std::move(topics)) {
  if (topics_.size() < 2) fail(ErrorCode::kInvalidConfig, "catalog needs at least two topics");
  std::set<TopicId> ids;
  for (const auto& t : topics_) {
    if (!ids.insert(t.id).second) {
      fail(ErrorCode::kInvalidConfig, "duplicate topic id " + std::to_string(t.id));
    }
  }
}

TopicCatalog TopicCatalog::default_catalog() {
  return TopicCatalog({{0, "figuring out/self-discovery/reminiscence"},
                       {1, "play"},
                       {2, "anger/scare/sadness"},
                       {3, "counts"},
                       {6, "dealing with stress"},
                       {7, "numbers"},
                       {8, "continuation"}});
}

bool TopicCatalog::contains(TopicId id) const {
  return std::any_of(topics_.begin(), topics_.end(),
                     [id](const Topic& t) { return t.id == id; });
}

std::size_t TopicCatalog::index_of(TopicId id) const {
  for (std::size_t i = 0; i < topics_.size(); ++i) {
    if (topics_[i].id == id) return i;
  }
  fail(ErrorCode::kUnknownTopic, "topic " + std::to_string(id) + " is not in the catalog");
}

const std::string& TopicCatalog::label(TopicId id) const {
  return topics_[index_of(id)].label;
}

TopicCatalog parse_catalog(std::string_view json_text) {
  std::vector<Topic> topics;
  try {
    auto j = json::parse(json_text);
    if (j.value("schema", std::string()) != kCatalogSchema) {
      fail(ErrorCode::kSchemaVersionMismatch,
           "catalog schema must be '" + std::string(kCatalogSchema) + "'");
    }
    for (const auto& tj : j.at("topics")) {
      topics.push_back({tj.at("id").get<TopicId>(), tj.at("label").get<std::string>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("catalog: ") + e.what());
  }
  return TopicCatalog(std::move(topics));
}

TopicCatalog load_catalog(const std::filesystem::path& path) {
  return parse_catalog(read_file(path));
}

namespace {

json catalog_json(const TopicCatalog& catalog) {
  json topics = json::array();
  for (const auto& t : catalog.topics()) topics.push_back({{"id", t.id}, {"label", t.label}});
  return topics;
}

}  // namespace

std::string catalog_to_json(const TopicCatalog& catalog) {
  return json{{"schema", kCatalogSchema}, {"topics", catalog_json(catalog)}}.dump();
}

std::string_view to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::kDoc: return "doc";
    case SpaceKind::kPca: return "pca";
    case SpaceKind::kPca2: return "pca2";
  }
  return "doc";
}

SpaceKind parse_space_kind(std::string_view s) {
  if (s == "doc") return SpaceKind::kDoc;
  if (s == "pca") return SpaceKind::kPca;
  if (s == "pca2") return SpaceKind::kPca2;
  fail(ErrorCode::kInvalidArgument, "unknown action space kind '" + std::string(s) + "'");
}

Vec Bounds::midpoint() const {
  Vec m(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) m[i] = 0.5 * (lo[i] + hi[i]);
  return m;
}

Vec Bounds::half_width() const {
  Vec h(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) h[i] = 0.5 * (hi[i] - lo[i]);
  return h;
}

bool Bounds::contains(std::span<const double> a, double slack) const {
  if (a.size() != lo.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] >= lo[i] - slack && a[i] <= hi[i] + slack)) return false;
  }
  return true;
}

Vec Bounds::clamp(std::span<const double> a) const {
  if (a.size() != lo.size()) fail(ErrorCode::kDimMismatch, "clamp dim mismatch");
  Vec out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], lo[i], hi[i]);
  return out;
}

Bounds bounds_around(const std::vector<Vec>& rows) {
  const std::size_t d = rows.front().size();
  Bounds b{Vec(d, std::numeric_limits<double>::infinity()),
           Vec(d, -std::numeric_limits<double>::infinity())};
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < d; ++i) {
      b.lo[i] = std::min(b.lo[i], row[i]);
      b.hi[i] = std::max(b.hi[i], row[i]);
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double pad = std::max(0.1 * (b.hi[i] - b.lo[i]), 1e-6);
    b.lo[i] -= pad;
    b.hi[i] += pad;
  }
  return b;
}

Vec Projection::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) {
    fail(ErrorCode::kDimMismatch, "projection input dim " + std::to_string(x.size()) +
                                      " vs " + std::to_string(mean.size()));
  }
  Vec out(components.size(), 0.0);
  for (std::size_t c = 0; c < components.size(); ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += components[c][i] * (x[i] - mean[i]);
    out[c] = s;
  }
  return out;
}

Vec ActionSpace::project(std::span<const double> embedding) const {
  if (projection) return projection->apply(embedding);
  if (embedding.size() != dim()) {
    fail(ErrorCode::kDimMismatch, "embedding dim " + std::to_string(embedding.size()) +
                                      " vs action space dim " + std::to_string(dim()));
  }
  return Vec(embedding.begin(), embedding.end());
}

std::string ActionSpace::hash() const { return content_hash(action_space_to_json(*this)); }

std::string action_space_to_json(const ActionSpace& space) {
  json j;
  j["catalog"] = catalog_json(space.catalog);
  j["kind"] = to_string(space.kind);
  j["centroids"] = space.centroids;
  j["bounds"] = {{"lo", space.bounds.lo}, {"hi", space.bounds.hi}};
  if (space.projection) {
    j["projection"] = {{"mean", space.projection->mean},
                       {"components", space.projection->components}};
  } else {
    j["projection"] = nullptr;
  }
  return j.dump();
}

ActionSpace action_space_from_json(std::string_view json_text) {
  ActionSpace space;
  try {
    auto j = json::parse(json_text);
    std::vector<Topic> topics;
    for (const auto& tj : j.at("catalog")) {
      topics.push_back({tj.at("id").get<TopicId>(), tj.at("label").get<std::string>()});
    }
    space.catalog = TopicCatalog(std::move(topics));
    space.kind = parse_space_kind(j.at("kind").get<std::string>());
    space.centroids = j.at("centroids").get<std::vector<Vec>>();
    space.bounds.lo = j.at("bounds").at("lo").get<Vec>();
    space.bounds.hi = j.at("bounds").at("hi").get<Vec>();
    if (!j.at("projection").is_null()) {
      space.projection = Projection{j["projection"].at("mean").get<Vec>(),
                                    j["projection"].at("components").get<std::vector<Vec>>()};
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("action space: ") + e.what());
  }
  if (space.centroids.size() != space.catalog.size()) {
    fail(ErrorCode::kParseError, "action space: one centroid per topic required");
  }
  for (const auto& c : space.centroids) {
    if (c.size() != space.dim() || c.size() != space.bounds.lo.size() ||
        c.size() != space.bounds.hi.size()) {
      fail(ErrorCode::kParseError, "action space: inconsistent dimensions");
    }
  }
  return space;
}

namespace {

void require_nonzero_centroids(const ActionSpace& space) {
  for (std::size_t k = 0; k < space.centroids.size(); ++k) {
    if (l2_norm(space.centroids[k]) == 0.0) {
      fail(ErrorCode::kDegenerateData,
           "centroid of topic " + std::to_string(space.catalog.topics()[k].id) +
               " is the zero vector");
    }
  }
}

}  // namespace

ActionSpace build_action_space(const Corpus& corpus, const EmbedderConfig& cfg,
                               const TopicCatalog& catalog) {
  validate(cfg);
  const std::size_t k = catalog.size();
  std::vector<Vec> sums(k, Vec(cfg.dim, 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (const auto& session : corpus.sessions) {
    for (const auto& turn : session.turns) {
      if (!turn.topic) continue;
      const std::size_t idx = catalog.index_of(*turn.topic);
      const Vec e = embed_text(cfg, turn.text);
      for (std::size_t i = 0; i < cfg.dim; ++i) sums[idx][i] += e[i];
      ++counts[idx];
    }
  }
  std::string missing;
  for (std::size_t t = 0; t < k; ++t) {
    if (counts[t] == 0) {
      if (!missing.empty()) missing += ",";
      missing += std::to_string(catalog.topics()[t].id);
    }
  }
  if (!missing.empty()) {
    fail(ErrorCode::kTopicWithoutSupport, "no labeled turns for topics [" + missing + "]");
  }

  ActionSpace space;
  space.catalog = catalog;
  space.kind = SpaceKind::kDoc;
  for (std::size_t t = 0; t < k; ++t) {
    for (double& x : sums[t]) x /= static_cast<double>(counts[t]);
  }
  space.centroids = std::move(sums);
  space.bounds = bounds_around(space.centroids);
  require_nonzero_centroids(space);
  return space;
}

std::size_t target_dim(SpaceKind kind, std::size_t doc_dim) {
  switch (kind) {
    case SpaceKind::kDoc: return doc_dim;
    case SpaceKind::kPca: return 36;
    case SpaceKind::kPca2: return 2;
  }
  return doc_dim;
}

ActionSpace reduce_action_space(const ActionSpace& space, SpaceKind target,
                                const PcaModel& pca) {
  if (space.kind != SpaceKind::kDoc) {
    fail(ErrorCode::kInvalidArgument, "only embedding-space action spaces can be reduced");
  }
  if (target == SpaceKind::kDoc) {
    fail(ErrorCode::kInvalidArgument, "reduction target must be pca or pca2");
  }
  if (pca.input_dim() != space.dim()) {
    fail(ErrorCode::kDimMismatch, "PCA fitted on dim " + std::to_string(pca.input_dim()) +
                                      ", action space has dim " + std::to_string(space.dim()));
  }
  const std::size_t k = target_dim(target, space.dim());
  if (k > pca.n_components()) {
    fail(ErrorCode::kInsufficientComponents,
         "target needs " + std::to_string(k) + " components, PCA has " +
             std::to_string(pca.n_components()));
  }
  ActionSpace out;
  out.catalog = space.catalog;
  out.kind = target;
  out.projection =
      Projection{pca.mean, std::vector<Vec>(pca.components.begin(), pca.components.begin() + k)};
  for (const auto& c : space.centroids) out.centroids.push_back(out.projection->apply(c));
  out.bounds = bounds_around(out.centroids);
  require_nonzero_centroids(out);
  return out;
}

Decoded decode_action(const ActionSpace& space, std::span<const double> a) {
  if (a.size() != space.dim()) {
    fail(ErrorCode::kDimMismatch, "action dim " + std::to_string(a.size()) +
                                      " vs action space dim " + std::to_string(space.dim()));
  }
  for (double x : a) {
    if (!std::isfinite(x)) fail(ErrorCode::kNonFiniteInput, "action has non-finite entries");
  }
  if (l2_norm(a) == 0.0) fail(ErrorCode::kZeroNorm, "cannot decode the zero action");

  const auto& topics = space.catalog.topics();
  double best = -std::numeric_limits<double>::infinity();
  double second = -std::numeric_limits<double>::infinity();
  TopicId best_id = topics.front().id;
  for (std::size_t t = 0; t < topics.size(); ++t) {
    const double s = cosine_similarity(a, space.centroids[t]);
    if (s > best || (s == best && topics[t].id < best_id)) {
      second = best;
      best = s;
      best_id = topics[t].id;
    } else if (s > second) {
      second = s;
    }
  }
  return {best_id, best - second};
}

const Vec& encode_topic(const ActionSpace& space, TopicId topic) {
  return space.centroids[space.catalog.index_of(topic)];
}

}  // namespace dismop
