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

#include "dismop/embedding.hpp"

#include <cmath>

#include "dismop/error.hpp"
#include "dismop/io.hpp"
#include "json.hpp"

namespace dismop {

void validate(const EmbedderConfig& cfg) {
  if (cfg.dim < 2) fail(ErrorCode::kInvalidConfig, "embedder dim must be >= 2");
  if (cfg.ngram_max < 1) fail(ErrorCode::kInvalidConfig, "embedder ngram_max must be >= 1");
}

std::string canonical_json(const EmbedderConfig& cfg) {
  nlohmann::json j;
  j["dim"] = cfg.dim;
  j["seed"] = cfg.seed;
  j["ngram_max"] = cfg.ngram_max;
  return j.dump();
}

std::string config_hash(const EmbedderConfig& cfg) {
  return content_hash(canonical_json(cfg));
}

EmbedderConfig parse_embedder_config(std::string_view json_text) {
  EmbedderConfig cfg;
  try {
    auto j = nlohmann::json::parse(json_text);
    cfg.dim = j.value("dim", cfg.dim);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.ngram_max = j.value("ngram_max", cfg.ngram_max);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidConfig, std::string("embedder config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool ascii_alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                             (c >= 'A' && c <= 'Z');
    if (ascii_alnum || c >= 0x80) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vec embed_text(const EmbedderConfig& cfg, std::string_view text) {
  validate(cfg);
  const auto tokens = tokenize(text);
  if (tokens.empty()) fail(ErrorCode::kEmptyText, "text has no tokens");

  std::string seed_bytes(8, '\0');
  for (int i = 0; i < 8; ++i) {
    seed_bytes[i] = static_cast<char>((cfg.seed >> (8 * i)) & 0xff);
  }
  const std::uint64_t seeded = fnv1a64(seed_bytes);

  Vec v(cfg.dim, 0.0);
  for (std::size_t start = 0; start < tokens.size(); ++start) {
    std::string gram;
    for (std::size_t n = 1; n <= cfg.ngram_max && start + n <= tokens.size(); ++n) {
      if (n > 1) gram += ' ';
      gram += tokens[start + n - 1];
      const std::uint64_t h = fnv1a64(gram, seeded);
      const double sign = (h >> 63) == 0 ? 1.0 : -1.0;
      v[h % cfg.dim] += sign;
    }
  }

  const double norm = l2_norm(v);
  if (norm == 0.0) fail(ErrorCode::kZeroNorm, "hashed features cancel to the zero vector");
  for (double& x : v) x /= norm;
  return v;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    fail(ErrorCode::kDimMismatch, "cosine of vectors with dims " +
                                      std::to_string(u.size()) + " and " +
                                      std::to_string(v.size()));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) fail(ErrorCode::kZeroNorm, "cosine of a zero vector");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

}  // namespace dismop
