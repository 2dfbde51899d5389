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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dismop/types.hpp"

namespace dismop {

struct EmbedderConfig {
  std::size_t dim = 64;
  std::uint64_t seed = 0;
  std::size_t ngram_max = 1;

  bool operator==(const EmbedderConfig&) const = default;
};

// Throws Error(kInvalidConfig) when dim < 2 or ngram_max < 1.
void validate(const EmbedderConfig& cfg);

// {"dim":..,"ngram_max":..,"seed":..}, sorted keys, used for provenance.
std::string canonical_json(const EmbedderConfig& cfg);
std::string config_hash(const EmbedderConfig& cfg);
EmbedderConfig parse_embedder_config(std::string_view json_text);

// Lowercases ASCII and splits on every byte that is not an ASCII letter or
// digit. Bytes >= 0x80 count as word characters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

// Signed feature hashing. Each n-gram (tokens joined by one space) is hashed
// with FNV-1a-64 over the 8 little-endian seed bytes followed by the n-gram
// bytes; bit 63 picks the sign, h mod dim the bucket. The result is
// L2-normalized. Throws kEmptyText when the text has no tokens and kZeroNorm
// when every bucket cancels out.
Vec embed_text(const EmbedderConfig& cfg, std::string_view text);

// Sequential dot product and norms, no reassociation, so results are bit
// reproducible. Throws kDimMismatch or kZeroNorm.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

double l2_norm(std::span<const double> v);

}  // namespace dismop
