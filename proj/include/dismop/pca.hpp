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

#include <span>
#include <vector>

#include "dismop/types.hpp"

namespace dismop {

struct PcaModel {
  Vec mean;
  std::vector<Vec> components;  // k rows of length d, orthonormal
  Vec explained_variance;       // non-increasing
  // Set when the data had rank < requested k; fewer components are returned.
  bool degenerate = false;

  std::size_t input_dim() const { return mean.size(); }
  std::size_t n_components() const { return components.size(); }

  // First `k` coordinates of (x - mean) in the component basis.
  Vec project(std::span<const double> x, std::size_t k) const;
  Vec project(std::span<const double> x) const { return project(x, n_components()); }
};

// Covariance eigendecomposition by power iteration with deflation. Each
// eigenvector starts from the normalized all-ones vector, runs until the
// Rayleigh quotient moves by < 1e-12 or 1000 iterations, and is flipped so its
// largest-magnitude entry is positive. Requires n >= 2 and k <= min(n, d);
// throws kDegenerateData otherwise. Rank deficiency sets `degenerate` and
// truncates instead of throwing.
PcaModel fit_pca(const std::vector<Vec>& data, std::size_t k);

}  // namespace dismop
