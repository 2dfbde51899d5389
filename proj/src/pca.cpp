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

#include "dismop/pca.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "dismop/error.hpp"

namespace dismop {

Vec PcaModel::project(std::span<const double> x, std::size_t k) const {
  if (x.size() != mean.size()) {
    fail(ErrorCode::kDimMismatch, "PCA input dim " + std::to_string(x.size()) +
                                      " vs model dim " + std::to_string(mean.size()));
  }
  if (k > components.size()) {
    fail(ErrorCode::kInsufficientComponents,
         "asked for " + std::to_string(k) + " of " +
             std::to_string(components.size()) + " components");
  }
  Vec out(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += components[c][i] * (x[i] - mean[i]);
    out[c] = s;
  }
  return out;
}

namespace {

constexpr int kMaxIterations = 1000;
constexpr double kRayleighTolerance = 1e-12;

void orthogonalize(Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& basis) {
  for (const auto& b : basis) v -= b.dot(v) * b;
}

}  // namespace

PcaModel fit_pca(const std::vector<Vec>& data, std::size_t k) {
  const std::size_t n = data.size();
  if (n < 2) fail(ErrorCode::kDegenerateData, "PCA needs at least two rows");
  const std::size_t d = data.front().size();
  for (const auto& row : data) {
    if (row.size() != d) fail(ErrorCode::kDimMismatch, "ragged PCA input");
  }
  if (k == 0 || k > std::min(n, d)) {
    fail(ErrorCode::kDegenerateData, "k must lie in [1, min(n, d)]");
  }

  PcaModel model;
  model.mean.assign(d, 0.0);
  for (const auto& row : data) {
    for (std::size_t i = 0; i < d; ++i) model.mean[i] += row[i];
  }
  for (double& m : model.mean) m /= static_cast<double>(n);

  Eigen::MatrixXd centered(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < d; ++i) centered(r, i) = data[r][i] - model.mean[i];
  }
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  const double scale = std::max(cov.trace(), 1e-300);

  std::vector<Eigen::VectorXd> found;
  for (std::size_t c = 0; c < k; ++c) {
    // Start from the ones vector; fall back to axis vectors if it lies in the
    // span of what has already been found.
    Eigen::VectorXd v = Eigen::VectorXd::Ones(d);
    orthogonalize(v, found);
    for (std::size_t axis = 0; v.norm() < 1e-8 && axis < d; ++axis) {
      v = Eigen::VectorXd::Unit(d, axis);
      orthogonalize(v, found);
    }
    v.normalize();

    double lambda = v.dot(cov * v);
    for (int it = 0; it < kMaxIterations; ++it) {
      Eigen::VectorXd w = cov * v;
      orthogonalize(w, found);
      const double norm = w.norm();
      if (norm <= 1e-300) break;
      v = w / norm;
      const double next = v.dot(cov * v);
      const bool converged = std::abs(next - lambda) < kRayleighTolerance;
      lambda = next;
      if (converged) break;
    }

    if (lambda <= 1e-12 * scale) {
      model.degenerate = true;
      break;
    }
    Eigen::Index argmax = 0;
    v.cwiseAbs().maxCoeff(&argmax);
    if (v(argmax) < 0) v = -v;

    found.push_back(v);
    model.components.emplace_back(v.data(), v.data() + d);
    model.explained_variance.push_back(lambda);
    cov -= lambda * v * v.transpose();
  }
  return model;
}

}  // namespace dismop
