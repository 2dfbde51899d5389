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

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace dismop {

enum class Activation { kReLU, kTanh, kIdentity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view s);

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::kIdentity;
};

struct ForwardCache {
  std::uint64_t stamp = 0;            // parameter stamp of the net at forward time
  Eigen::MatrixXd input;              // B x in
  std::vector<Eigen::MatrixXd> pre;   // per layer, B x out, before activation
  std::vector<Eigen::MatrixXd> post;  // per layer, B x out, after activation
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  void add(const Gradients& other);
  void scale(double factor);
  double max_abs() const;
};

// Dense feed-forward network; rows of a batch are samples. Every parameter
// mutation goes through mutable_layers(), which refreshes the parameter stamp
// so caches from an earlier forward pass are detected as stale.
class Mlp {
 public:
  Mlp() = default;
  // Glorot-uniform weights from a per-layer seeded stream, zero biases. The
  // last activation must be kIdentity or kTanh.
  Mlp(std::vector<std::size_t> layer_sizes, std::vector<Activation> activations,
      std::uint64_t init_seed);
  explicit Mlp(std::vector<Layer> layers);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::vector<std::size_t> layer_sizes() const;
  std::vector<Activation> activations() const;
  std::size_t parameter_count() const;

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers();
  std::uint64_t stamp() const { return stamp_; }

  // Output plus everything backward() needs. Throws kDimMismatch and
  // kNonFiniteInput.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, ForwardCache* cache) const;
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const { return forward(x, nullptr); }

  bool same_architecture(const Mlp& other) const;
  Gradients zero_gradients() const;

 private:
  void validate() const;

  std::vector<Layer> layers_;
  std::uint64_t stamp_ = 0;
};

struct BackwardResult {
  Gradients grads;
  Eigen::MatrixXd input_grad;  // dL/dx, B x in
};

// Reverse-mode pass for dL/d(output) = `upstream`. Throws kStaleCache when the
// net changed after the forward pass that filled `cache`.
BackwardResult backward(const Mlp& net, const ForwardCache& cache,
                        const Eigen::MatrixXd& upstream);

struct AdamState {
  std::size_t step = 0;
  Gradients m;
  Gradients v;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(const Mlp& net, double lr);

// Bias-corrected Adam. Throws kShapeMismatch when grads or moments do not
// match the parameters.
void adam_step(AdamState& state, Mlp& net, const Gradients& grads);

// target <- tau * online + (1 - tau) * target, tau in (0, 1].
void polyak_update(Mlp& target, const Mlp& online, double tau);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};

// Central differences on up to `max_params` parameters (all of them when the
// net is that small, otherwise a seeded sample). The relative error of one
// parameter is |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport gradient_check(const Mlp& net, const std::function<double(const Mlp&)>& loss,
                               const Gradients& analytic, double tolerance = 1e-4,
                               double h = 1e-5, std::size_t max_params = 200,
                               std::uint64_t seed = 0);

// Convenience form for a loss on the network output over input batch `x`;
// analytic gradients come from backward().
struct OutputLoss {
  std::function<double(const Eigen::MatrixXd&)> value;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> grad;
};
OutputLoss mse_loss(Eigen::MatrixXd targets);
GradCheckReport gradient_check(const Mlp& net, const Eigen::MatrixXd& x, const OutputLoss& loss,
                               double tolerance = 1e-4);

}  // namespace dismop
