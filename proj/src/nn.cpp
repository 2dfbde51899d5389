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

#include "dismop/nn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "dismop/error.hpp"
#include "dismop/rng.hpp"

namespace dismop {

namespace {

std::uint64_t next_stamp() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

void apply_activation(Activation a, Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::kReLU: z = z.cwiseMax(0.0); break;
    case Activation::kTanh: z = z.array().tanh().matrix(); break;
    case Activation::kIdentity: break;
  }
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kReLU: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  return "identity";
}

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::kReLU;
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity") return Activation::kIdentity;
  fail(ErrorCode::kInvalidArgument, "unknown activation '" + std::string(s) + "'");
}

void Gradients::add(const Gradients& other) {
  for (std::size_t l = 0; l < weight.size(); ++l) {
    weight[l] += other.weight[l];
    bias[l] += other.bias[l];
  }
}

void Gradients::scale(double factor) {
  for (std::size_t l = 0; l < weight.size(); ++l) {
    weight[l] *= factor;
    bias[l] *= factor;
  }
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (std::size_t l = 0; l < weight.size(); ++l) {
    if (weight[l].size()) m = std::max(m, weight[l].cwiseAbs().maxCoeff());
    if (bias[l].size()) m = std::max(m, bias[l].cwiseAbs().maxCoeff());
  }
  return m;
}

Mlp::Mlp(std::vector<std::size_t> layer_sizes, std::vector<Activation> activations,
         std::uint64_t init_seed) {
  if (layer_sizes.size() < 2 || activations.size() != layer_sizes.size() - 1) {
    fail(ErrorCode::kInvalidArgument, "need n+1 layer sizes for n activations");
  }
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::size_t fan_in = layer_sizes[l];
    const std::size_t fan_out = layer_sizes[l + 1];
    if (fan_in == 0 || fan_out == 0) fail(ErrorCode::kInvalidArgument, "zero-width layer");
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Rng rng(derive_seed(init_seed, l));
    Layer layer;
    layer.weight.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
      }
    }
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fan_out));
    layer.activation = activations[l];
    layers_.push_back(std::move(layer));
  }
  validate();
  stamp_ = next_stamp();
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
  validate();
  stamp_ = next_stamp();
}

void Mlp::validate() const {
  if (layers_.empty()) fail(ErrorCode::kInvalidArgument, "network has no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.bias.size() != layer.weight.rows()) {
      fail(ErrorCode::kShapeMismatch, "bias length differs from layer width");
    }
    if (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows()) {
      fail(ErrorCode::kShapeMismatch, "layer " + std::to_string(l) + " input width mismatch");
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      fail(ErrorCode::kNonFiniteInput, "non-finite network parameters");
    }
  }
  if (layers_.back().activation == Activation::kReLU) {
    fail(ErrorCode::kInvalidArgument, "output activation must be identity or tanh");
  }
}

std::size_t Mlp::input_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols());
}

std::size_t Mlp::output_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.rows());
}

std::vector<std::size_t> Mlp::layer_sizes() const {
  std::vector<std::size_t> sizes;
  if (layers_.empty()) return sizes;
  sizes.push_back(input_dim());
  for (const auto& l : layers_) sizes.push_back(static_cast<std::size_t>(l.weight.rows()));
  return sizes;
}

std::vector<Activation> Mlp::activations() const {
  std::vector<Activation> acts;
  for (const auto& l : layers_) acts.push_back(l.activation);
  return acts;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<Layer>& Mlp::mutable_layers() {
  stamp_ = next_stamp();
  return layers_;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, ForwardCache* cache) const {
  if (static_cast<std::size_t>(x.cols()) != input_dim()) {
    fail(ErrorCode::kDimMismatch, "network expects input width " + std::to_string(input_dim()) +
                                      ", got " + std::to_string(x.cols()));
  }
  if (!x.allFinite()) fail(ErrorCode::kNonFiniteInput, "non-finite network input");
  if (cache) {
    cache->stamp = stamp_;
    cache->input = x;
    cache->pre.clear();
    cache->post.clear();
  }
  Eigen::MatrixXd h = x;
  for (const auto& layer : layers_) {
    Eigen::MatrixXd z = h * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (cache) cache->pre.push_back(z);
    apply_activation(layer.activation, z);
    if (cache) cache->post.push_back(z);
    h = std::move(z);
  }
  return h;
}

bool Mlp::same_architecture(const Mlp& other) const {
  return layer_sizes() == other.layer_sizes() && activations() == other.activations();
}

Gradients Mlp::zero_gradients() const {
  Gradients g;
  for (const auto& l : layers_) {
    g.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

BackwardResult backward(const Mlp& net, const ForwardCache& cache,
                        const Eigen::MatrixXd& upstream) {
  const auto& layers = net.layers();
  if (cache.stamp != net.stamp() || cache.pre.size() != layers.size()) {
    fail(ErrorCode::kStaleCache, "forward cache does not belong to the current parameters");
  }
  if (upstream.rows() != cache.input.rows() ||
      static_cast<std::size_t>(upstream.cols()) != net.output_dim()) {
    fail(ErrorCode::kDimMismatch, "upstream gradient shape does not match the output");
  }
  BackwardResult result;
  result.grads.weight.resize(layers.size());
  result.grads.bias.resize(layers.size());

  Eigen::MatrixXd delta = upstream;  // dL/d(post) of the current layer
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    switch (layer.activation) {
      case Activation::kReLU:
        delta = delta.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
        break;
      case Activation::kTanh:
        delta = delta.cwiseProduct(
            (1.0 - cache.post[l].array().square()).matrix());
        break;
      case Activation::kIdentity: break;
    }
    const Eigen::MatrixXd& input = l == 0 ? cache.input : cache.post[l - 1];
    result.grads.weight[l] = delta.transpose() * input;
    result.grads.bias[l] = delta.colwise().sum().transpose();
    delta = delta * layer.weight;
  }
  result.input_grad = std::move(delta);
  return result;
}

AdamState make_adam(const Mlp& net, double lr) {
  AdamState s;
  s.m = net.zero_gradients();
  s.v = net.zero_gradients();
  s.lr = lr;
  return s;
}

namespace {

bool congruent(const Gradients& g, const Mlp& net) {
  const auto& layers = net.layers();
  if (g.weight.size() != layers.size() || g.bias.size() != layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (g.weight[l].rows() != layers[l].weight.rows() ||
        g.weight[l].cols() != layers[l].weight.cols() ||
        g.bias[l].size() != layers[l].bias.size()) {
      return false;
    }
  }
  return true;
}

}  // namespace

void adam_step(AdamState& state, Mlp& net, const Gradients& grads) {
  if (!congruent(grads, net) || !congruent(state.m, net) || !congruent(state.v, net)) {
    fail(ErrorCode::kShapeMismatch, "Adam moments or gradients do not match the network");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  auto& layers = net.mutable_layers();
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    param.array() -= state.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.eps);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, state.m.weight[l], state.v.weight[l], grads.weight[l]);
    update(layers[l].bias, state.m.bias[l], state.v.bias[l], grads.bias[l]);
  }
}

void polyak_update(Mlp& target, const Mlp& online, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) fail(ErrorCode::kInvalidArgument, "tau must lie in (0, 1]");
  if (!target.same_architecture(online)) {
    fail(ErrorCode::kArchitectureMismatch, "target and online networks differ in shape");
  }
  auto& dst = target.mutable_layers();
  const auto& src = online.layers();
  for (std::size_t l = 0; l < dst.size(); ++l) {
    if (tau == 1.0) {
      dst[l].weight = src[l].weight;
      dst[l].bias = src[l].bias;
    } else {
      dst[l].weight = tau * src[l].weight + (1.0 - tau) * dst[l].weight;
      dst[l].bias = tau * src[l].bias + (1.0 - tau) * dst[l].bias;
    }
  }
}

namespace {

struct ParamSlot {
  std::size_t layer;
  bool is_bias;
  Eigen::Index row;
  Eigen::Index col;
};

double& slot_ref(std::vector<Layer>& layers, const ParamSlot& s) {
  return s.is_bias ? layers[s.layer].bias(s.row) : layers[s.layer].weight(s.row, s.col);
}

double slot_value(const Gradients& g, const ParamSlot& s) {
  return s.is_bias ? g.bias[s.layer](s.row) : g.weight[s.layer](s.row, s.col);
}

}  // namespace

GradCheckReport gradient_check(const Mlp& net, const std::function<double(const Mlp&)>& loss,
                               const Gradients& analytic, double tolerance, double h,
                               std::size_t max_params, std::uint64_t seed) {
  if (!congruent(analytic, net)) {
    fail(ErrorCode::kShapeMismatch, "analytic gradients do not match the network");
  }
  std::vector<ParamSlot> slots;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto& layer = net.layers()[l];
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) slots.push_back({l, false, r, c});
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) slots.push_back({l, true, r, 0});
  }
  if (slots.size() > max_params) {
    Rng rng(seed);
    for (std::size_t i = 0; i < max_params; ++i) {
      std::swap(slots[i], slots[i + rng.uniform_index(slots.size() - i)]);
    }
    slots.resize(max_params);
  }

  GradCheckReport report;
  Mlp probe = net;
  for (const auto& s : slots) {
    double& p = slot_ref(probe.mutable_layers(), s);
    const double original = p;
    p = original + h;
    const double up = loss(probe);
    slot_ref(probe.mutable_layers(), s) = original - h;
    const double down = loss(probe);
    slot_ref(probe.mutable_layers(), s) = original;
    const double numeric = (up - down) / (2.0 * h);
    const double a = slot_value(analytic, s);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    report.max_rel_error = std::max(report.max_rel_error, std::abs(a - numeric) / denom);
    ++report.checked;
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

OutputLoss mse_loss(Eigen::MatrixXd targets) {
  OutputLoss loss;
  loss.value = [targets](const Eigen::MatrixXd& y) {
    return (y - targets).squaredNorm() / static_cast<double>(y.size());
  };
  loss.grad = [targets](const Eigen::MatrixXd& y) {
    return Eigen::MatrixXd(2.0 * (y - targets) / static_cast<double>(y.size()));
  };
  return loss;
}

GradCheckReport gradient_check(const Mlp& net, const Eigen::MatrixXd& x, const OutputLoss& loss,
                               double tolerance) {
  ForwardCache cache;
  const Eigen::MatrixXd y = net.forward(x, &cache);
  const auto grads = backward(net, cache, loss.grad(y)).grads;
  return gradient_check(
      net, [&](const Mlp& m) { return loss.value(m.predict(x)); }, grads, tolerance);
}

}  // namespace dismop
