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
#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dismop/actionspace.hpp"
#include "dismop/dataset.hpp"
#include "dismop/nn.hpp"
#include "dismop/policy.hpp"
#include "dismop/rng.hpp"

namespace dismop {

enum class AgentKind { kDdpg, kTd3, kBcq };

inline constexpr std::array<AgentKind, 3> kAllAgentKinds = {AgentKind::kDdpg, AgentKind::kTd3,
                                                            AgentKind::kBcq};

std::string_view to_string(AgentKind kind);
AgentKind parse_agent_kind(std::string_view s);

struct Td3Hyper {
  std::size_t policy_delay = 2;
  double target_noise = 0.2;  // times the per-dimension half-width
  double noise_clip = 0.5;    // times the per-dimension half-width
};

struct BcqHyper {
  std::size_t latent_dim = 8;
  std::size_t n_action_samples = 10;
  double phi = 0.05;
  double lambda_min = 0.75;
  double vae_lr = 1e-3;
};

struct AgentHyper {
  double gamma = 0.95;
  double tau = 0.005;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  std::vector<std::size_t> hidden = {64, 64};
  // Supervised warm start of the DDPG/TD3 actor on the logged actions before
  // the off-policy phase; 0 disables it.
  std::size_t pretrain_epochs = 0;
  double pretrain_lr = 1e-3;
  Td3Hyper td3;
  BcqHyper bcq;
};

// Throws kInvalidConfig for out-of-range values.
void validate(const AgentHyper& hyper);
std::string hyper_to_json(const AgentHyper& hyper);
AgentHyper hyper_from_json(std::string_view json_text);
// Overrides the fields present in `json_text`, keeping the rest.
AgentHyper merge_hyper(AgentHyper base, std::string_view json_text);

// Maps tanh outputs in [-1, 1]^d onto the action box and back.
struct ActionScaler {
  Eigen::RowVectorXd lo, hi, mid, half;

  explicit ActionScaler(const Bounds& bounds);
  ActionScaler() = default;
  std::size_t dim() const { return static_cast<std::size_t>(mid.size()); }
  Eigen::MatrixXd to_action(const Eigen::MatrixXd& unit) const;
  Eigen::MatrixXd to_unit(const Eigen::MatrixXd& action) const;
  Eigen::MatrixXd clamp(const Eigen::MatrixXd& action) const;
};

Eigen::MatrixXd hconcat(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
Eigen::MatrixXd row_matrix(std::span<const double> v);

// --- Losses shared by the update rules and the gradient checks -------------

// mean((Q(sa) - y)^2)
double critic_regression_loss(const Mlp& critic, const Eigen::MatrixXd& state_actions,
                              const Eigen::VectorXd& targets, Gradients* grads);

// -mean Q(s, scale(actor(s))); gradients w.r.t. the actor only.
double actor_objective(const Mlp& actor, const Mlp& critic, const ActionScaler& scaler,
                       const Eigen::MatrixXd& states, Gradients* grads);

struct VaeLoss {
  double reconstruction = 0.0;  // MSE in the [-1, 1] action coordinates
  double kl = 0.0;              // batch mean of KL(N(mu, sigma) || N(0, I))
  double total() const { return reconstruction + kl; }
};

// Encoder sees (s, unit action) and emits (mean, log-std); log-std is clamped
// to [-4, 15]. `noise` supplies the reparameterization draws (B x latent).
VaeLoss vae_loss(const Mlp& encoder, const Mlp& decoder, const ActionScaler& scaler,
                 const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                 const Eigen::MatrixXd& noise, Gradients* encoder_grads,
                 Gradients* decoder_grads);

// KL(N(mean, exp(log_std)^2) || N(0, 1)) summed over latent dims, per row.
Eigen::VectorXd gaussian_kl(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& log_std);

// Bounded perturbation xi = phi * half * tanh(net(s, a)), applied then clamped.
Eigen::MatrixXd perturb_actions(const Mlp& perturbation, const ActionScaler& scaler, double phi,
                                const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions);

// -mean Q1(s, clamp(a + xi(s, a))); gradients w.r.t. the perturbation net.
double perturbation_objective(const Mlp& perturbation, const Mlp& critic,
                              const ActionScaler& scaler, double phi,
                              const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                              Gradients* grads);

// --- Agents ----------------------------------------------------------------

class Agent : public Policy {
 public:
  virtual AgentKind kind() const = 0;
  virtual std::vector<std::string> loss_names() const = 0;
  // One off-policy update; returns losses in loss_names() order.
  virtual std::vector<double> update(const TransitionBatch& batch) = 0;
  // Supervised actor step on logged actions; returns the MSE. DDPG/TD3 only.
  virtual double behavior_clone_step(const TransitionBatch& batch);
  // Named networks, sorted by name, as stored in checkpoints.
  virtual std::vector<std::pair<std::string, const Mlp*>> networks() const = 0;
  virtual std::vector<std::pair<std::string, Mlp*>> mutable_networks() = 0;

  const AgentHyper& hyper() const { return hyper_; }
  const ActionScaler& scaler() const { return scaler_; }
  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return scaler_.dim(); }
  // Throws kDimMismatch when the batch does not fit the networks.
  void check_batch(const TransitionBatch& batch) const;

 protected:
  Agent(std::size_t state_dim, const Bounds& bounds, const AgentHyper& hyper);

  std::size_t state_dim_;
  ActionScaler scaler_;
  AgentHyper hyper_;
};

struct DdpgLosses {
  double critic = 0.0;
  double actor = 0.0;
};

class DdpgAgent : public Agent {
 public:
  DdpgAgent(std::size_t state_dim, const Bounds& bounds, const AgentHyper& hyper,
            std::uint64_t seed);

  AgentKind kind() const override { return AgentKind::kDdpg; }
  std::vector<std::string> loss_names() const override { return {"critic", "actor"}; }
  std::vector<double> update(const TransitionBatch& batch) override;
  double behavior_clone_step(const TransitionBatch& batch) override;
  std::vector<std::pair<std::string, const Mlp*>> networks() const override;
  std::vector<std::pair<std::string, Mlp*>> mutable_networks() override;
  // clamp(mu(s), bounds)
  Vec select_action(std::span<const double> state) const override;

  Mlp actor, critic, target_actor, target_critic;
  AdamState actor_opt, critic_opt, pretrain_opt;
};

// y = r + gamma * (1 - done) * Q'(s', mu'(s'))
Eigen::VectorXd ddpg_critic_targets(const DdpgAgent& agent, const TransitionBatch& batch);
DdpgLosses ddpg_update(DdpgAgent& agent, const TransitionBatch& batch);

struct Td3Losses {
  double critic = 0.0;  // sum of both critics' MSE
  double actor = 0.0;
  bool actor_updated = false;
};

class Td3Agent : public Agent {
 public:
  Td3Agent(std::size_t state_dim, const Bounds& bounds, const AgentHyper& hyper,
           std::uint64_t seed);

  AgentKind kind() const override { return AgentKind::kTd3; }
  std::vector<std::string> loss_names() const override { return {"critic", "actor"}; }
  std::vector<double> update(const TransitionBatch& batch) override;
  double behavior_clone_step(const TransitionBatch& batch) override;
  std::vector<std::pair<std::string, const Mlp*>> networks() const override;
  std::vector<std::pair<std::string, Mlp*>> mutable_networks() override;
  Vec select_action(std::span<const double> state) const override;

  Mlp actor, critic1, critic2, target_actor, target_critic1, target_critic2;
  AdamState actor_opt, critic1_opt, critic2_opt, pretrain_opt;
  std::size_t step = 0;
  Rng noise_rng;
};

// Clipped Gaussian target-policy smoothing noise, rows x action_dim.
Eigen::MatrixXd td3_target_noise(Rng& rng, const ActionScaler& scaler, const Td3Hyper& hyper,
                                 Eigen::Index rows);
// y = r + gamma * (1 - done) * min(Q1', Q2')(s', clamp(mu'(s') + noise))
Eigen::VectorXd td3_critic_targets(const Td3Agent& agent, const TransitionBatch& batch,
                                   const Eigen::MatrixXd& noise);
// The actor and all targets move only when step % policy_delay == 0.
Td3Losses td3_update(Td3Agent& agent, const TransitionBatch& batch, std::size_t step);

struct BcqLosses {
  double vae = 0.0;
  double critic = 0.0;  // sum of both critics' MSE
  double perturbation = 0.0;
};

class BcqAgent : public Agent {
 public:
  BcqAgent(std::size_t state_dim, const Bounds& bounds, const AgentHyper& hyper,
           std::uint64_t seed);

  AgentKind kind() const override { return AgentKind::kBcq; }
  std::vector<std::string> loss_names() const override {
    return {"vae", "critic", "perturbation"};
  }
  std::vector<double> update(const TransitionBatch& batch) override;
  std::vector<std::pair<std::string, const Mlp*>> networks() const override;
  std::vector<std::pair<std::string, Mlp*>> mutable_networks() override;
  // Scores n_action_samples decoded and perturbed candidates with Q1 and
  // returns the best. The sampling stream is keyed by (select_seed, state), so
  // the result does not depend on call order.
  Vec select_action(std::span<const double> state) const override;

  // Throws kLatentDimMismatch when the VAE shapes disagree with latent_dim.
  void check_latent_dims() const;

  Mlp vae_encoder, vae_decoder, perturbation, critic1, critic2;
  Mlp target_decoder, target_perturbation, target_critic1, target_critic2;
  AdamState encoder_opt, decoder_opt, perturbation_opt, critic1_opt, critic2_opt;
  Rng rng;
  std::uint64_t select_seed = 0;
};

// Latents ~ N(0, I) clipped to [-0.5, 0.5].
Eigen::MatrixXd bcq_sample_latents(Rng& rng, Eigen::Index rows, std::size_t latent_dim);
// Decoder output mapped onto the action box.
Eigen::MatrixXd bcq_decode(const Mlp& decoder, const ActionScaler& scaler,
                           const Eigen::MatrixXd& states, const Eigen::MatrixXd& latents);
// lambda * min(q1, q2) + (1 - lambda) * max(q1, q2), elementwise.
Eigen::VectorXd soft_clipped_double_q(const Eigen::VectorXd& q1, const Eigen::VectorXd& q2,
                                      double lambda);
// For each s' decodes latents.rows() / B candidates (latents row b*n + j
// belongs to state b), perturbs with the target net, and takes the max of the
// soft-clipped double-Q value; then y = r + gamma * (1 - done) * that max.
Eigen::VectorXd bcq_critic_targets(const BcqAgent& agent, const TransitionBatch& batch,
                                   const Eigen::MatrixXd& latents);
BcqLosses bcq_update(BcqAgent& agent, const TransitionBatch& batch);

std::unique_ptr<Agent> make_agent(AgentKind kind, std::size_t state_dim, const Bounds& bounds,
                                  const AgentHyper& hyper, std::uint64_t seed);

struct TrainProgress {
  std::size_t epoch = 0;  // 1-based
  std::vector<double> mean_losses;
};

struct TrainResult {
  std::unique_ptr<Agent> agent;
  // One row per epoch: [epoch, mean loss 1, mean loss 2, ...].
  std::vector<Vec> losses;
};

// pretrain_epochs of behavior cloning (DDPG/TD3), then epochs x ceil(N / B)
// off-policy updates over seeded shuffles. Throws kEmptyDataset and
// kNonFiniteLoss (with epoch and batch in the message).
TrainResult train_agent(AgentKind kind, const std::vector<Transition>& transitions,
                        const AgentHyper& hyper, std::uint64_t seed, const Bounds& bounds,
                        const std::function<void(const TrainProgress&)>& on_epoch = {});

}  // namespace dismop
