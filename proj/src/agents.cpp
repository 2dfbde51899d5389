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

#include "dismop/agents.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "dismop/error.hpp"
#include "dismop/io.hpp"
#include "json.hpp"

namespace dismop {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::kDdpg: return "ddpg";
    case AgentKind::kTd3: return "td3";
    case AgentKind::kBcq: return "bcq";
  }
  return "ddpg";
}

AgentKind parse_agent_kind(std::string_view s) {
  for (AgentKind k : kAllAgentKinds) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorCode::kInvalidArgument, "unknown agent '" + std::string(s) + "'");
}

void validate(const AgentHyper& h) {
  auto require = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::kInvalidConfig, what);
  };
  require(h.gamma >= 0.0 && h.gamma < 1.0, "gamma must lie in [0, 1)");
  require(h.tau > 0.0 && h.tau <= 1.0, "tau must lie in (0, 1]");
  require(h.actor_lr > 0.0 && h.critic_lr > 0.0 && h.pretrain_lr > 0.0,
          "learning rates must be positive");
  require(h.batch_size >= 1, "batch_size must be >= 1");
  require(!h.hidden.empty(), "hidden must list at least one layer");
  for (std::size_t w : h.hidden) require(w >= 1, "hidden widths must be >= 1");
  require(h.td3.policy_delay >= 1, "td3.policy_delay must be >= 1");
  require(h.td3.target_noise >= 0.0 && h.td3.noise_clip >= 0.0,
          "td3 noise parameters must be non-negative");
  require(h.bcq.latent_dim >= 1, "bcq.latent_dim must be >= 1");
  require(h.bcq.n_action_samples >= 1, "bcq.n_action_samples must be >= 1");
  require(h.bcq.phi >= 0.0, "bcq.phi must be non-negative");
  require(h.bcq.lambda_min >= 0.0 && h.bcq.lambda_min <= 1.0, "bcq.lambda_min must lie in [0, 1]");
  require(h.bcq.vae_lr > 0.0, "bcq.vae_lr must be positive");
}

namespace {

json hyper_json(const AgentHyper& h) {
  json j;
  j["gamma"] = h.gamma;
  j["tau"] = h.tau;
  j["actor_lr"] = h.actor_lr;
  j["critic_lr"] = h.critic_lr;
  j["batch_size"] = h.batch_size;
  j["epochs"] = h.epochs;
  j["hidden"] = h.hidden;
  j["pretrain_epochs"] = h.pretrain_epochs;
  j["pretrain_lr"] = h.pretrain_lr;
  j["td3"] = {{"policy_delay", h.td3.policy_delay},
              {"target_noise", h.td3.target_noise},
              {"noise_clip", h.td3.noise_clip}};
  j["bcq"] = {{"latent_dim", h.bcq.latent_dim},
              {"n_action_samples", h.bcq.n_action_samples},
              {"phi", h.bcq.phi},
              {"lambda_min", h.bcq.lambda_min},
              {"vae_lr", h.bcq.vae_lr}};
  return j;
}

void apply_hyper_json(AgentHyper& h, const json& j) {
  h.gamma = j.value("gamma", h.gamma);
  h.tau = j.value("tau", h.tau);
  h.actor_lr = j.value("actor_lr", h.actor_lr);
  h.critic_lr = j.value("critic_lr", h.critic_lr);
  h.batch_size = j.value("batch_size", h.batch_size);
  h.epochs = j.value("epochs", h.epochs);
  h.hidden = j.value("hidden", h.hidden);
  h.pretrain_epochs = j.value("pretrain_epochs", h.pretrain_epochs);
  h.pretrain_lr = j.value("pretrain_lr", h.pretrain_lr);
  if (j.contains("td3")) {
    const auto& t = j["td3"];
    h.td3.policy_delay = t.value("policy_delay", h.td3.policy_delay);
    h.td3.target_noise = t.value("target_noise", h.td3.target_noise);
    h.td3.noise_clip = t.value("noise_clip", h.td3.noise_clip);
  }
  if (j.contains("bcq")) {
    const auto& b = j["bcq"];
    h.bcq.latent_dim = b.value("latent_dim", h.bcq.latent_dim);
    h.bcq.n_action_samples = b.value("n_action_samples", h.bcq.n_action_samples);
    h.bcq.phi = b.value("phi", h.bcq.phi);
    h.bcq.lambda_min = b.value("lambda_min", h.bcq.lambda_min);
    h.bcq.vae_lr = b.value("vae_lr", h.bcq.vae_lr);
  }
}

}  // namespace

std::string hyper_to_json(const AgentHyper& hyper) { return hyper_json(hyper).dump(); }

AgentHyper merge_hyper(AgentHyper base, std::string_view json_text) {
  try {
    apply_hyper_json(base, json::parse(json_text));
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidConfig, std::string("hyperparameters: ") + e.what());
  }
  validate(base);
  return base;
}

AgentHyper hyper_from_json(std::string_view json_text) {
  return merge_hyper(AgentHyper{}, json_text);
}

// --- Scaling helpers --------------------------------------------------------

ActionScaler::ActionScaler(const Bounds& bounds) {
  const auto d = static_cast<Index>(bounds.lo.size());
  lo = Eigen::Map<const Eigen::RowVectorXd>(bounds.lo.data(), d);
  hi = Eigen::Map<const Eigen::RowVectorXd>(bounds.hi.data(), d);
  mid = 0.5 * (lo + hi);
  half = 0.5 * (hi - lo);
}

MatrixXd ActionScaler::to_action(const MatrixXd& unit) const {
  MatrixXd a = unit.array().rowwise() * half.array();
  a.rowwise() += mid;
  return a;
}

MatrixXd ActionScaler::to_unit(const MatrixXd& action) const {
  MatrixXd u = action.rowwise() - mid;
  return u.array().rowwise() / half.array();
}

MatrixXd ActionScaler::clamp(const MatrixXd& action) const {
  MatrixXd out = action;
  for (Index r = 0; r < out.rows(); ++r) {
    out.row(r) = out.row(r).cwiseMax(lo).cwiseMin(hi);
  }
  return out;
}

MatrixXd hconcat(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

MatrixXd row_matrix(std::span<const double> v) {
  MatrixXd m(1, static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Index>(i)) = v[i];
  return m;
}

namespace {

Vec to_vec(const MatrixXd& row) { return Vec(row.data(), row.data() + row.size()); }

std::vector<std::size_t> layer_plan(std::size_t in, const std::vector<std::size_t>& hidden,
                                    std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

std::vector<Activation> activation_plan(std::size_t hidden_layers, Activation output) {
  std::vector<Activation> acts(hidden_layers, Activation::kReLU);
  acts.push_back(output);
  return acts;
}

Mlp make_net(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
             Activation output, std::uint64_t seed) {
  return Mlp(layer_plan(in, hidden, out), activation_plan(hidden.size(), output), seed);
}

MatrixXd repeat_rows(const MatrixXd& m, Index times) {
  MatrixXd out(m.rows() * times, m.cols());
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index k = 0; k < times; ++k) out.row(r * times + k) = m.row(r);
  }
  return out;
}

}  // namespace

// --- Losses -----------------------------------------------------------------

double critic_regression_loss(const Mlp& critic, const MatrixXd& state_actions,
                              const VectorXd& targets, Gradients* grads) {
  ForwardCache cache;
  const MatrixXd q = critic.forward(state_actions, grads ? &cache : nullptr);
  const VectorXd diff = q.col(0) - targets;
  const double n = static_cast<double>(diff.size());
  if (grads) {
    const MatrixXd upstream = 2.0 * diff / n;
    *grads = backward(critic, cache, upstream).grads;
  }
  return diff.squaredNorm() / n;
}

double actor_objective(const Mlp& actor, const Mlp& critic, const ActionScaler& scaler,
                       const MatrixXd& states, Gradients* grads) {
  ForwardCache actor_cache, critic_cache;
  const MatrixXd unit = actor.forward(states, grads ? &actor_cache : nullptr);
  const MatrixXd actions = scaler.to_action(unit);
  const MatrixXd q = critic.forward(hconcat(states, actions), grads ? &critic_cache : nullptr);
  const double n = static_cast<double>(q.rows());
  if (grads) {
    const MatrixXd dq = MatrixXd::Constant(q.rows(), 1, -1.0 / n);
    const MatrixXd d_sa = backward(critic, critic_cache, dq).input_grad;
    const MatrixXd d_action = d_sa.rightCols(actions.cols());
    const MatrixXd d_unit = d_action.array().rowwise() * scaler.half.array();
    *grads = backward(actor, actor_cache, d_unit).grads;
  }
  return -q.mean();
}

VectorXd gaussian_kl(const MatrixXd& mean, const MatrixXd& log_std) {
  const auto var = (2.0 * log_std.array()).exp();
  return (0.5 * (mean.array().square() + var - 1.0 - 2.0 * log_std.array()))
      .rowwise()
      .sum()
      .matrix();
}

VaeLoss vae_loss(const Mlp& encoder, const Mlp& decoder, const ActionScaler& scaler,
                 const MatrixXd& states, const MatrixXd& actions, const MatrixXd& noise,
                 Gradients* encoder_grads, Gradients* decoder_grads) {
  const Index latent = noise.cols();
  if (static_cast<Index>(encoder.output_dim()) != 2 * latent ||
      static_cast<Index>(decoder.input_dim()) != states.cols() + latent) {
    fail(ErrorCode::kLatentDimMismatch, "VAE shapes disagree with the latent noise width");
  }
  const bool want_grads = encoder_grads || decoder_grads;
  const MatrixXd unit_actions = scaler.to_unit(actions);

  ForwardCache enc_cache, dec_cache;
  const MatrixXd enc_out = encoder.forward(hconcat(states, unit_actions), want_grads ? &enc_cache : nullptr);
  const MatrixXd mean = enc_out.leftCols(latent);
  const MatrixXd raw_log_std = enc_out.rightCols(latent);
  const MatrixXd log_std = raw_log_std.cwiseMax(-4.0).cwiseMin(15.0);
  const MatrixXd std_dev = log_std.array().exp();
  const MatrixXd z = mean + std_dev.cwiseProduct(noise);

  const MatrixXd recon = decoder.forward(hconcat(states, z), want_grads ? &dec_cache : nullptr);
  const MatrixXd diff = recon - unit_actions;
  const double b = static_cast<double>(states.rows());
  VaeLoss loss;
  loss.reconstruction = diff.squaredNorm() / static_cast<double>(diff.size());
  loss.kl = gaussian_kl(mean, log_std).sum() / b;

  if (want_grads) {
    const MatrixXd d_recon = 2.0 * diff / static_cast<double>(diff.size());
    auto dec_back = backward(decoder, dec_cache, d_recon);
    if (decoder_grads) *decoder_grads = std::move(dec_back.grads);
    const MatrixXd dz = dec_back.input_grad.rightCols(latent);
    const MatrixXd d_mean = dz + mean / b;
    MatrixXd d_log_std = dz.cwiseProduct(noise).cwiseProduct(std_dev) +
                         (std_dev.array().square() - 1.0).matrix() / b;
    const MatrixXd inside =
        ((raw_log_std.array() > -4.0) && (raw_log_std.array() < 15.0)).cast<double>();
    d_log_std = d_log_std.cwiseProduct(inside);
    if (encoder_grads) {
      *encoder_grads = backward(encoder, enc_cache, hconcat(d_mean, d_log_std)).grads;
    }
  }
  return loss;
}

MatrixXd perturb_actions(const Mlp& perturbation, const ActionScaler& scaler, double phi,
                         const MatrixXd& states, const MatrixXd& actions) {
  const MatrixXd unit = perturbation.predict(hconcat(states, actions));
  MatrixXd xi = (phi * unit).array().rowwise() * scaler.half.array();
  return scaler.clamp(actions + xi);
}

double perturbation_objective(const Mlp& perturbation, const Mlp& critic,
                              const ActionScaler& scaler, double phi, const MatrixXd& states,
                              const MatrixXd& actions, Gradients* grads) {
  ForwardCache p_cache, q_cache;
  const MatrixXd unit = perturbation.forward(hconcat(states, actions), grads ? &p_cache : nullptr);
  const MatrixXd xi = (phi * unit).array().rowwise() * scaler.half.array();
  const MatrixXd raw = actions + xi;
  const MatrixXd perturbed = scaler.clamp(raw);
  const MatrixXd q = critic.forward(hconcat(states, perturbed), grads ? &q_cache : nullptr);
  const double n = static_cast<double>(q.rows());
  if (grads) {
    const MatrixXd dq = MatrixXd::Constant(q.rows(), 1, -1.0 / n);
    MatrixXd d_act = backward(critic, q_cache, dq).input_grad.rightCols(actions.cols());
    for (Index r = 0; r < raw.rows(); ++r) {
      for (Index c = 0; c < raw.cols(); ++c) {
        if (raw(r, c) < scaler.lo(c) || raw(r, c) > scaler.hi(c)) d_act(r, c) = 0.0;
      }
    }
    const MatrixXd d_unit = (phi * d_act).array().rowwise() * scaler.half.array();
    *grads = backward(perturbation, p_cache, d_unit).grads;
  }
  return -q.mean();
}

// --- Agent base ---------------------------------------------------------------

Agent::Agent(std::size_t state_dim, const Bounds& bounds, const AgentHyper& hyper)
    : state_dim_(state_dim), scaler_(bounds), hyper_(hyper) {
  validate(hyper_);
  if (state_dim_ == 0 || bounds.lo.empty()) {
    fail(ErrorCode::kInvalidArgument, "agent needs non-empty state and action spaces");
  }
}

double Agent::behavior_clone_step(const TransitionBatch&) {
  fail(ErrorCode::kInvalidArgument, "behavior cloning is defined for DDPG and TD3 actors");
}

void Agent::check_batch(const TransitionBatch& batch) const {
  if (static_cast<std::size_t>(batch.states.cols()) != state_dim_ ||
      static_cast<std::size_t>(batch.next_states.cols()) != state_dim_ ||
      static_cast<std::size_t>(batch.actions.cols()) != action_dim()) {
    fail(ErrorCode::kDimMismatch,
         "batch dims (" + std::to_string(batch.states.cols()) + ", " +
             std::to_string(batch.actions.cols()) + ") vs agent (" +
             std::to_string(state_dim_) + ", " + std::to_string(action_dim()) + ")");
  }
}

namespace {

double clone_actor(Mlp& actor, Mlp& target_actor, AdamState& opt, const ActionScaler& scaler,
                   const TransitionBatch& batch) {
  ForwardCache cache;
  const MatrixXd unit = actor.forward(batch.states, &cache);
  const MatrixXd target = scaler.to_unit(batch.actions);
  const MatrixXd diff = unit - target;
  const double n = static_cast<double>(diff.size());
  const auto grads = backward(actor, cache, 2.0 * diff / n).grads;
  adam_step(opt, actor, grads);
  polyak_update(target_actor, actor, 1.0);
  return diff.squaredNorm() / n;
}

Vec deterministic_action(const Mlp& actor, const ActionScaler& scaler, std::size_t state_dim,
                         std::span<const double> state) {
  if (state.size() != state_dim) {
    fail(ErrorCode::kDimMismatch, "state dim " + std::to_string(state.size()) + " vs " +
                                      std::to_string(state_dim));
  }
  return to_vec(scaler.clamp(scaler.to_action(actor.predict(row_matrix(state)))));
}

}  // namespace

// --- DDPG ----------------------------------------------------------------------

DdpgAgent::DdpgAgent(std::size_t state_dim, const Bounds& bounds, const AgentHyper& hyper,
                     std::uint64_t seed)
    : Agent(state_dim, bounds, hyper),
      actor(make_net(state_dim, hyper.hidden, action_dim(), Activation::kTanh,
                     derive_seed(seed, 1))),
      critic(make_net(state_dim + action_dim(), hyper.hidden, 1, Activation::kIdentity,
                      derive_seed(seed, 2))),
      target_actor(actor),
      target_critic(critic),
      actor_opt(make_adam(actor, hyper.actor_lr)),
      critic_opt(make_adam(critic, hyper.critic_lr)),
      pretrain_opt(make_adam(actor, hyper.pretrain_lr)) {}

std::vector<std::pair<std::string, const Mlp*>> DdpgAgent::networks() const {
  return {{"actor", &actor},
          {"critic", &critic},
          {"target_actor", &target_actor},
          {"target_critic", &target_critic}};
}

std::vector<std::pair<std::string, Mlp*>> DdpgAgent::mutable_networks() {
  return {{"actor", &actor},
          {"critic", &critic},
          {"target_actor", &target_actor},
          {"target_critic", &target_critic}};
}

Vec DdpgAgent::select_action(std::span<const double> state) const {
  return deterministic_action(actor, scaler_, state_dim_, state);
}

std::vector<double> DdpgAgent::update(const TransitionBatch& batch) {
  const auto l = ddpg_update(*this, batch);
  return {l.critic, l.actor};
}

double DdpgAgent::behavior_clone_step(const TransitionBatch& batch) {
  check_batch(batch);
  return clone_actor(actor, target_actor, pretrain_opt, scaler_, batch);
}

VectorXd ddpg_critic_targets(const DdpgAgent& agent, const TransitionBatch& batch) {
  const auto& scaler = agent.scaler();
  const MatrixXd next_actions = scaler.to_action(agent.target_actor.predict(batch.next_states));
  const MatrixXd q_next = agent.target_critic.predict(hconcat(batch.next_states, next_actions));
  const VectorXd live = VectorXd::Ones(batch.dones.size()) - batch.dones;
  return batch.rewards + agent.hyper().gamma * live.cwiseProduct(q_next.col(0));
}

DdpgLosses ddpg_update(DdpgAgent& agent, const TransitionBatch& batch) {
  agent.check_batch(batch);
  DdpgLosses losses;
  const VectorXd y = ddpg_critic_targets(agent, batch);
  Gradients g;
  losses.critic = critic_regression_loss(agent.critic, hconcat(batch.states, batch.actions), y, &g);
  adam_step(agent.critic_opt, agent.critic, g);

  losses.actor = actor_objective(agent.actor, agent.critic, agent.scaler(), batch.states, &g);
  adam_step(agent.actor_opt, agent.actor, g);

  polyak_update(agent.target_critic, agent.critic, agent.hyper().tau);
  polyak_update(agent.target_actor, agent.actor, agent.hyper().tau);
  return losses;
}

// --- TD3 -----------------------------------------------------------------------

Td3Agent::Td3Agent(std::size_t state_dim, const Bounds& bounds, const AgentHyper& hyper,
                   std::uint64_t seed)
    : Agent(state_dim, bounds, hyper),
      actor(make_net(state_dim, hyper.hidden, action_dim(), Activation::kTanh,
                     derive_seed(seed, 1))),
      critic1(make_net(state_dim + action_dim(), hyper.hidden, 1, Activation::kIdentity,
                       derive_seed(seed, 2))),
      critic2(make_net(state_dim + action_dim(), hyper.hidden, 1, Activation::kIdentity,
                       derive_seed(seed, 3))),
      target_actor(actor),
      target_critic1(critic1),
      target_critic2(critic2),
      actor_opt(make_adam(actor, hyper.actor_lr)),
      critic1_opt(make_adam(critic1, hyper.critic_lr)),
      critic2_opt(make_adam(critic2, hyper.critic_lr)),
      pretrain_opt(make_adam(actor, hyper.pretrain_lr)),
      noise_rng(derive_seed(seed, 7)) {}

std::vector<std::pair<std::string, const Mlp*>> Td3Agent::networks() const {
  return {{"actor", &actor},
          {"critic1", &critic1},
          {"critic2", &critic2},
          {"target_actor", &target_actor},
          {"target_critic1", &target_critic1},
          {"target_critic2", &target_critic2}};
}

std::vector<std::pair<std::string, Mlp*>> Td3Agent::mutable_networks() {
  return {{"actor", &actor},
          {"critic1", &critic1},
          {"critic2", &critic2},
          {"target_actor", &target_actor},
          {"target_critic1", &target_critic1},
          {"target_critic2", &target_critic2}};
}

Vec Td3Agent::select_action(std::span<const double> state) const {
  return deterministic_action(actor, scaler_, state_dim_, state);
}

std::vector<double> Td3Agent::update(const TransitionBatch& batch) {
  const auto l = td3_update(*this, batch, step + 1);
  return {l.critic, l.actor};
}

double Td3Agent::behavior_clone_step(const TransitionBatch& batch) {
  check_batch(batch);
  return clone_actor(actor, target_actor, pretrain_opt, scaler_, batch);
}

MatrixXd td3_target_noise(Rng& rng, const ActionScaler& scaler, const Td3Hyper& hyper,
                          Index rows) {
  MatrixXd noise(rows, scaler.half.size());
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < noise.cols(); ++c) {
      const double sigma = hyper.target_noise * scaler.half(c);
      const double clip = hyper.noise_clip * scaler.half(c);
      noise(r, c) = std::clamp(rng.normal() * sigma, -clip, clip);
    }
  }
  return noise;
}

VectorXd td3_critic_targets(const Td3Agent& agent, const TransitionBatch& batch,
                            const MatrixXd& noise) {
  const auto& scaler = agent.scaler();
  const MatrixXd next_actions =
      scaler.clamp(scaler.to_action(agent.target_actor.predict(batch.next_states)) + noise);
  const MatrixXd sa = hconcat(batch.next_states, next_actions);
  const VectorXd q1 = agent.target_critic1.predict(sa).col(0);
  const VectorXd q2 = agent.target_critic2.predict(sa).col(0);
  const VectorXd live = VectorXd::Ones(batch.dones.size()) - batch.dones;
  return batch.rewards + agent.hyper().gamma * live.cwiseProduct(q1.cwiseMin(q2));
}

Td3Losses td3_update(Td3Agent& agent, const TransitionBatch& batch, std::size_t step) {
  agent.check_batch(batch);
  agent.step = step;
  const auto& h = agent.hyper();
  Td3Losses losses;
  const MatrixXd noise = td3_target_noise(agent.noise_rng, agent.scaler(), h.td3, batch.size());
  const VectorXd y = td3_critic_targets(agent, batch, noise);
  const MatrixXd sa = hconcat(batch.states, batch.actions);
  Gradients g;
  losses.critic = critic_regression_loss(agent.critic1, sa, y, &g);
  adam_step(agent.critic1_opt, agent.critic1, g);
  losses.critic += critic_regression_loss(agent.critic2, sa, y, &g);
  adam_step(agent.critic2_opt, agent.critic2, g);

  if (step % h.td3.policy_delay == 0) {
    losses.actor = actor_objective(agent.actor, agent.critic1, agent.scaler(), batch.states, &g);
    adam_step(agent.actor_opt, agent.actor, g);
    losses.actor_updated = true;
    polyak_update(agent.target_critic1, agent.critic1, h.tau);
    polyak_update(agent.target_critic2, agent.critic2, h.tau);
    polyak_update(agent.target_actor, agent.actor, h.tau);
  } else {
    losses.actor = actor_objective(agent.actor, agent.critic1, agent.scaler(), batch.states, nullptr);
  }
  return losses;
}

// --- BCQ -----------------------------------------------------------------------

BcqAgent::BcqAgent(std::size_t state_dim, const Bounds& bounds, const AgentHyper& hyper,
                   std::uint64_t seed)
    : Agent(state_dim, bounds, hyper),
      vae_encoder(make_net(state_dim + action_dim(), hyper.hidden, 2 * hyper.bcq.latent_dim,
                           Activation::kIdentity, derive_seed(seed, 4))),
      vae_decoder(make_net(state_dim + hyper.bcq.latent_dim, hyper.hidden, action_dim(),
                           Activation::kTanh, derive_seed(seed, 5))),
      perturbation(make_net(state_dim + action_dim(), hyper.hidden, action_dim(),
                            Activation::kTanh, derive_seed(seed, 6))),
      critic1(make_net(state_dim + action_dim(), hyper.hidden, 1, Activation::kIdentity,
                       derive_seed(seed, 2))),
      critic2(make_net(state_dim + action_dim(), hyper.hidden, 1, Activation::kIdentity,
                       derive_seed(seed, 3))),
      target_decoder(vae_decoder),
      target_perturbation(perturbation),
      target_critic1(critic1),
      target_critic2(critic2),
      encoder_opt(make_adam(vae_encoder, hyper.bcq.vae_lr)),
      decoder_opt(make_adam(vae_decoder, hyper.bcq.vae_lr)),
      perturbation_opt(make_adam(perturbation, hyper.actor_lr)),
      critic1_opt(make_adam(critic1, hyper.critic_lr)),
      critic2_opt(make_adam(critic2, hyper.critic_lr)),
      rng(derive_seed(seed, 7)),
      select_seed(derive_seed(seed, 8)) {}

std::vector<std::pair<std::string, const Mlp*>> BcqAgent::networks() const {
  return {{"critic1", &critic1},
          {"critic2", &critic2},
          {"perturbation", &perturbation},
          {"target_critic1", &target_critic1},
          {"target_critic2", &target_critic2},
          {"target_decoder", &target_decoder},
          {"target_perturbation", &target_perturbation},
          {"vae_decoder", &vae_decoder},
          {"vae_encoder", &vae_encoder}};
}

std::vector<std::pair<std::string, Mlp*>> BcqAgent::mutable_networks() {
  return {{"critic1", &critic1},
          {"critic2", &critic2},
          {"perturbation", &perturbation},
          {"target_critic1", &target_critic1},
          {"target_critic2", &target_critic2},
          {"target_decoder", &target_decoder},
          {"target_perturbation", &target_perturbation},
          {"vae_decoder", &vae_decoder},
          {"vae_encoder", &vae_encoder}};
}

void BcqAgent::check_latent_dims() const {
  const std::size_t latent = hyper_.bcq.latent_dim;
  if (vae_encoder.output_dim() != 2 * latent || vae_decoder.input_dim() != state_dim_ + latent ||
      target_decoder.input_dim() != state_dim_ + latent) {
    fail(ErrorCode::kLatentDimMismatch,
         "VAE networks do not match latent_dim " + std::to_string(latent));
  }
}

MatrixXd bcq_sample_latents(Rng& rng, Index rows, std::size_t latent_dim) {
  MatrixXd z(rows, static_cast<Index>(latent_dim));
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < z.cols(); ++c) z(r, c) = std::clamp(rng.normal(), -0.5, 0.5);
  }
  return z;
}

MatrixXd bcq_decode(const Mlp& decoder, const ActionScaler& scaler, const MatrixXd& states,
                    const MatrixXd& latents) {
  return scaler.to_action(decoder.predict(hconcat(states, latents)));
}

VectorXd soft_clipped_double_q(const VectorXd& q1, const VectorXd& q2, double lambda) {
  return lambda * q1.cwiseMin(q2) + (1.0 - lambda) * q1.cwiseMax(q2);
}

VectorXd bcq_critic_targets(const BcqAgent& agent, const TransitionBatch& batch,
                            const MatrixXd& latents) {
  const Index b = batch.size();
  if (latents.rows() % b != 0 || latents.rows() == 0) {
    fail(ErrorCode::kShapeMismatch, "latent rows must be a multiple of the batch size");
  }
  const Index n = latents.rows() / b;
  const auto& h = agent.hyper();
  const MatrixXd next = repeat_rows(batch.next_states, n);
  const MatrixXd decoded = bcq_decode(agent.target_decoder, agent.scaler(), next, latents);
  const MatrixXd candidates =
      perturb_actions(agent.target_perturbation, agent.scaler(), h.bcq.phi, next, decoded);
  const MatrixXd sa = hconcat(next, candidates);
  const VectorXd value = soft_clipped_double_q(agent.target_critic1.predict(sa).col(0),
                                               agent.target_critic2.predict(sa).col(0),
                                               h.bcq.lambda_min);
  VectorXd best(b);
  for (Index r = 0; r < b; ++r) best(r) = value.segment(r * n, n).maxCoeff();
  const VectorXd live = VectorXd::Ones(b) - batch.dones;
  return batch.rewards + h.gamma * live.cwiseProduct(best);
}

BcqLosses bcq_update(BcqAgent& agent, const TransitionBatch& batch) {
  agent.check_batch(batch);
  agent.check_latent_dims();
  const auto& h = agent.hyper();
  const Index b = batch.size();
  const auto latent = static_cast<Index>(h.bcq.latent_dim);
  BcqLosses losses;

  MatrixXd eps(b, latent);
  for (Index r = 0; r < b; ++r) {
    for (Index c = 0; c < latent; ++c) eps(r, c) = agent.rng.normal();
  }
  Gradients ge, gd;
  losses.vae = vae_loss(agent.vae_encoder, agent.vae_decoder, agent.scaler(), batch.states,
                        batch.actions, eps, &ge, &gd)
                   .total();
  adam_step(agent.encoder_opt, agent.vae_encoder, ge);
  adam_step(agent.decoder_opt, agent.vae_decoder, gd);

  const MatrixXd latents = bcq_sample_latents(
      agent.rng, b * static_cast<Index>(h.bcq.n_action_samples), h.bcq.latent_dim);
  const VectorXd y = bcq_critic_targets(agent, batch, latents);
  const MatrixXd sa = hconcat(batch.states, batch.actions);
  Gradients g;
  losses.critic = critic_regression_loss(agent.critic1, sa, y, &g);
  adam_step(agent.critic1_opt, agent.critic1, g);
  losses.critic += critic_regression_loss(agent.critic2, sa, y, &g);
  adam_step(agent.critic2_opt, agent.critic2, g);

  const MatrixXd decoded = bcq_decode(agent.vae_decoder, agent.scaler(), batch.states,
                                      bcq_sample_latents(agent.rng, b, h.bcq.latent_dim));
  losses.perturbation = perturbation_objective(agent.perturbation, agent.critic1, agent.scaler(),
                                               h.bcq.phi, batch.states, decoded, &g);
  adam_step(agent.perturbation_opt, agent.perturbation, g);

  polyak_update(agent.target_critic1, agent.critic1, h.tau);
  polyak_update(agent.target_critic2, agent.critic2, h.tau);
  polyak_update(agent.target_perturbation, agent.perturbation, h.tau);
  polyak_update(agent.target_decoder, agent.vae_decoder, h.tau);
  return losses;
}

std::vector<double> BcqAgent::update(const TransitionBatch& batch) {
  const auto l = bcq_update(*this, batch);
  return {l.vae, l.critic, l.perturbation};
}

Vec BcqAgent::select_action(std::span<const double> state) const {
  if (state.size() != state_dim_) {
    fail(ErrorCode::kDimMismatch, "state dim " + std::to_string(state.size()) + " vs " +
                                      std::to_string(state_dim_));
  }
  std::uint64_t key = kFnvOffset;
  for (double x : state) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i) {
      key ^= (bits >> (8 * i)) & 0xff;
      key *= kFnvPrime;
    }
  }
  Rng local(derive_seed(select_seed, key));
  const auto n = static_cast<Index>(hyper_.bcq.n_action_samples);
  const MatrixXd states = repeat_rows(row_matrix(state), n);
  const MatrixXd decoded = bcq_decode(vae_decoder, scaler_, states,
                                      bcq_sample_latents(local, n, hyper_.bcq.latent_dim));
  const MatrixXd candidates = perturb_actions(perturbation, scaler_, hyper_.bcq.phi, states, decoded);
  const VectorXd q = critic1.predict(hconcat(states, candidates)).col(0);
  Index best = 0;
  q.maxCoeff(&best);
  return to_vec(candidates.row(best));
}

// --- Training ------------------------------------------------------------------

std::unique_ptr<Agent> make_agent(AgentKind kind, std::size_t state_dim, const Bounds& bounds,
                                  const AgentHyper& hyper, std::uint64_t seed) {
  switch (kind) {
    case AgentKind::kDdpg: return std::make_unique<DdpgAgent>(state_dim, bounds, hyper, seed);
    case AgentKind::kTd3: return std::make_unique<Td3Agent>(state_dim, bounds, hyper, seed);
    case AgentKind::kBcq: return std::make_unique<BcqAgent>(state_dim, bounds, hyper, seed);
  }
  fail(ErrorCode::kInvalidArgument, "unknown agent kind");
}

TrainResult train_agent(AgentKind kind, const std::vector<Transition>& transitions,
                        const AgentHyper& hyper, std::uint64_t seed, const Bounds& bounds,
                        const std::function<void(const TrainProgress&)>& on_epoch) {
  validate(hyper);
  if (transitions.empty()) fail(ErrorCode::kEmptyDataset, "no transitions to train on");
  TrainResult result;
  result.agent = make_agent(kind, transitions.front().state.size(), bounds, hyper,
                            derive_seed(seed, 0));
  Agent& agent = *result.agent;
  const std::size_t n = transitions.size();

  auto check = [](double v, const char* phase, std::size_t epoch, std::size_t batch,
                  const std::string& name) {
    if (!std::isfinite(v)) {
      fail(ErrorCode::kNonFiniteLoss, std::string(phase) + " epoch " + std::to_string(epoch) +
                                          " batch " + std::to_string(batch) + ": " + name +
                                          " loss is " + std::to_string(v));
    }
  };

  if (kind != AgentKind::kBcq) {
    for (std::size_t e = 0; e < hyper.pretrain_epochs; ++e) {
      const auto batches = sample_batches(n, hyper.batch_size, derive_seed(seed, 0x100000 + e));
      for (std::size_t b = 0; b < batches.size(); ++b) {
        check(agent.behavior_clone_step(make_batch(transitions, batches[b])), "pretrain", e + 1,
              b, "behavior cloning");
      }
    }
  }

  const auto names = agent.loss_names();
  for (std::size_t e = 0; e < hyper.epochs; ++e) {
    const auto batches = sample_batches(n, hyper.batch_size, derive_seed(seed, 0x200000 + e));
    std::vector<double> sums(names.size(), 0.0);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto losses = agent.update(make_batch(transitions, batches[b]));
      for (std::size_t i = 0; i < losses.size(); ++i) {
        check(losses[i], "train", e + 1, b, names[i]);
        sums[i] += losses[i];
      }
    }
    Vec row{static_cast<double>(e + 1)};
    TrainProgress progress{e + 1, {}};
    for (double s : sums) {
      row.push_back(s / static_cast<double>(batches.size()));
      progress.mean_losses.push_back(row.back());
    }
    result.losses.push_back(std::move(row));
    if (on_epoch) on_epoch(progress);
  }
  return result;
}

}  // namespace dismop
