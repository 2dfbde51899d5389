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

#include "dismop/checkpoint.hpp"

#include <algorithm>
#include <cctype>

#include "dismop/error.hpp"
#include "dismop/io.hpp"
#include "dismop/rng.hpp"
#include "json.hpp"

namespace dismop {

using nlohmann::json;

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string PolicyId::name() const {
  return std::string(to_string(kind)) + "-" + std::string(to_string(reward)) + "-" +
         to_string(disorder);
}

std::string PolicyId::row_label() const {
  return "DISMOP-" + upper(to_string(kind)) + "-" + upper(to_string(reward));
}

PolicyId parse_policy_id(std::string_view name) {
  const auto a = name.find('-');
  const auto b = a == std::string_view::npos ? a : name.find('-', a + 1);
  if (b == std::string_view::npos) {
    fail(ErrorCode::kUnknownPolicy, "malformed policy id '" + std::string(name) + "'");
  }
  try {
    PolicyId id;
    id.kind = parse_agent_kind(name.substr(0, a));
    id.reward = parse_scale(name.substr(a + 1, b - a - 1));
    id.disorder = parse_disorder_scope(name.substr(b + 1));
    return id;
  } catch (const Error&) {
    fail(ErrorCode::kUnknownPolicy, "malformed policy id '" + std::string(name) + "'");
  }
}

std::vector<std::string> grid_row_labels() {
  std::vector<std::string> rows;
  for (AgentKind k : kAllAgentKinds) {
    for (Scale s : kAllScales) rows.push_back(PolicyId{k, {}, s}.row_label());
  }
  return rows;
}

std::vector<DisorderScope> grid_scopes() {
  std::vector<DisorderScope> scopes;
  for (Disorder d : kAllDisorders) scopes.push_back(DisorderScope::only(d));
  scopes.push_back(DisorderScope::pooled());
  return scopes;
}

Provenance runtime_provenance(const EmbedderConfig& cfg, const Inventory& inv,
                              const ActionSpace& space) {
  return {config_hash(cfg), inv.hash(), space.hash()};
}

// --- Serialization -----------------------------------------------------------

namespace {

json net_to_json(const Mlp& net) {
  json sizes = net.layer_sizes();
  json acts = json::array();
  for (Activation a : net.activations()) acts.push_back(to_string(a));
  json weights = json::array();
  json biases = json::array();
  for (const Layer& l : net.layers()) {
    json w = json::array();
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) row.push_back(l.weight(r, c));
      w.push_back(std::move(row));
    }
    weights.push_back(std::move(w));
    biases.push_back(std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size()));
  }
  return {{"sizes", sizes}, {"activations", acts}, {"weights", weights}, {"biases", biases}};
}

Mlp net_from_json(const json& j) {
  const auto sizes = j.at("sizes").get<std::vector<std::size_t>>();
  const auto& acts = j.at("activations");
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (sizes.size() < 2 || acts.size() + 1 != sizes.size() || weights.size() != acts.size() ||
      biases.size() != acts.size()) {
    fail(ErrorCode::kCorruptCheckpoint, "network layer counts disagree");
  }
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < acts.size(); ++i) {
    Layer l;
    l.activation = parse_activation(acts[i].get<std::string>());
    const auto rows = weights[i].get<std::vector<std::vector<double>>>();
    const auto bias = biases[i].get<std::vector<double>>();
    const auto out = static_cast<Eigen::Index>(sizes[i + 1]);
    const auto in = static_cast<Eigen::Index>(sizes[i]);
    if (static_cast<Eigen::Index>(rows.size()) != out ||
        static_cast<Eigen::Index>(bias.size()) != out) {
      fail(ErrorCode::kCorruptCheckpoint, "layer " + std::to_string(i) + " has the wrong shape");
    }
    l.weight.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      if (static_cast<Eigen::Index>(rows[r].size()) != in) {
        fail(ErrorCode::kCorruptCheckpoint, "layer " + std::to_string(i) + " has the wrong shape");
      }
      for (Eigen::Index c = 0; c < in; ++c) l.weight(r, c) = rows[r][c];
    }
    l.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), out);
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

// Installs `nets` into `agent`, requiring the exact set of names and shapes.
void install_nets(Agent& agent, const std::map<std::string, Mlp>& nets) {
  auto slots = agent.mutable_networks();
  if (slots.size() != nets.size()) {
    fail(ErrorCode::kCorruptCheckpoint, "expected " + std::to_string(slots.size()) +
                                            " networks, found " + std::to_string(nets.size()));
  }
  for (auto& [name, slot] : slots) {
    const auto it = nets.find(name);
    if (it == nets.end()) fail(ErrorCode::kCorruptCheckpoint, "missing network '" + name + "'");
    if (!slot->same_architecture(it->second)) {
      fail(ErrorCode::kCorruptCheckpoint, "network '" + name + "' has the wrong architecture");
    }
    *slot = it->second;
  }
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json j;
  j["schema"] = kCheckpointSchema;
  j["kind"] = to_string(ckpt.id.kind);
  j["disorder"] = to_string(ckpt.id.disorder);
  j["reward_scale"] = to_string(ckpt.id.reward);
  j["hyper"] = json::parse(hyper_to_json(ckpt.hyper));
  j["hashes"] = {{"embedder", ckpt.hashes.embedder},
                 {"inventory", ckpt.hashes.inventory},
                 {"actionspace", ckpt.hashes.actionspace}};
  j["seed"] = ckpt.seed;
  j["losses"] = ckpt.losses;
  json nets = json::object();
  for (const auto& [name, net] : ckpt.nets) nets[name] = net_to_json(net);
  j["nets"] = std::move(nets);
  j["pipeline"] = {{"embedder", json::parse(canonical_json(ckpt.embedder))},
                   {"frame_size", ckpt.frame_size},
                   {"context_mode", to_string(ckpt.context_mode)},
                   {"state_dim", ckpt.state_dim}};
  j["action_space"] = json::parse(action_space_to_json(ckpt.space));
  return j.dump();
}

Checkpoint checkpoint_from_json(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    if (j.at("schema").get<std::string>() != kCheckpointSchema) {
      fail(ErrorCode::kCorruptCheckpoint, "unexpected schema " + j.at("schema").dump());
    }
    Checkpoint c;
    c.id.kind = parse_agent_kind(j.at("kind").get<std::string>());
    c.id.disorder = parse_disorder_scope(j.at("disorder").get<std::string>());
    c.id.reward = parse_scale(j.at("reward_scale").get<std::string>());
    c.hyper = hyper_from_json(j.at("hyper").dump());
    const auto& h = j.at("hashes");
    c.hashes = {h.at("embedder").get<std::string>(), h.at("inventory").get<std::string>(),
                h.at("actionspace").get<std::string>()};
    c.seed = j.at("seed").get<std::uint64_t>();
    c.losses = j.at("losses").get<std::vector<Vec>>();
    const auto& p = j.at("pipeline");
    c.embedder = parse_embedder_config(p.at("embedder").dump());
    c.frame_size = p.at("frame_size").get<std::size_t>();
    c.context_mode = parse_context_mode(p.at("context_mode").get<std::string>());
    c.state_dim = p.at("state_dim").get<std::size_t>();
    c.space = action_space_from_json(j.at("action_space").dump());
    for (const auto& [name, net] : j.at("nets").items()) c.nets.emplace(name, net_from_json(net));

    if (c.hashes.embedder != config_hash(c.embedder)) {
      fail(ErrorCode::kCorruptCheckpoint, "embedder hash does not match the stored config");
    }
    if (c.hashes.actionspace != c.space.hash()) {
      fail(ErrorCode::kCorruptCheckpoint, "action space hash does not match the stored space");
    }
    if (c.state_dim != state_dim(c.embedder.dim, c.context_mode)) {
      fail(ErrorCode::kCorruptCheckpoint, "state_dim disagrees with the pipeline settings");
    }
    // Shape check against a freshly built agent of the same kind.
    auto probe = make_agent(c.id.kind, c.state_dim, c.space.bounds, c.hyper, 0);
    install_nets(*probe, c.nets);
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::kCorruptCheckpoint, std::string("checkpoint: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptCheckpoint) throw;
    fail(ErrorCode::kCorruptCheckpoint, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_file(path));
}

std::vector<std::string> check_provenance(const Checkpoint& ckpt, const Provenance& runtime,
                                          bool strict) {
  std::vector<std::string> diffs;
  auto compare = [&](const char* what, const std::string& stored, const std::string& live) {
    if (stored != live) {
      diffs.push_back(std::string(what) + " hash " + stored + " != runtime " + live);
    }
  };
  compare("embedder", ckpt.hashes.embedder, runtime.embedder);
  compare("inventory", ckpt.hashes.inventory, runtime.inventory);
  compare("actionspace", ckpt.hashes.actionspace, runtime.actionspace);
  if (strict && !diffs.empty()) {
    std::string msg = ckpt.id.name() + ":";
    for (const auto& d : diffs) msg += " " + d + ";";
    fail(ErrorCode::kProvenanceMismatch, msg);
  }
  return diffs;
}

std::unique_ptr<Agent> restore_agent(const Checkpoint& ckpt) {
  auto agent = make_agent(ckpt.id.kind, ckpt.state_dim, ckpt.space.bounds, ckpt.hyper,
                          derive_seed(ckpt.seed, 0));
  install_nets(*agent, ckpt.nets);
  return agent;
}

std::vector<Transition> checkpoint_transitions(const Checkpoint& ckpt, const Corpus& corpus,
                                               const Inventory& inv) {
  BuildSpec spec;
  spec.frame_size = ckpt.frame_size;
  spec.reward = ckpt.id.reward;
  spec.context_mode = ckpt.context_mode;
  return build_transitions(corpus, inv, ckpt.space, ckpt.embedder, spec);
}

// --- Training ------------------------------------------------------------------

TrainContext train_context(const Workbench& wb, const PolicyId& id) {
  TrainContext ctx;
  ctx.id = id;
  ctx.embedder = wb.config.embedder;
  ctx.inventory_hash = wb.inventory.hash();
  ctx.space = &wb.space;
  ctx.frame_size = wb.config.frame_size;
  ctx.context_mode = wb.config.context_mode;
  return ctx;
}

Checkpoint train_policy(const std::vector<Transition>& transitions, const AgentHyper& hyper,
                        std::uint64_t seed, const TrainContext& ctx,
                        const std::function<void(const TrainProgress&)>& on_epoch) {
  if (ctx.space == nullptr) fail(ErrorCode::kInvalidArgument, "train context has no action space");
  auto result = train_agent(ctx.id.kind, transitions, hyper, seed, ctx.space->bounds, on_epoch);
  Checkpoint c;
  c.id = ctx.id;
  c.hyper = hyper;
  c.hashes = {config_hash(ctx.embedder), ctx.inventory_hash, ctx.space->hash()};
  c.seed = seed;
  c.losses = std::move(result.losses);
  c.embedder = ctx.embedder;
  c.frame_size = ctx.frame_size;
  c.context_mode = ctx.context_mode;
  c.state_dim = result.agent->state_dim();
  c.space = *ctx.space;
  for (const auto& [name, net] : result.agent->networks()) c.nets.emplace(name, *net);
  return c;
}

std::vector<Checkpoint> train_dismop_grid(const Workbench& wb, std::uint64_t seed,
                                          const std::function<void(const GridProgress&)>& on_cell) {
  std::vector<Checkpoint> out;
  const auto scopes = grid_scopes();
  const std::size_t total = scopes.size() * kAllAgentKinds.size() * kAllScales.size();
  std::size_t index = 0;
  for (const DisorderScope& scope : scopes) {
    const Corpus cell_corpus = filter_disorder(wb.train, scope);
    std::map<Scale, std::vector<Transition>> by_scale;
    for (Scale scale : kAllScales) by_scale[scale] = wb.transitions(cell_corpus, scale);
    for (AgentKind kind : kAllAgentKinds) {
      for (Scale scale : kAllScales) {
        const PolicyId id{kind, scope, scale};
        const auto& transitions = by_scale.at(scale);
        if (on_cell) on_cell({index, total, id, transitions.size()});
        out.push_back(train_policy(transitions, wb.config.hyper, derive_seed(seed, index),
                                   train_context(wb, id)));
        ++index;
      }
    }
  }
  return out;
}

}  // namespace dismop
