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

#include "dismop/actionspace.hpp"
#include "dismop/dataset.hpp"
#include "dismop/error.hpp"
#include "dismop/types.hpp"

namespace dismop {

// Anything that maps a state to a point in the action space. Evaluation and
// interpretation call act(), which by default ignores everything but the
// state; reference policies may look at the transition's ground truth.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Vec select_action(std::span<const double> state) const = 0;
  virtual Vec act(const Transition& t) const { return select_action(t.state); }
};

// Always recommends one topic.
class ConstantPolicy : public Policy {
 public:
  ConstantPolicy(const ActionSpace& space, TopicId topic) : action_(encode_topic(space, topic)) {}
  Vec select_action(std::span<const double>) const override { return action_; }

 private:
  Vec action_;
};

// Replays the logged therapist choice; the accuracy upper bound.
class OracleReplayPolicy : public Policy {
 public:
  explicit OracleReplayPolicy(const ActionSpace& space) : space_(space) {}
  Vec select_action(std::span<const double>) const override {
    fail(ErrorCode::kInvalidArgument, "oracle replay needs the logged transition");
  }
  Vec act(const Transition& t) const override {
    return encode_topic(space_, t.meta.action_topic);
  }

 private:
  const ActionSpace& space_;
};

}  // namespace dismop
