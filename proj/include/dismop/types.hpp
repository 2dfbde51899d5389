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

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace dismop {

using TopicId = int;
using Vec = std::vector<double>;

enum class Speaker { kTherapist, kPatient };

enum class Disorder { kAnxiety, kDepression, kSchizophrenia, kSuicidal };

inline constexpr std::array<Disorder, 4> kAllDisorders = {
    Disorder::kAnxiety, Disorder::kDepression, Disorder::kSchizophrenia,
    Disorder::kSuicidal};

// A grid column: one disorder or the pooled corpus.
struct DisorderScope {
  bool all = true;
  Disorder disorder = Disorder::kAnxiety;

  static DisorderScope pooled() { return {}; }
  static DisorderScope only(Disorder d) { return {false, d}; }
  bool matches(Disorder d) const { return all || d == disorder; }
  bool operator==(const DisorderScope&) const = default;
};

// Working-alliance subscale; doubles as the reward selector.
enum class Scale { kTask, kBond, kGoal };

inline constexpr std::array<Scale, 3> kAllScales = {Scale::kTask, Scale::kBond,
                                                    Scale::kGoal};

std::string_view to_string(Speaker s);
std::string_view to_string(Disorder d);
std::string_view to_string(Scale s);
std::string to_string(const DisorderScope& scope);

// Parsers accept the lowercase wire names; they throw Error(kInvalidArgument).
Speaker parse_speaker(std::string_view s);
Disorder parse_disorder(std::string_view s);
Scale parse_scale(std::string_view s);
DisorderScope parse_disorder_scope(std::string_view s);

}  // namespace dismop
