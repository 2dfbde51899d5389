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

#include "dismop/types.hpp"

#include "dismop/error.hpp"

namespace dismop {

std::string_view to_string(Speaker s) {
  return s == Speaker::kTherapist ? "therapist" : "patient";
}

std::string_view to_string(Disorder d) {
  switch (d) {
    case Disorder::kAnxiety: return "anxiety";
    case Disorder::kDepression: return "depression";
    case Disorder::kSchizophrenia: return "schizophrenia";
    case Disorder::kSuicidal: return "suicidal";
  }
  return "anxiety";
}

std::string_view to_string(Scale s) {
  switch (s) {
    case Scale::kTask: return "task";
    case Scale::kBond: return "bond";
    case Scale::kGoal: return "goal";
  }
  return "task";
}

std::string to_string(const DisorderScope& scope) {
  return scope.all ? "all" : std::string(to_string(scope.disorder));
}

Speaker parse_speaker(std::string_view s) {
  if (s == "therapist") return Speaker::kTherapist;
  if (s == "patient") return Speaker::kPatient;
  fail(ErrorCode::kInvalidArgument, "unknown speaker '" + std::string(s) + "'");
}

Disorder parse_disorder(std::string_view s) {
  for (Disorder d : kAllDisorders) {
    if (to_string(d) == s) return d;
  }
  fail(ErrorCode::kInvalidArgument, "unknown disorder '" + std::string(s) + "'");
}

Scale parse_scale(std::string_view s) {
  for (Scale sc : kAllScales) {
    if (to_string(sc) == s) return sc;
  }
  fail(ErrorCode::kInvalidArgument, "unknown scale '" + std::string(s) + "'");
}

DisorderScope parse_disorder_scope(std::string_view s) {
  if (s == "all") return DisorderScope::pooled();
  return DisorderScope::only(parse_disorder(s));
}

}  // namespace dismop
