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

#include "dismop/error.hpp"

namespace dismop {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kSchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::kDuplicateSessionId: return "DuplicateSessionId";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kTooFewSessions: return "TooFewSessions";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kZeroNorm: return "ZeroNorm";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kWrongItemCount: return "WrongItemCount";
    case ErrorCode::kScaleImbalance: return "ScaleImbalance";
    case ErrorCode::kInvalidSign: return "InvalidSign";
    case ErrorCode::kNonFiniteScore: return "NonFiniteScore";
    case ErrorCode::kTopicWithoutSupport: return "TopicWithoutSupport";
    case ErrorCode::kInsufficientComponents: return "InsufficientComponents";
    case ErrorCode::kUnknownTopic: return "UnknownTopic";
    case ErrorCode::kUnlabeledTurn: return "UnlabeledTurn";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kStaleCache: return "StaleCache";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kArchitectureMismatch: return "ArchitectureMismatch";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kLatentDimMismatch: return "LatentDimMismatch";
    case ErrorCode::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::kProvenanceMismatch: return "ProvenanceMismatch";
    case ErrorCode::kDegenerateData: return "DegenerateData";
    case ErrorCode::kEmptyTestSet: return "EmptyTestSet";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kMissingCell: return "MissingCell";
    case ErrorCode::kUnknownPolicy: return "UnknownPolicy";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kBadIndex: return "BadIndex";
    case ErrorCode::kBadRating: return "BadRating";
    case ErrorCode::kNotFound: return "NotFound";
  }
  return "Unknown";
}

}  // namespace dismop
