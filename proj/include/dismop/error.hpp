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

#include <stdexcept>
#include <string>
#include <string_view>

namespace dismop {

// Every failure surfaced by the library carries one of these codes. The C API
// maps them one-to-one onto dismop_status values.
enum class ErrorCode {
  kInvalidArgument = 1,
  kIo,
  kParseError,
  kSchemaVersionMismatch,
  kDuplicateSessionId,
  kInvalidConfig,
  kTooFewSessions,
  kEmptyText,
  kZeroNorm,
  kDimMismatch,
  kWrongItemCount,
  kScaleImbalance,
  kInvalidSign,
  kNonFiniteScore,
  kTopicWithoutSupport,
  kInsufficientComponents,
  kUnknownTopic,
  kUnlabeledTurn,
  kEmptyDataset,
  kNonFiniteInput,
  kStaleCache,
  kShapeMismatch,
  kArchitectureMismatch,
  kNonFiniteLoss,
  kLatentDimMismatch,
  kCorruptCheckpoint,
  kProvenanceMismatch,
  kDegenerateData,
  kEmptyTestSet,
  kUnsupportedFormat,
  kMissingCell,
  kUnknownPolicy,
  kUnknownSession,
  kBadIndex,
  kBadRating,
  kNotFound,
};

// Stable identifier used in logs and in HTTP error payloads, e.g. "UnknownSession".
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Carries the offending 1-based line number for JSONL inputs.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error(ErrorCode::kParseError,
              "line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(reason) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace dismop
