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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dismop/types.hpp"

namespace dismop {

inline constexpr std::string_view kTranscriptSchema = "dismop-transcript/1";

struct Turn {
  Speaker speaker = Speaker::kTherapist;
  std::string text;
  std::optional<TopicId> topic;

  bool operator==(const Turn&) const = default;
};

struct SessionTranscript {
  std::string session_id;
  Disorder disorder = Disorder::kAnxiety;
  std::vector<Turn> turns;

  bool operator==(const SessionTranscript&) const = default;
};

enum class CorpusSource { kIngested, kSynthetic };

struct Corpus {
  std::vector<SessionTranscript> sessions;
  CorpusSource source = CorpusSource::kIngested;
  std::optional<std::uint64_t> generator_seed;

  std::size_t size() const { return sessions.size(); }
};

// JSONL, one session per line. Lines are emitted in canonical form (sorted
// keys, compact separators) so that a canonical file survives a load/write
// round trip byte for byte.
std::string serialize_session(const SessionTranscript& session);
std::string to_jsonl(const Corpus& corpus);
Corpus parse_jsonl(std::string_view text,
                   std::string_view schema_version = kTranscriptSchema);

Corpus load_transcripts(const std::filesystem::path& path,
                        std::string_view schema_version = kTranscriptSchema);
void write_transcripts(const Corpus& corpus, const std::filesystem::path& path);

// Sessions whose disorder is inside `scope`; order preserved.
Corpus filter_disorder(const Corpus& corpus, const DisorderScope& scope);

struct SynthConfig {
  std::size_t n_sessions = 200;
  std::size_t pairs_per_session = 30;
  std::size_t words_per_turn = 8;
  // Relative weights; disorders absent from the map are never drawn.
  std::map<Disorder, double> disorder_mix;
  std::map<TopicId, TopicId> planted_policy;
  std::map<TopicId, std::vector<std::string>> topic_lexicons;
  double noise_rate = 0.0;
  std::uint64_t seed = 0;
};

// Keys missing from a partial config come from data_dir()/synth_default.json.
SynthConfig parse_synth_config(std::string_view json_text);
SynthConfig load_synth_config(const std::filesystem::path& path);

// Plants a first-order topic chain: the therapist topic of pair t+1 is
// planted_policy(topic of pair t) with probability 1 - noise_rate, otherwise
// uniform over the remaining topics. Both turns of a pair draw their words
// from the pair topic's lexicon and carry its label.
Corpus generate_synthetic_corpus(const SynthConfig& cfg);

enum class SplitUnit { kSession, kTransition };

struct SplitSpec {
  double train_fraction = 0.95;
  std::uint64_t split_seed = 0;
  SplitUnit unit = SplitUnit::kSession;
};

// Seeded shuffle of session indices, first round(f*N) go to train. Both halves
// keep the corpus order. Partitions for different fractions are not nested.
std::pair<Corpus, Corpus> split_sessions(const Corpus& corpus,
                                         const SplitSpec& spec);

}  // namespace dismop
