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

#include "dismop/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "dismop/error.hpp"
#include "dismop/io.hpp"
#include "dismop/rng.hpp"
#include "json.hpp"

namespace dismop {

using nlohmann::json;

namespace {

SessionTranscript session_from_json(const json& j, std::size_t line,
                                    std::string_view schema_version) {
  if (!j.is_object()) throw ParseError(line, "expected a JSON object");
  auto schema = j.find("schema");
  if (schema == j.end() || !schema->is_string()) {
    throw ParseError(line, "missing \"schema\"");
  }
  if (schema->get<std::string>() != schema_version) {
    fail(ErrorCode::kSchemaVersionMismatch,
         "line " + std::to_string(line) + ": schema '" +
             schema->get<std::string>() + "', expected '" +
             std::string(schema_version) + "'");
  }

  SessionTranscript s;
  auto id = j.find("session_id");
  if (id == j.end() || !id->is_string() || id->get<std::string>().empty()) {
    throw ParseError(line, "missing or empty \"session_id\"");
  }
  s.session_id = id->get<std::string>();

  auto disorder = j.find("disorder");
  if (disorder == j.end() || !disorder->is_string()) {
    throw ParseError(line, "missing \"disorder\"");
  }
  try {
    s.disorder = parse_disorder(disorder->get<std::string>());
  } catch (const Error& e) {
    throw ParseError(line, e.what());
  }

  auto turns = j.find("turns");
  if (turns == j.end() || !turns->is_array()) {
    throw ParseError(line, "missing \"turns\" array");
  }
  bool has_therapist = false;
  bool has_patient = false;
  for (const json& tj : *turns) {
    if (!tj.is_object()) throw ParseError(line, "turn is not an object");
    Turn t;
    auto speaker = tj.find("speaker");
    auto text = tj.find("text");
    if (speaker == tj.end() || !speaker->is_string()) {
      throw ParseError(line, "turn without \"speaker\"");
    }
    if (text == tj.end() || !text->is_string()) {
      throw ParseError(line, "turn without \"text\"");
    }
    try {
      t.speaker = parse_speaker(speaker->get<std::string>());
    } catch (const Error& e) {
      throw ParseError(line, e.what());
    }
    t.text = text->get<std::string>();
    auto topic = tj.find("topic");
    if (topic != tj.end() && !topic->is_null()) {
      if (!topic->is_number_integer()) {
        throw ParseError(line, "\"topic\" must be an integer or null");
      }
      t.topic = topic->get<TopicId>();
    }
    (t.speaker == Speaker::kTherapist ? has_therapist : has_patient) = true;
    s.turns.push_back(std::move(t));
  }
  if (!has_therapist || !has_patient) {
    throw ParseError(line, "session needs at least one therapist and one patient turn");
  }
  return s;
}

json session_to_json(const SessionTranscript& s) {
  json turns = json::array();
  for (const Turn& t : s.turns) {
    json tj;
    tj["speaker"] = to_string(t.speaker);
    tj["text"] = t.text;
    tj["topic"] = t.topic ? json(*t.topic) : json(nullptr);
    turns.push_back(std::move(tj));
  }
  json j;
  j["schema"] = kTranscriptSchema;
  j["session_id"] = s.session_id;
  j["disorder"] = to_string(s.disorder);
  j["turns"] = std::move(turns);
  return j;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

std::string serialize_session(const SessionTranscript& session) {
  return session_to_json(session).dump();
}

std::string to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.sessions) {
    out += serialize_session(s);
    out += '\n';
  }
  return out;
}

Corpus parse_jsonl(std::string_view text, std::string_view schema_version) {
  Corpus corpus;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (is_blank(line)) continue;

    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, e.what());
    }
    SessionTranscript s = session_from_json(j, line_no, schema_version);
    if (!seen.insert(s.session_id).second) {
      fail(ErrorCode::kDuplicateSessionId,
           "line " + std::to_string(line_no) + ": duplicate session_id '" +
               s.session_id + "'");
    }
    corpus.sessions.push_back(std::move(s));
  }
  return corpus;
}

Corpus load_transcripts(const std::filesystem::path& path,
                        std::string_view schema_version) {
  return parse_jsonl(read_file(path), schema_version);
}

void write_transcripts(const Corpus& corpus, const std::filesystem::path& path) {
  write_file(path, to_jsonl(corpus));
}

Corpus filter_disorder(const Corpus& corpus, const DisorderScope& scope) {
  Corpus out;
  out.source = corpus.source;
  out.generator_seed = corpus.generator_seed;
  for (const auto& s : corpus.sessions) {
    if (scope.matches(s.disorder)) out.sessions.push_back(s);
  }
  return out;
}

SynthConfig parse_synth_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kInvalidConfig, std::string("synthetic config: ") + e.what());
  }
  if (j.is_object() && !(j.contains("planted_policy") && j.contains("topic_lexicons"))) {
    // Partial configs overlay the bundled defaults.
    const auto base_path = data_dir() / "synth_default.json";
    if (std::filesystem::exists(base_path)) {
      json base = json::parse(read_file(base_path));
      base.merge_patch(j);
      j = std::move(base);
    }
  }
  SynthConfig cfg;
  try {
    cfg.n_sessions = j.value("n_sessions", cfg.n_sessions);
    cfg.pairs_per_session = j.value("pairs_per_session", cfg.pairs_per_session);
    cfg.words_per_turn = j.value("words_per_turn", cfg.words_per_turn);
    cfg.noise_rate = j.value("noise_rate", cfg.noise_rate);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("disorder_mix")) {
      for (const auto& [name, w] : j.at("disorder_mix").items()) {
        cfg.disorder_mix[parse_disorder(name)] = w.get<double>();
      }
    } else {
      for (Disorder d : kAllDisorders) cfg.disorder_mix[d] = 1.0;
    }
    for (const auto& [from, to] : j.at("planted_policy").items()) {
      cfg.planted_policy[std::stoi(from)] = to.get<TopicId>();
    }
    for (const auto& [topic, words] : j.at("topic_lexicons").items()) {
      cfg.topic_lexicons[std::stoi(topic)] = words.get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidConfig, std::string("synthetic config: ") + e.what());
  } catch (const std::invalid_argument&) {
    fail(ErrorCode::kInvalidConfig, "synthetic config: non-integer topic key");
  } catch (const Error& e) {
    fail(ErrorCode::kInvalidConfig, std::string("synthetic config: ") + e.what());
  }
  return cfg;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  return parse_synth_config(read_file(path));
}

namespace {

void validate(const SynthConfig& cfg) {
  if (!(cfg.noise_rate >= 0.0 && cfg.noise_rate <= 1.0)) {
    fail(ErrorCode::kInvalidConfig, "noise_rate must lie in [0, 1]");
  }
  if (cfg.pairs_per_session == 0 || cfg.words_per_turn == 0) {
    fail(ErrorCode::kInvalidConfig, "pairs_per_session and words_per_turn must be positive");
  }
  if (cfg.topic_lexicons.size() < 2) {
    fail(ErrorCode::kInvalidConfig, "need lexicons for at least two topics");
  }
  std::unordered_set<std::string> words;
  for (const auto& [topic, lexicon] : cfg.topic_lexicons) {
    if (lexicon.empty()) {
      fail(ErrorCode::kInvalidConfig, "empty lexicon for topic " + std::to_string(topic));
    }
    std::set<std::string> own(lexicon.begin(), lexicon.end());
    for (const auto& w : own) {
      if (w.empty()) fail(ErrorCode::kInvalidConfig, "empty word in lexicon");
      if (!words.insert(w).second) {
        fail(ErrorCode::kInvalidConfig,
             "lexicons overlap on word '" + w + "' (topic " + std::to_string(topic) + ")");
      }
    }
  }
  if (cfg.planted_policy.size() != cfg.topic_lexicons.size()) {
    fail(ErrorCode::kInvalidConfig, "planted_policy must be total over the lexicon topics");
  }
  for (const auto& [from, to] : cfg.planted_policy) {
    if (!cfg.topic_lexicons.contains(from) || !cfg.topic_lexicons.contains(to)) {
      fail(ErrorCode::kInvalidConfig,
           "planted_policy maps " + std::to_string(from) + " -> " +
               std::to_string(to) + " outside the lexicon topics");
    }
  }
  double total = 0.0;
  for (const auto& [d, w] : cfg.disorder_mix) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      fail(ErrorCode::kInvalidConfig, "disorder weights must be finite and non-negative");
    }
    total += w;
  }
  if (!(total > 0.0)) fail(ErrorCode::kInvalidConfig, "disorder_mix has no positive weight");
}

std::string sample_text(const std::vector<std::string>& lexicon, std::size_t n, Rng& rng) {
  std::string text;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) text += ' ';
    text += lexicon[rng.uniform_index(lexicon.size())];
  }
  return text;
}

}  // namespace

Corpus generate_synthetic_corpus(const SynthConfig& cfg) {
  validate(cfg);
  std::vector<TopicId> topics;
  for (const auto& [t, _] : cfg.topic_lexicons) topics.push_back(t);
  double total_weight = 0.0;
  for (const auto& [_, w] : cfg.disorder_mix) total_weight += w;

  Rng rng(cfg.seed);
  Corpus corpus;
  corpus.source = CorpusSource::kSynthetic;
  corpus.generator_seed = cfg.seed;
  corpus.sessions.reserve(cfg.n_sessions);

  for (std::size_t s = 0; s < cfg.n_sessions; ++s) {
    SessionTranscript session;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%06zu", s);
    session.session_id = id;

    double pick = rng.uniform() * total_weight;
    session.disorder = cfg.disorder_mix.rbegin()->first;
    for (const auto& [d, w] : cfg.disorder_mix) {
      if (w > 0.0 && pick < w) {
        session.disorder = d;
        break;
      }
      pick -= w;
    }

    TopicId topic = topics[rng.uniform_index(topics.size())];
    for (std::size_t p = 0; p < cfg.pairs_per_session; ++p) {
      if (p > 0) {
        const TopicId planted = cfg.planted_policy.at(topic);
        if (rng.uniform() < cfg.noise_rate) {
          std::vector<TopicId> others;
          for (TopicId t : topics) {
            if (t != planted) others.push_back(t);
          }
          topic = others[rng.uniform_index(others.size())];
        } else {
          topic = planted;
        }
      }
      const auto& lexicon = cfg.topic_lexicons.at(topic);
      session.turns.push_back(
          {Speaker::kTherapist, sample_text(lexicon, cfg.words_per_turn, rng), topic});
      session.turns.push_back(
          {Speaker::kPatient, sample_text(lexicon, cfg.words_per_turn, rng), topic});
    }
    corpus.sessions.push_back(std::move(session));
  }
  return corpus;
}

std::pair<Corpus, Corpus> split_sessions(const Corpus& corpus, const SplitSpec& spec) {
  if (spec.unit != SplitUnit::kSession) {
    fail(ErrorCode::kInvalidArgument,
         "split_sessions partitions sessions; use split_transitions for transition units");
  }
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "train_fraction must lie in (0, 1)");
  }
  const std::size_t n = corpus.size();
  if (n < 2) fail(ErrorCode::kTooFewSessions, "need at least two sessions to split");

  const auto n_train = static_cast<std::size_t>(
      std::llround(spec.train_fraction * static_cast<double>(n)));
  // The permutation depends on the train size as well as the seed, so splits
  // at different fractions are independent draws rather than nested prefixes.
  Rng rng(derive_seed(spec.split_seed, n_train));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.uniform_index(i + 1)]);
  }
  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;

  Corpus train, test;
  train.source = test.source = corpus.source;
  train.generator_seed = test.generator_seed = corpus.generator_seed;
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? train : test).sessions.push_back(corpus.sessions[i]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace dismop
