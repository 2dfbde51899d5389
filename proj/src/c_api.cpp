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

#include "dismop.h"

#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

#include "dismop/checkpoint.hpp"
#include "dismop/error.hpp"
#include "dismop/eval.hpp"
#include "dismop/interpret.hpp"
#include "dismop/io.hpp"
#include "dismop/service.hpp"
#include "json.hpp"

struct dismop_corpus {
  dismop::Corpus corpus;
};

struct dismop_service {
  std::unique_ptr<dismop::Service> service;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

template <typename F>
int guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return DISMOP_OK;
  } catch (const dismop::Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DISMOP_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) {
    dismop::fail(dismop::ErrorCode::kInvalidArgument, std::string(what) + " is null");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

struct Options {
  dismop::PipelineConfig pipeline;
  dismop::AgentKind agent = dismop::AgentKind::kDdpg;
  dismop::Scale reward = dismop::Scale::kTask;
  dismop::DisorderScope disorder;
  std::uint64_t seed = 0;
  std::string feedback;
  std::string sessions;
  bool strict_provenance = true;
};

Options parse_options(const char* text) {
  Options o;
  if (text == nullptr || *text == '\0') return o;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    dismop::fail(dismop::ErrorCode::kInvalidConfig, std::string("options: ") + e.what());
  }
  try {
    if (j.contains("pipeline")) o.pipeline = dismop::parse_pipeline_config(j["pipeline"].dump());
    if (j.contains("agent")) o.agent = dismop::parse_agent_kind(j["agent"].get<std::string>());
    if (j.contains("reward")) o.reward = dismop::parse_scale(j["reward"].get<std::string>());
    if (j.contains("disorder")) {
      o.disorder = dismop::parse_disorder_scope(j["disorder"].get<std::string>());
    }
    o.seed = j.value("seed", o.seed);
    o.feedback = j.value("feedback", std::string());
    o.sessions = j.value("sessions", std::string());
    o.strict_provenance = j.value("strict_provenance", o.strict_provenance);
  } catch (const json::exception& e) {
    dismop::fail(dismop::ErrorCode::kInvalidConfig, std::string("options: ") + e.what());
  }
  return o;
}

json losses_summary(const dismop::Checkpoint& c) {
  json j = {{"policy_id", c.id.name()}, {"epochs", c.losses.size()}};
  if (!c.losses.empty()) {
    j["first_epoch_losses"] = c.losses.front();
    j["final_epoch_losses"] = c.losses.back();
  }
  return j;
}

std::vector<dismop::Checkpoint> load_grid(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    dismop::fail(dismop::ErrorCode::kIo, "grid directory '" + dir.string() + "' not found");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && e.path().extension() == ".json" &&
        name.find(".interpretation.") == std::string::npos) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<dismop::Checkpoint> out;
  for (const auto& f : files) out.push_back(dismop::load_checkpoint(f));
  return out;
}

void check_runtime(const dismop::Checkpoint& c, const dismop::Inventory& inv,
                   const Options& o) {
  dismop::check_provenance(
      c, {dismop::config_hash(o.pipeline.embedder), inv.hash(), c.hashes.actionspace},
      o.strict_provenance);
}

}  // namespace

extern "C" {

const char* dismop_last_error(void) { return g_last_error.c_str(); }

const char* dismop_status_name(int status) {
  if (status == DISMOP_OK) return "Ok";
  if (status == DISMOP_ERR_INTERNAL) return "Internal";
  return dismop::error_code_name(static_cast<dismop::ErrorCode>(status)).data();
}

void dismop_string_free(char* s) { std::free(s); }

int dismop_corpus_load(const char* path, dismop_corpus** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new dismop_corpus{dismop::load_transcripts(path)};
  });
}

int dismop_corpus_generate(const char* config_json, dismop_corpus** out) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out, "out");
    const auto cfg = dismop::parse_synth_config(config_json);
    *out = new dismop_corpus{dismop::generate_synthetic_corpus(cfg)};
  });
}

int dismop_corpus_save(const dismop_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus, "corpus");
    require(path, "path");
    dismop::write_transcripts(corpus->corpus, path);
  });
}

int dismop_corpus_split(const dismop_corpus* corpus, double train_fraction, uint64_t seed,
                        dismop_corpus** train, dismop_corpus** test) {
  return guarded([&] {
    require(corpus, "corpus");
    require(train, "train");
    require(test, "test");
    dismop::SplitSpec spec;
    spec.train_fraction = train_fraction;
    spec.split_seed = seed;
    auto [a, b] = dismop::split_sessions(corpus->corpus, spec);
    auto ta = std::make_unique<dismop_corpus>(dismop_corpus{std::move(a)});
    auto tb = std::make_unique<dismop_corpus>(dismop_corpus{std::move(b)});
    *train = ta.release();
    *test = tb.release();
  });
}

int dismop_corpus_from_session_log(const char* path, dismop_corpus** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new dismop_corpus{dismop::load_session_log(path)};
  });
}

size_t dismop_corpus_size(const dismop_corpus* corpus) {
  return corpus == nullptr ? 0 : corpus->corpus.size();
}

void dismop_corpus_free(dismop_corpus* corpus) { delete corpus; }

int dismop_train(const dismop_corpus* train, const char* options_json, const char* out_path,
                 char** report_json) {
  return guarded([&] {
    require(train, "train");
    require(out_path, "out_path");
    const Options o = parse_options(options_json);
    const auto wb = dismop::prepare_workbench(train->corpus, dismop::Corpus{}, o.pipeline);
    auto transitions = wb.transitions(dismop::filter_disorder(wb.train, o.disorder), o.reward);
    if (!o.sessions.empty()) {
      // Live sessions are unlabeled; their topics come from the labeled corpus's space.
      const auto live = dismop::load_session_log(o.sessions);
      auto extra = wb.transitions(dismop::filter_disorder(live, o.disorder), o.reward);
      transitions.insert(transitions.end(), extra.begin(), extra.end());
    }
    std::size_t overridden = 0;
    if (!o.feedback.empty()) {
      const auto overrides = dismop::feedback_overrides(dismop::load_feedback_log(o.feedback));
      overridden = dismop::override_rewards(transitions, overrides);
    }
    const dismop::PolicyId id{o.agent, o.disorder, o.reward};
    const auto ckpt = dismop::train_policy(transitions, o.pipeline.hyper, o.seed,
                                           dismop::train_context(wb, id));
    dismop::save_checkpoint(ckpt, out_path);
    if (report_json != nullptr) {
      json r = losses_summary(ckpt);
      r["n_transitions"] = transitions.size();
      r["feedback_overrides"] = overridden;
      *report_json = dup_string(r.dump());
    }
  });
}

int dismop_train_grid(const dismop_corpus* train, const char* options_json, const char* out_dir,
                      char** report_json) {
  return guarded([&] {
    require(train, "train");
    require(out_dir, "out_dir");
    const Options o = parse_options(options_json);
    const auto wb = dismop::prepare_workbench(train->corpus, dismop::Corpus{}, o.pipeline);
    std::filesystem::create_directories(out_dir);
    json cells = json::array();
    std::vector<std::size_t> counts;
    const auto grid = dismop::train_dismop_grid(
        wb, o.seed, [&](const dismop::GridProgress& p) { counts.push_back(p.n_transitions); });
    for (std::size_t i = 0; i < grid.size(); ++i) {
      dismop::save_checkpoint(grid[i], std::filesystem::path(out_dir) / (grid[i].id.name() + ".json"));
      json cell = losses_summary(grid[i]);
      cell["n_transitions"] = counts[i];
      cells.push_back(std::move(cell));
    }
    if (report_json != nullptr) *report_json = dup_string(json{{"cells", cells}}.dump());
  });
}

int dismop_eval_grid(const char* grid_dir, const dismop_corpus* test, const char* options_json,
                     char** csv, char** markdown) {
  return guarded([&] {
    require(grid_dir, "grid_dir");
    require(test, "test");
    const Options o = parse_options(options_json);
    const auto inv = dismop::load_pipeline_inventory(o.pipeline);
    const auto grid = load_grid(grid_dir);
    for (const auto& c : grid) check_runtime(c, inv, o);
    const auto table = dismop::accuracy_grid(grid, test->corpus, inv);
    if (csv != nullptr) *csv = dup_string(dismop::grid_to_csv(table));
    if (markdown != nullptr) *markdown = dup_string(dismop::grid_to_markdown(table));
  });
}

int dismop_eval(const char* ckpt_path, const dismop_corpus* test, const char* options_json,
                char** report_json) {
  return guarded([&] {
    require(ckpt_path, "ckpt_path");
    require(test, "test");
    require(report_json, "report_json");
    const Options o = parse_options(options_json);
    const auto inv = dismop::load_pipeline_inventory(o.pipeline);
    const auto ckpt = dismop::load_checkpoint(ckpt_path);
    check_runtime(ckpt, inv, o);
    const auto transitions = dismop::checkpoint_transitions(
        ckpt, dismop::filter_disorder(test->corpus, ckpt.id.disorder), inv);
    const auto agent = dismop::restore_agent(ckpt);
    const auto r = dismop::turn_level_accuracy(*agent, transitions, ckpt.space);
    json recall = json::object();
    for (const auto& [topic, v] : r.per_topic_recall) recall[std::to_string(topic)] = v;
    json topics = json::array();
    for (const auto& t : ckpt.space.catalog.topics()) topics.push_back(t.id);
    *report_json = dup_string(json{{"policy_id", ckpt.id.name()},
                                   {"n_test", r.n_test},
                                   {"accuracy", r.accuracy},
                                   {"topics", topics},
                                   {"confusion", r.confusion},
                                   {"per_topic_recall", recall}}
                                  .dump());
  });
}

int dismop_interpret(const char* ckpt_path, const dismop_corpus* test,
                     const dismop_corpus* pca_source, const char* options_json,
                     const char* format, char** trajectory, char** matrix) {
  return guarded([&] {
    require(ckpt_path, "ckpt_path");
    require(test, "test");
    const Options o = parse_options(options_json);
    const auto fmt = dismop::parse_export_format(format == nullptr ? "json" : format);
    const auto inv = dismop::load_pipeline_inventory(o.pipeline);
    const auto ckpt = dismop::load_checkpoint(ckpt_path);
    check_runtime(ckpt, inv, o);
    const auto agent = dismop::restore_agent(ckpt);
    const auto transitions = dismop::checkpoint_transitions(
        ckpt, dismop::filter_disorder(test->corpus, ckpt.id.disorder), inv);
    const auto pca = dismop::fit_action_pca(
        pca_source == nullptr
            ? transitions
            : dismop::checkpoint_transitions(
                  ckpt, dismop::filter_disorder(pca_source->corpus, ckpt.id.disorder), inv));
    if (trajectory != nullptr) {
      *trajectory = dup_string(dismop::export_plot_data(
          dismop::average_policy_trajectory(*agent, transitions, pca, ckpt.space), fmt));
    }
    if (matrix != nullptr) {
      *matrix = dup_string(dismop::export_plot_data(
          dismop::one_step_transition_matrix(*agent, transitions, ckpt.space), fmt));
    }
  });
}

int dismop_service_create(const char* config_json, dismop_service** out) {
  return guarded([&] {
    require(out, "out");
    auto cfg = dismop::parse_service_config(config_json == nullptr ? "{}" : config_json);
    *out = new dismop_service{std::make_unique<dismop::Service>(std::move(cfg))};
  });
}

int dismop_service_handle(dismop_service* service, const char* method, const char* path,
                          const char* body, int* http_status, char** response_json) {
  return guarded([&] {
    require(service, "service");
    require(method, "method");
    require(path, "path");
    require(http_status, "http_status");
    require(response_json, "response_json");
    const auto r = service->service->handle(method, path, body == nullptr ? "" : body);
    *http_status = r.status;
    *response_json = dup_string(r.body);
  });
}

void dismop_service_free(dismop_service* service) { delete service; }

}  // extern "C"
