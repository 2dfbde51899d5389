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

// Command-line front end. Everything goes through the C API in dismop.h.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dismop.h"
#include "http_frontend.hpp"
#include "httplib.h"
#include "json.hpp"

namespace {

using nlohmann::json;

struct CliError {
  int status;
  std::string message;
};

void check(int rc, const std::string& what) {
  if (rc != DISMOP_OK) {
    throw CliError{rc, what + ": " + dismop_status_name(rc) + ": " + dismop_last_error()};
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{DISMOP_ERR_IO, "cannot read '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{DISMOP_ERR_IO, "cannot write '" + path + "'"};
  out << text;
}

// Takes ownership of a char* returned by the library.
std::string take(char* s) {
  std::string out = s == nullptr ? std::string() : std::string(s);
  dismop_string_free(s);
  return out;
}

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(const std::string& path) {
    check(dismop_corpus_load(path.c_str(), &p_), "load " + path);
  }
  Corpus(const Corpus&) = delete;
  Corpus& operator=(const Corpus&) = delete;
  ~Corpus() { dismop_corpus_free(p_); }
  dismop_corpus** out() { return &p_; }
  const dismop_corpus* get() const { return p_; }

 private:
  dismop_corpus* p_ = nullptr;
};

struct Common {
  std::string pipeline;  // path of a pipeline config
  int epochs = -1;
  bool lenient = false;

  json options() const {
    json o = json::object();
    json p = pipeline.empty() ? json::object() : json::parse(slurp(pipeline));
    if (epochs >= 0) p["hyper"]["epochs"] = epochs;
    o["pipeline"] = p;
    o["strict_provenance"] = !lenient;
    return o;
  }
};

void add_common(CLI::App* cmd, Common& c, bool training) {
  cmd->add_option("--pipeline", c.pipeline, "pipeline config JSON")->check(CLI::ExistingFile);
  if (training) cmd->add_option("--epochs", c.epochs, "override hyper.epochs");
  if (!training) {
    cmd->add_flag("--lenient", c.lenient, "warn instead of failing on provenance mismatch");
  }
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, ',');) out.push_back(part);
  return out;
}

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dismop: disorder-specific therapy-topic policies"};
  app.require_subcommand(1);

  std::string config, out;
  auto* gen = app.add_subcommand("generate-corpus", "write a synthetic transcript corpus");
  gen->add_option("--config", config, "synthetic generator config JSON")->check(CLI::ExistingFile);
  gen->add_option("--out", out, "output JSONL")->required();

  std::string corpus, train_out, test_out;
  double fraction = 0.95;
  std::uint64_t split_seed = 0;
  auto* split = app.add_subcommand("split", "session-level train/test split");
  split->add_option("--corpus", corpus)->required()->check(CLI::ExistingFile);
  split->add_option("--train-out", train_out)->required();
  split->add_option("--test-out", test_out)->required();
  split->add_option("--fraction", fraction, "train fraction")->capture_default_str();
  split->add_option("--seed", split_seed)->capture_default_str();

  Common tc;
  std::string disorder = "all", agent = "ddpg", reward = "task", feedback, sessions;
  std::uint64_t seed = 0;
  auto* train = app.add_subcommand("train", "train one policy");
  train->add_option("--corpus", corpus)->required()->check(CLI::ExistingFile);
  train->add_option("--disorder", disorder, "all|anxiety|depression|schizophrenia|suicidal")
      ->capture_default_str();
  train->add_option("--agent", agent, "ddpg|td3|bcq")->capture_default_str();
  train->add_option("--reward", reward, "task|bond|goal")->capture_default_str();
  train->add_option("--seed", seed)->capture_default_str();
  train->add_option("--feedback", feedback, "feedback.jsonl whose ratings replace rewards");
  train->add_option("--sessions", sessions, "sessions.jsonl added to the training set");
  train->add_option("--out", out, "checkpoint JSON")->required();
  add_common(train, tc, true);

  std::string out_dir;
  auto* grid = app.add_subcommand("train-grid", "train all 45 disorder/agent/reward cells");
  grid->add_option("--corpus", corpus)->required()->check(CLI::ExistingFile);
  grid->add_option("--seed", seed)->capture_default_str();
  grid->add_option("--out-dir", out_dir)->required();
  add_common(grid, tc, true);

  Common ec;
  std::string grid_dir, ckpt, test, markdown;
  auto* eval = app.add_subcommand("eval", "turn-level accuracy of a grid or one checkpoint");
  auto* eval_src = eval->add_option_group("source");
  eval_src->add_option("--grid-dir", grid_dir)->check(CLI::ExistingDirectory);
  eval_src->add_option("--ckpt", ckpt)->check(CLI::ExistingFile);
  eval_src->require_option(1);
  eval->add_option("--test", test)->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out, "CSV table (grid) or JSON report (checkpoint)");
  eval->add_option("--markdown", markdown, "markdown table (grid only)");
  add_common(eval, ec, false);

  std::string format = "json", pca_corpus;
  auto* interp = app.add_subcommand("interpret", "trajectory and 1-step transition matrix");
  interp->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
  interp->add_option("--test", test)->required()->check(CLI::ExistingFile);
  interp->add_option("--pca-corpus", pca_corpus, "corpus for the 2-D projection (default: test)")
      ->check(CLI::ExistingFile);
  interp->add_option("--format", format, "json|csv")->capture_default_str();
  interp->add_option("--out", out, "TRAJECTORY,MATRIX output paths")->required();
  add_common(interp, ec, false);

  int port = 8080;
  std::string host = "127.0.0.1", policies, state_dir, service_pipeline;
  auto* serve = app.add_subcommand("serve", "run the live HTTP API");
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--policies", policies, "directory of checkpoints")
      ->required()
      ->check(CLI::ExistingDirectory);
  serve->add_option("--state-dir", state_dir, "where sessions.jsonl and feedback.jsonl live");
  serve->add_option("--interpretation-corpus", pca_corpus,
                    "corpus used for on-demand interpretations");
  serve->add_option("--pipeline", service_pipeline, "pipeline config JSON")
      ->check(CLI::ExistingFile);

  std::string log;
  auto* exp = app.add_subcommand("export-sessions", "turn a service session log into a corpus");
  exp->add_option("--log", log, "sessions.jsonl")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      Corpus c;
      check(dismop_corpus_generate(config.empty() ? "{}" : slurp(config).c_str(), c.out()),
            "generate");
      check(dismop_corpus_save(c.get(), out.c_str()), "save");
      std::cout << "wrote " << dismop_corpus_size(c.get()) << " sessions to " << out << "\n";
    } else if (*split) {
      Corpus c(corpus), a, b;
      check(dismop_corpus_split(c.get(), fraction, split_seed, a.out(), b.out()), "split");
      check(dismop_corpus_save(a.get(), train_out.c_str()), "save train");
      check(dismop_corpus_save(b.get(), test_out.c_str()), "save test");
      std::cout << dismop_corpus_size(a.get()) << " train / " << dismop_corpus_size(b.get())
                << " test sessions\n";
    } else if (*train) {
      Corpus c(corpus);
      json o = tc.options();
      o["agent"] = agent;
      o["reward"] = reward;
      o["disorder"] = disorder;
      o["seed"] = seed;
      if (!feedback.empty()) o["feedback"] = feedback;
      if (!sessions.empty()) o["sessions"] = sessions;
      char* report = nullptr;
      check(dismop_train(c.get(), o.dump().c_str(), out.c_str(), &report), "train");
      std::cout << take(report) << "\n";
    } else if (*grid) {
      Corpus c(corpus);
      json o = tc.options();
      o["seed"] = seed;
      char* report = nullptr;
      check(dismop_train_grid(c.get(), o.dump().c_str(), out_dir.c_str(), &report), "train-grid");
      std::cout << take(report) << "\n";
    } else if (*eval) {
      Corpus t(test);
      const std::string o = ec.options().dump();
      if (!grid_dir.empty()) {
        char *csv = nullptr, *md = nullptr;
        check(dismop_eval_grid(grid_dir.c_str(), t.get(), o.c_str(), &csv, &md), "eval");
        const std::string csv_s = take(csv), md_s = take(md);
        if (!out.empty()) spill(out, csv_s);
        if (!markdown.empty()) spill(markdown, md_s);
        std::cout << md_s;
      } else {
        char* report = nullptr;
        check(dismop_eval(ckpt.c_str(), t.get(), o.c_str(), &report), "eval");
        const std::string r = take(report);
        if (!out.empty()) spill(out, r);
        std::cout << r << "\n";
      }
    } else if (*interp) {
      const auto paths = split_commas(out);
      if (paths.size() != 2) throw CliError{DISMOP_ERR_INVALID_ARGUMENT, "--out needs two paths"};
      Corpus t(test);
      Corpus p;
      if (!pca_corpus.empty()) check(dismop_corpus_load(pca_corpus.c_str(), p.out()), "load");
      char *traj = nullptr, *mat = nullptr;
      check(dismop_interpret(ckpt.c_str(), t.get(), p.get(), ec.options().dump().c_str(),
                             format.c_str(), &traj, &mat),
            "interpret");
      spill(paths[0], take(traj));
      spill(paths[1], take(mat));
    } else if (*serve) {
      json cfg = {{"policies_dir", policies}, {"state_dir", state_dir},
                  {"interpretation_corpus", pca_corpus}};
      if (!service_pipeline.empty()) cfg["pipeline"] = json::parse(slurp(service_pipeline));
      dismop_service* svc = nullptr;
      check(dismop_service_create(cfg.dump().c_str(), &svc), "serve");
      httplib::Server server;
      dismop_http::mount(server, svc);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << host << ":" << port << "\n" << std::flush;
      const bool ok = server.listen(host, port);
      dismop_service_free(svc);
      if (!ok) throw CliError{DISMOP_ERR_IO, "cannot listen on port " + std::to_string(port)};
    } else if (*exp) {
      Corpus c;
      check(dismop_corpus_from_session_log(log.c_str(), c.out()), "export");
      check(dismop_corpus_save(c.get(), out.c_str()), "save");
      std::cout << "wrote " << dismop_corpus_size(c.get()) << " sessions to " << out << "\n";
    }
  } catch (const CliError& e) {
    std::cerr << "dismop: " << e.message << "\n";
    return e.status == DISMOP_ERR_INTERNAL ? 70 : 1;
  } catch (const json::exception& e) {
    std::cerr << "dismop: bad JSON: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
