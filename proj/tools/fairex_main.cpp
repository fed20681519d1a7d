// Copyright 2026 The fairex Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// fairex: command-line driver for the explanation pipeline.
//
//   fairex run --config run.cfg --seed 7 --out results/
//
// Each subcommand reads the artifacts of the previous ones from --out.

#include <CLI11.hpp>
#include <json.hpp>

#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include "fairex/error.hpp"
#include "fairex/logging.hpp"
#include "fairex/pipeline.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> k_core;
  std::optional<std::size_t> top_k;
  std::optional<std::size_t> erasure_length;
  std::optional<std::size_t> candidate_size;
  std::optional<std::size_t> episodes;
};

fairex::RunConfig resolve(const Flags& f) {
  fairex::RunConfig c = fairex::load_run_config(f.config);
  // Flags beat file values.
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out = *f.out;
  if (f.k_core) c.k_core = *f.k_core;
  if (f.top_k) c.top_k = *f.top_k;
  if (f.erasure_length) c.erasure_length = *f.erasure_length;
  if (f.candidate_size) c.policy.candidate_size = *f.candidate_size;
  if (f.episodes) c.explainer.episodes = *f.episodes;
  return c;
}

void print_error(std::string_view code, std::string_view message) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  fairex::init_logging();

  CLI::App app{"Attribute-level counterfactual explanations for item-exposure fairness"};
  app.require_subcommand(1);

  Flags flags;
  const std::map<std::string, std::pair<std::string, std::function<void(const fairex::RunConfig&)>>>
      commands = {
          {"prepare", {"load, filter and split the data into a bundle", fairex::cmd_prepare}},
          {"train-rec", {"train the matrix-factorization recommender", fairex::cmd_train_rec}},
          {"train-graph", {"train the graph embedder", fairex::cmd_train_graph}},
          {"explain", {"train the explanation policy and export explanations", fairex::cmd_explain}},
          {"evaluate", {"run the erasure protocol for every method", fairex::cmd_evaluate}},
          {"report", {"merge erasure curves into one report", fairex::cmd_report}},
          {"run", {"every step above in order", fairex::cmd_run}},
      };
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", flags.config, "key=value run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "master seed");
    sub->add_option("--out", flags.out, "artifact directory");
    sub->add_option("--k-core", flags.k_core, "k-core threshold (0 disables)");
    sub->add_option("--top-k", flags.top_k, "recommendation list length K");
    sub->add_option("--erasure-length", flags.erasure_length, "erasure length E");
    sub->add_option("--candidate-size", flags.candidate_size, "pruned action set size n");
    sub->add_option("--episodes", flags.episodes, "policy training episodes");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const fairex::RunConfig config = resolve(flags);
    commands.at(name).second(config);
  } catch (const fairex::Error& e) {
    print_error(fairex::to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
