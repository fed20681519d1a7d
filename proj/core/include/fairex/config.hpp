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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fairex/cfe.hpp"
#include "fairex/checkpoint.hpp"
#include "fairex/fairness.hpp"
#include "fairex/graphrep.hpp"
#include "fairex/harness.hpp"
#include "fairex/hin.hpp"
#include "fairex/recsys.hpp"

namespace fairex {

// Everything one pipeline run needs. Keys in the config file are the
// section-prefixed names listed by run_config_keys(), e.g. cfe.gamma=0.9.
struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out = "fairex_out";
  std::string checkpoint_format = "text";

  // data.source is "synthetic" or "files".
  std::string source = "synthetic";
  std::filesystem::path interactions;
  std::filesystem::path user_attributes;
  std::filesystem::path item_attributes;
  char delimiter = '\t';
  double rating_threshold = 4.0;
  std::size_t k_core = 10;  // 0 disables the filter
  SplitFractions split;
  SyntheticConfig synthetic;

  TrainConfig rec;
  GraphConfig graph;
  GraphTrainConfig graph_train;

  double head_fraction = 0.2;
  DisparityConfig disparity;
  // Unset means: choose from {0, 0.01, 0.05, 0.1} x the mean starting list
  // disparity on the validation users.
  std::optional<double> epsilon;

  PolicyConfig policy;
  ExplainerConfig explainer;
  std::size_t explanation_budget = 5;

  std::size_t top_k = 20;
  std::size_t erasure_length = 10;
  std::size_t erasure_batch = 0;  // 0 = one entry per user per point
  std::string report_format = "csv";
  std::vector<std::string> methods{"cfairer", "rdexp", "pop_user", "pop_item"};

  // Applies one key=value pair. Throws kConfig on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  // Cross-field checks, module invariants and path existence.
  void validate() const;

  // One key=value line per known key, in a fixed order, defaults included.
  std::string resolved() const;
};

std::vector<std::string> run_config_keys();

// Lines are key=value; blank lines and lines starting with '#' are ignored.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir = {});
// Relative data paths resolve against the config file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace fairex
