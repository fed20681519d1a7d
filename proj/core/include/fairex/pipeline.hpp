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
#include <string>
#include <vector>

#include "fairex/config.hpp"

namespace fairex {

// Artifact layout under RunConfig::out. Each command reads only what earlier
// commands wrote here.
struct ArtifactPaths {
  std::filesystem::path root;

  std::filesystem::path bundle() const { return root / "bundle"; }
  std::filesystem::path factors() const { return root / "factors.ckpt"; }
  std::filesystem::path embeddings() const { return root / "embeddings.ckpt"; }
  std::filesystem::path policy() const { return root / "policy.ckpt"; }
  std::filesystem::path explain_meta() const { return root / "explain.txt"; }
  std::filesystem::path explanations() const { return root / "explanations.jsonl"; }
  std::filesystem::path curve(const std::string& method) const {
    return root / "curves" / (method + ".csv");
  }
  std::filesystem::path report(const std::string& format) const {
    return root / ("report." + format);
  }
  std::filesystem::path resolved_config() const { return root / "resolved_config.txt"; }
};

// Component seeds, all derived from RunConfig::seed.
enum class SeedStream : std::uint64_t {
  kSynthetic = 1,
  kRecommender = 2,
  kGraph = 3,
  kPolicy = 4,
  kExplainer = 5,
  kBaselines = 6,
};
std::uint64_t component_seed(const RunConfig& config, SeedStream stream);

void cmd_prepare(const RunConfig& config);
void cmd_train_rec(const RunConfig& config);
void cmd_train_graph(const RunConfig& config);
void cmd_explain(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_report(const RunConfig& config);
// All of the above in order.
void cmd_run(const RunConfig& config);

// Loads the raw data named by the config and runs binarize, k-core,
// compaction and the chronological split.
DatasetBundle prepare_bundle(const RunConfig& config);

}  // namespace fairex
