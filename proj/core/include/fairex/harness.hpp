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
#include <span>
#include <string>
#include <vector>

#include "fairex/cfe.hpp"
#include "fairex/fairness.hpp"
#include "fairex/graphrep.hpp"
#include "fairex/hin.hpp"
#include "fairex/recsys.hpp"

namespace fairex {

// Desk-scale dataset with long-tailed item popularity and a few item
// attributes planted mostly on popular items.
struct SyntheticConfig {
  std::size_t num_users = 200;
  std::size_t num_items = 300;
  std::size_t num_user_attributes = 20;
  std::size_t num_item_attributes = 30;
  std::size_t interactions_per_user = 40;
  double skew = 1.0;             // popularity ~ rank^-skew
  std::size_t num_clusters = 4;  // latent taste groups of users and items
  double cluster_boost = 2.0;    // weight multiplier for same-cluster items
  std::size_t planted_attributes = 3;
  double planted_head_rate = 0.9;  // share of G0 items carrying each planted attribute
  double planted_tail_rate = 0.1;  // share of G1 items carrying it
  std::size_t attributes_per_item = 2;
  std::size_t attributes_per_user = 2;
  double negative_rate = 0.15;  // share of interactions rated below 4
  double head_fraction = 0.2;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticData {
  InteractionLog log;  // raw ratings in [1, 5]
  AttributeTable user_attributes{NodeKind::kUserAttribute, {}, {}};
  AttributeTable item_attributes{NodeKind::kItemAttribute, {}, {}};
  RelationRegistry relations;
  GroupSplit groups;             // over the whole binarized log
  std::vector<Index> planted;    // item-attribute ids
  std::vector<Index> user_cluster;
  std::vector<Index> item_cluster;
};

SyntheticData generate_synthetic(const SyntheticConfig& config);

// Binarized at 4 and split chronologically; no k-core filtering.
DatasetBundle synthetic_bundle(const SyntheticData& data, const SplitFractions& fractions = {});

// Ranked attribute lists for `users`, each `budget` long (shorter when the
// space is smaller). Baseline sets carry no disparity drops and are not
// flagged as counterfactual.
std::vector<ExplanationSet> baseline_rdexp(std::span<const NodeRef> attribute_space,
                                           std::span<const Index> users, std::size_t budget,
                                           std::uint64_t seed);

enum class PopSide { kUser, kItem };
PopSide parse_pop_side(const std::string& name);

// Attributes of one side ranked by the number of positive interactions whose
// user (or item) carries them, descending, ascending id on ties.
std::vector<NodeRef> popularity_ranking(PopSide side, const Hin& hin, const InteractionLog& train);
std::vector<ExplanationSet> baseline_pop(PopSide side, const Hin& hin,
                                         const InteractionLog& train,
                                         std::span<const Index> users, std::size_t budget);

// Greedy policy lists of `length` attributes per user, with the cumulative
// drop of every deployment; valid when any drop reaches epsilon.
std::vector<ExplanationSet> policy_explanation_lists(const PolicyParams& policy,
                                                     const ExplanationEnvironment& env,
                                                     std::span<const Index> users,
                                                     std::size_t length);

// Everything the erasure protocol needs, shared by all methods.
struct EvaluationContext {
  const Hin* hin = nullptr;
  const LatentFactors* factors = nullptr;
  const EmbeddingTable* embeddings = nullptr;
  const GroupSplit* groups = nullptr;
  GroundTruth truth;                    // held-out positives
  std::vector<std::vector<Index>> seen;  // training items excluded from lists
  std::vector<Index> users;              // evaluated users
  std::size_t top_k = 20;
  DisparityConfig disparity;

  static EvaluationContext make(const Hin& hin, const LatentFactors& factors,
                                const EmbeddingTable& embeddings, const GroupSplit& groups,
                                const InteractionLog& train, const InteractionLog& test,
                                std::size_t top_k, DisparityConfig disparity);
};

// Fuses the embedding of every active attribute into its owners' factors by
// element-wise product, in attribute order, starting from `factors`.
// `active` is indexed like all_attributes(hin).
LatentFactors fuse_attribute_set(const LatentFactors& factors, const EmbeddingTable& embeddings,
                                 const Hin& hin, const std::vector<char>& active);

std::vector<RecList> recommend_all(const LatentFactors& factors, std::span<const Index> users,
                                   std::size_t top_k,
                                   const std::vector<std::vector<Index>>& seen);

struct StartingPoint {
  LatentFactors fused;
  std::vector<RecList> lists;
  FairnessReport report;
};

// Every attribute fused into its owners' factors, then evaluated.
StartingPoint starting_point(const EvaluationContext& ctx);

struct ErasurePoint {
  std::size_t erased = 0;    // cumulative explanation entries erased
  std::size_t distinct = 0;  // attributes removed from the fused set
  FairnessReport report;
};

struct ErasureCurve {
  std::string method;
  std::size_t erasure_length = 0;
  std::vector<ErasurePoint> points;
};

// Takes the top-E attributes of every list, orders them rank by rank across
// users, and removes them globally from the fused set m entries at a time
// (m = 0 means one entry per list). After every batch the remaining
// attributes are re-fused from the trained factors and evaluated.
ErasureCurve erase_and_evaluate(const EvaluationContext& ctx,
                                std::span<const ExplanationSet> explanations,
                                std::size_t erasure_length, std::size_t batch_size,
                                const std::string& method);

// First point minus the last point of the metric.
double cumulative_ht_reduction(const ErasureCurve& curve);

enum class ReportFormat { kCsv, kJson };
ReportFormat parse_report_format(const std::string& name);

// Columns: method,erased,ndcg,hr,ht,gini,disparity
void export_report(std::span<const ErasureCurve> curves, const std::filesystem::path& path,
                   ReportFormat format);
std::string report_csv(std::span<const ErasureCurve> curves);
std::string report_json(std::span<const ErasureCurve> curves);
std::vector<ErasureCurve> read_report_csv(std::istream& in);

}  // namespace fairex
