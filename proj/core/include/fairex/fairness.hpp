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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairex/hin.hpp"
#include "fairex/recsys.hpp"

namespace fairex {

// Popular (G0) and long-tail (G1) item groups.
struct GroupSplit {
  std::vector<Index> head;          // G0, ascending
  std::vector<Index> tail;          // G1, ascending
  std::vector<char> is_head;        // per item
  std::vector<std::size_t> counts;  // positive interactions per item

  std::size_t num_items() const { return is_head.size(); }
  bool in_head(Index item) const { return is_head[item] != 0; }
};

// Items ranked by positive-interaction count, descending, ascending id on
// ties; the top ceil(head_fraction * N) form G0.
GroupSplit split_groups(const InteractionLog& train, double head_fraction = 0.2);
GroupSplit groups_from_head(std::size_t num_items, std::span<const Index> head);

struct DisparityConfig {
  double lambda = 1.0;
  // Unset means |G1| / |G0|, the ratio at which Exposure(G1) = alpha *
  // Exposure(G0) holds for a proportional allocation.
  std::optional<double> alpha;
  double epsilon = 0.0;

  double resolved_alpha(const GroupSplit& groups) const;
  void validate() const;
};

struct Exposure {
  double head = 0.0;  // Exposure(G0)
  double tail = 0.0;  // Exposure(G1)
};

// Number of list slots, over all lists, taken by items of the group.
std::size_t exposure(std::span<const RecList> recs, std::span<const Index> group);
Exposure group_exposure(std::span<const RecList> recs, const GroupSplit& groups);

double disparity(const Exposure& exposure, std::size_t head_size, std::size_t tail_size,
                 double lambda, double alpha);
double disparity(const Exposure& exposure, const GroupSplit& groups,
                 const DisparityConfig& config);
double disparity(std::span<const RecList> recs, const GroupSplit& groups,
                 const DisparityConfig& config);
double disparity(const RecList& recs, const GroupSplit& groups, const DisparityConfig& config);

// Held-out positives per user id, ascending.
using GroundTruth = std::vector<std::vector<Index>>;
GroundTruth ground_truth(const InteractionLog& log);

// Binary-relevance metrics, macro-averaged over the lists whose user has a
// non-empty ground truth. Zero when no list qualifies.
double ndcg_at_k(std::span<const RecList> recs, const GroundTruth& truth, std::size_t k);
double hr_at_k(std::span<const RecList> recs, const GroundTruth& truth, std::size_t k);
// Mean share of G0 items among the first k slots of each list.
double ht_at_k(std::span<const RecList> recs, const GroupSplit& groups, std::size_t k);
// Gini coefficient of per-item exposure over the whole catalog.
double gini_at_k(std::span<const RecList> recs, std::size_t num_items, std::size_t k);
double gini(std::span<const double> values);

struct FairnessReport {
  std::size_t k = 0;
  double ndcg = 0.0;
  double hr = 0.0;
  double ht = 0.0;
  double gini = 0.0;
  double disparity = 0.0;
  std::size_t erasure_length = 0;
  std::size_t iteration = 0;

  bool operator==(const FairnessReport&) const = default;
};

FairnessReport evaluate_lists(std::span<const RecList> recs, const GroundTruth& truth,
                              const GroupSplit& groups, const DisparityConfig& config,
                              std::size_t k);

// Column order: k,ndcg,hr,ht,gini,disparity,erasure_length,iteration
std::string fairness_csv_header();
std::string to_csv_row(const FairnessReport& report);
std::string to_json(const FairnessReport& report);

}  // namespace fairex
