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

#include "fairex/fairness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "fairex/error.hpp"

namespace fairex {

GroupSplit split_groups(const InteractionLog& train, double head_fraction) {
  if (!(head_fraction > 0.0 && head_fraction < 1.0)) {
    throw Error(ErrorCode::kConfig, "head fraction must lie in (0, 1)");
  }
  const std::size_t n = train.num_items();
  std::vector<std::size_t> counts(n, 0);
  for (const auto& r : train.records()) {
    if (r.rating > 0.5) ++counts[r.item];
  }
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return counts[a] > counts[b]; });
  const auto head_size = static_cast<std::size_t>(
      std::ceil(head_fraction * static_cast<double>(n) - 1e-9));
  GroupSplit g = groups_from_head(
      n, std::span<const Index>(order.data(), std::min(head_size, n)));
  g.counts = std::move(counts);
  return g;
}

GroupSplit groups_from_head(std::size_t num_items, std::span<const Index> head) {
  GroupSplit g;
  g.is_head.assign(num_items, 0);
  for (Index v : head) {
    if (v >= num_items) throw Error(ErrorCode::kReference, fmt::format("item {} out of range", v));
    g.is_head[v] = 1;
  }
  for (Index v = 0; v < num_items; ++v) (g.is_head[v] ? g.head : g.tail).push_back(v);
  g.counts.assign(num_items, 0);
  return g;
}

double DisparityConfig::resolved_alpha(const GroupSplit& groups) const {
  if (alpha) return *alpha;
  if (groups.head.empty()) return 1.0;
  return static_cast<double>(groups.tail.size()) / static_cast<double>(groups.head.size());
}

void DisparityConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kConfig, "lambda must be non-negative");
  }
  if (alpha && !(*alpha > 0.0 && std::isfinite(*alpha))) {
    throw Error(ErrorCode::kConfig, "alpha must be positive");
  }
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::kConfig, "epsilon must be non-negative");
}

std::size_t exposure(std::span<const RecList> recs, std::span<const Index> group) {
  std::vector<Index> sorted(group.begin(), group.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t count = 0;
  for (const auto& list : recs) {
    for (Index v : list.items) {
      if (std::binary_search(sorted.begin(), sorted.end(), v)) ++count;
    }
  }
  return count;
}

Exposure group_exposure(std::span<const RecList> recs, const GroupSplit& groups) {
  Exposure e;
  for (const auto& list : recs) {
    for (Index v : list.items) (groups.in_head(v) ? e.head : e.tail) += 1.0;
  }
  return e;
}

double disparity(const Exposure& exposure, std::size_t head_size, std::size_t tail_size,
                 double lambda, double alpha) {
  const double dp = static_cast<double>(tail_size) * exposure.head -
                    static_cast<double>(head_size) * exposure.tail;
  const double ek = alpha * exposure.head - exposure.tail;
  return std::abs(dp) + lambda * std::abs(ek);
}

double disparity(const Exposure& exposure, const GroupSplit& groups,
                 const DisparityConfig& config) {
  return disparity(exposure, groups.head.size(), groups.tail.size(), config.lambda,
                   config.resolved_alpha(groups));
}

double disparity(std::span<const RecList> recs, const GroupSplit& groups,
                 const DisparityConfig& config) {
  return disparity(group_exposure(recs, groups), groups, config);
}

double disparity(const RecList& recs, const GroupSplit& groups, const DisparityConfig& config) {
  return disparity(std::span<const RecList>(&recs, 1), groups, config);
}

GroundTruth ground_truth(const InteractionLog& log) { return items_by_user(log, true); }

double ndcg_at_k(std::span<const RecList> recs, const GroundTruth& truth, std::size_t k) {
  double total = 0.0;
  std::size_t users = 0;
  for (const auto& list : recs) {
    if (list.user >= truth.size() || truth[list.user].empty()) continue;
    const auto& rel = truth[list.user];
    double dcg = 0.0;
    const std::size_t depth = std::min(k, list.items.size());
    for (std::size_t i = 0; i < depth; ++i) {
      if (std::binary_search(rel.begin(), rel.end(), list.items[i])) {
        dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
      }
    }
    double ideal = 0.0;
    for (std::size_t i = 0; i < std::min(k, rel.size()); ++i) {
      ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    total += dcg / ideal;
    ++users;
  }
  return users ? total / static_cast<double>(users) : 0.0;
}

double hr_at_k(std::span<const RecList> recs, const GroundTruth& truth, std::size_t k) {
  std::size_t hits = 0, users = 0;
  for (const auto& list : recs) {
    if (list.user >= truth.size() || truth[list.user].empty()) continue;
    const auto& rel = truth[list.user];
    const std::size_t depth = std::min(k, list.items.size());
    const bool hit = std::any_of(list.items.begin(), list.items.begin() + depth, [&](Index v) {
      return std::binary_search(rel.begin(), rel.end(), v);
    });
    hits += hit ? 1 : 0;
    ++users;
  }
  return users ? static_cast<double>(hits) / static_cast<double>(users) : 0.0;
}

double ht_at_k(std::span<const RecList> recs, const GroupSplit& groups, std::size_t k) {
  if (recs.empty() || k == 0) return 0.0;
  double total = 0.0;
  for (const auto& list : recs) {
    const std::size_t depth = std::min(k, list.items.size());
    std::size_t head = 0;
    for (std::size_t i = 0; i < depth; ++i) head += groups.in_head(list.items[i]) ? 1 : 0;
    total += static_cast<double>(head) / static_cast<double>(k);
  }
  return total / static_cast<double>(recs.size());
}

double gini(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double sum = std::accumulate(x.begin(), x.end(), 0.0);
  if (sum <= 0.0) return 0.0;
  // sum_i sum_j |x_i - x_j| = 2 sum_i (2i - n - 1) x_(i), i one-based.
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += (2.0 * static_cast<double>(i + 1) - static_cast<double>(n) - 1.0) * x[i];
  }
  return acc / (static_cast<double>(n) * sum);
}

double gini_at_k(std::span<const RecList> recs, std::size_t num_items, std::size_t k) {
  std::vector<double> counts(num_items, 0.0);
  for (const auto& list : recs) {
    const std::size_t depth = std::min(k, list.items.size());
    for (std::size_t i = 0; i < depth; ++i) counts[list.items[i]] += 1.0;
  }
  return gini(counts);
}

FairnessReport evaluate_lists(std::span<const RecList> recs, const GroundTruth& truth,
                              const GroupSplit& groups, const DisparityConfig& config,
                              std::size_t k) {
  FairnessReport r;
  r.k = k;
  r.ndcg = ndcg_at_k(recs, truth, k);
  r.hr = hr_at_k(recs, truth, k);
  r.ht = ht_at_k(recs, groups, k);
  r.gini = gini_at_k(recs, groups.num_items(), k);
  r.disparity = disparity(recs, groups, config);
  return r;
}

std::string fairness_csv_header() {
  return "k,ndcg,hr,ht,gini,disparity,erasure_length,iteration";
}

std::string to_csv_row(const FairnessReport& r) {
  return fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{},{}", r.k, r.ndcg, r.hr,
                     r.ht, r.gini, r.disparity, r.erasure_length, r.iteration);
}

std::string to_json(const FairnessReport& r) {
  nlohmann::ordered_json j;
  j["k"] = r.k;
  j["ndcg"] = r.ndcg;
  j["hr"] = r.hr;
  j["ht"] = r.ht;
  j["gini"] = r.gini;
  j["disparity"] = r.disparity;
  j["erasure_length"] = r.erasure_length;
  j["iteration"] = r.iteration;
  return j.dump();
}

}  // namespace fairex
