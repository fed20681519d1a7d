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

#include "fairex/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "fairex/error.hpp"

namespace fairex {
namespace {

constexpr std::uint64_t kInteractionStream = 0x5001;
constexpr std::uint64_t kAttributeStream = 0x5002;
constexpr std::uint64_t kRdexpStream = 0x5003;

constexpr std::string_view kUserRelation = "has_user_feature";
constexpr std::string_view kItemRelation = "has_item_feature";

// k distinct indices drawn with probability proportional to the weights
// (exponential-key sampling).
std::vector<Index> weighted_sample(const std::vector<double>& weights, std::size_t k, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<double, Index>> keys;
  keys.reserve(weights.size());
  for (Index i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    double u = unit(rng);
    while (u <= 0.0) u = unit(rng);
    keys.emplace_back(std::log(u) / weights[i], i);
  }
  k = std::min(k, keys.size());
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(k), keys.end(),
                    [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  std::vector<Index> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(keys[i].second);
  return out;
}

std::vector<Index> choose(std::vector<Index> pool, std::size_t k, Rng& rng) {
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::min(k, pool.size()));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::size_t attribute_slot(const Hin& hin, NodeRef a) {
  return a.kind == NodeKind::kUserAttribute ? a.id
                                            : hin.num_nodes(NodeKind::kUserAttribute) + a.id;
}

std::vector<NodeRef> owners_of(const Hin& hin, NodeRef attribute) {
  std::vector<NodeRef> out;
  for (std::size_t r = 0; r < hin.relations().size(); ++r) {
    auto nb = hin.neighbors(attribute, static_cast<RelationId>(r));
    out.insert(out.end(), nb.begin(), nb.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (num_users == 0 || num_items == 0 || num_clusters == 0) {
    throw Error(ErrorCode::kConfig, "synthetic counts must be at least 1");
  }
  if (num_user_attributes + num_item_attributes == 0) {
    throw Error(ErrorCode::kConfig, "synthetic data needs at least one attribute");
  }
  if (!(skew >= 0.0)) throw Error(ErrorCode::kConfig, "skew exponent must be non-negative");
  if (planted_attributes > num_item_attributes) {
    throw Error(ErrorCode::kConfig, "more planted attributes than item attributes");
  }
  if (!(planted_head_rate >= 0.8 && planted_head_rate <= 1.0) ||
      !(planted_tail_rate >= 0.0 && planted_tail_rate <= 0.2)) {
    throw Error(ErrorCode::kConfig,
                "planted attributes must cover at least 80% of G0 and at most 20% of G1");
  }
  if (interactions_per_user == 0 || interactions_per_user > num_items) {
    throw Error(ErrorCode::kConfig, "interactions per user must lie in [1, items]");
  }
  if (!(negative_rate >= 0.0 && negative_rate < 1.0)) {
    throw Error(ErrorCode::kConfig, "negative rate must lie in [0, 1)");
  }
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  SyntheticData data;
  Rng rng(derive_seed(cfg.seed, kInteractionStream));

  // Popularity rank of each item is a random permutation so ids carry no
  // information.
  std::vector<Index> rank(cfg.num_items);
  std::iota(rank.begin(), rank.end(), Index{0});
  std::shuffle(rank.begin(), rank.end(), rng);
  std::vector<double> popularity(cfg.num_items);
  for (Index v = 0; v < cfg.num_items; ++v) {
    popularity[v] = std::pow(static_cast<double>(rank[v]) + 1.0, -cfg.skew);
  }
  std::uniform_int_distribution<Index> pick_cluster(0, static_cast<Index>(cfg.num_clusters - 1));
  data.user_cluster.resize(cfg.num_users);
  data.item_cluster.resize(cfg.num_items);
  for (auto& c : data.user_cluster) c = pick_cluster(rng);
  for (auto& c : data.item_cluster) c = pick_cluster(rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> gap(1, 1000);
  std::vector<Interaction> records;
  records.reserve(cfg.num_users * cfg.interactions_per_user);
  std::vector<double> weights(cfg.num_items);
  for (Index u = 0; u < cfg.num_users; ++u) {
    for (Index v = 0; v < cfg.num_items; ++v) {
      weights[v] = popularity[v] *
                   (data.item_cluster[v] == data.user_cluster[u] ? cfg.cluster_boost : 1.0);
    }
    auto items = weighted_sample(weights, cfg.interactions_per_user, rng);
    std::shuffle(items.begin(), items.end(), rng);
    std::int64_t t = 1000 * static_cast<std::int64_t>(u);
    for (Index v : items) {
      t += gap(rng);
      double rating;
      if (unit(rng) < cfg.negative_rate) {
        rating = 1.0 + std::floor(unit(rng) * 3.0);  // 1..3
      } else {
        rating = unit(rng) < 0.5 ? 4.0 : 5.0;
      }
      records.push_back({u, v, rating, t});
    }
  }
  std::sort(records.begin(), records.end(), [](const Interaction& a, const Interaction& b) {
    return std::tie(a.user, a.item) < std::tie(b.user, b.item);
  });
  data.log = InteractionLog(cfg.num_users, cfg.num_items, std::move(records));
  data.groups = split_groups(binarize(data.log, 4.0), cfg.head_fraction);

  Rng arng(derive_seed(cfg.seed, kAttributeStream));
  const RelationId user_rel = data.relations.intern(kUserRelation);
  const RelationId item_rel = data.relations.intern(kItemRelation);

  auto& ua = data.user_attributes;
  ua.kind = NodeKind::kUserAttribute;
  ua.labels.resize(cfg.num_user_attributes);
  std::iota(ua.labels.begin(), ua.labels.end(), std::int64_t{0});
  if (cfg.num_user_attributes > 0) {
    std::vector<Index> pool(cfg.num_user_attributes);
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index u = 0; u < cfg.num_users; ++u) {
      // The first attribute reflects the user's taste cluster.
      std::vector<Index> attrs{data.user_cluster[u] % static_cast<Index>(cfg.num_user_attributes)};
      for (Index a : choose(pool, cfg.attributes_per_user, arng)) attrs.push_back(a);
      std::sort(attrs.begin(), attrs.end());
      attrs.erase(std::unique(attrs.begin(), attrs.end()), attrs.end());
      if (attrs.size() > std::max<std::size_t>(cfg.attributes_per_user, 1)) {
        attrs.resize(std::max<std::size_t>(cfg.attributes_per_user, 1));
      }
      for (Index a : attrs) {
        ua.edges.push_back({NodeRef{NodeKind::kUser, u}, NodeRef{NodeKind::kUserAttribute, a},
                            user_rel});
      }
    }
  }

  auto& ia = data.item_attributes;
  ia.kind = NodeKind::kItemAttribute;
  ia.labels.resize(cfg.num_item_attributes);
  std::iota(ia.labels.begin(), ia.labels.end(), std::int64_t{0});
  auto add_item_edge = [&](Index v, Index a) {
    ia.edges.push_back({NodeRef{NodeKind::kItem, v}, NodeRef{NodeKind::kItemAttribute, a},
                        item_rel});
  };
  for (Index p = 0; p < cfg.planted_attributes; ++p) {
    data.planted.push_back(p);
    const auto head_n = static_cast<std::size_t>(
        std::ceil(cfg.planted_head_rate * static_cast<double>(data.groups.head.size())));
    const auto tail_n = static_cast<std::size_t>(
        std::floor(cfg.planted_tail_rate * static_cast<double>(data.groups.tail.size())));
    for (Index v : choose(data.groups.head, head_n, arng)) add_item_edge(v, p);
    for (Index v : choose(data.groups.tail, tail_n, arng)) add_item_edge(v, p);
  }
  const std::size_t free_attrs = cfg.num_item_attributes - cfg.planted_attributes;
  if (free_attrs > 0) {
    std::vector<Index> pool(free_attrs);
    std::iota(pool.begin(), pool.end(), static_cast<Index>(cfg.planted_attributes));
    for (Index v = 0; v < cfg.num_items; ++v) {
      for (Index a : choose(pool, cfg.attributes_per_item, arng)) add_item_edge(v, a);
    }
  }
  std::sort(ua.edges.begin(), ua.edges.end());
  std::sort(ia.edges.begin(), ia.edges.end());
  ia.edges.erase(std::unique(ia.edges.begin(), ia.edges.end()), ia.edges.end());
  return data;
}

DatasetBundle synthetic_bundle(const SyntheticData& data, const SplitFractions& fractions) {
  DatasetBundle b;
  b.split = chronological_split(binarize(data.log, 4.0), fractions);
  b.user_attributes = data.user_attributes;
  b.item_attributes = data.item_attributes;
  b.relations = data.relations;
  return b;
}

std::vector<ExplanationSet> baseline_rdexp(std::span<const NodeRef> space,
                                           std::span<const Index> users, std::size_t budget,
                                           std::uint64_t seed) {
  std::vector<ExplanationSet> out;
  out.reserve(users.size());
  for (Index u : users) {
    Rng rng(derive_seed(derive_seed(seed, kRdexpStream), u));
    std::vector<NodeRef> pool(space.begin(), space.end());
    const std::size_t k = std::min(budget, pool.size());
    // Partial Fisher-Yates: the first k slots are a uniform draw without
    // replacement, in draw order.
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    ExplanationSet set;
    set.user = u;
    for (std::size_t i = 0; i < k; ++i) set.attributes.push_back({pool[i], 0.0});
    out.push_back(std::move(set));
  }
  return out;
}

PopSide parse_pop_side(const std::string& name) {
  if (name == "user") return PopSide::kUser;
  if (name == "item") return PopSide::kItem;
  throw Error(ErrorCode::kConfig, fmt::format("unknown popularity side '{}'", name));
}

std::vector<NodeRef> popularity_ranking(PopSide side, const Hin& hin,
                                        const InteractionLog& train) {
  const NodeKind kind =
      side == PopSide::kUser ? NodeKind::kUserAttribute : NodeKind::kItemAttribute;
  std::vector<std::size_t> count(hin.num_nodes(kind), 0);
  std::vector<std::vector<NodeRef>> cache_user(hin.num_nodes(NodeKind::kUser));
  std::vector<std::vector<NodeRef>> cache_item(hin.num_nodes(NodeKind::kItem));
  for (Index u = 0; u < cache_user.size(); ++u) cache_user[u] = hin.attributes_of({NodeKind::kUser, u});
  for (Index v = 0; v < cache_item.size(); ++v) cache_item[v] = hin.attributes_of({NodeKind::kItem, v});
  for (const auto& r : train.records()) {
    if (!(r.rating > 0.5)) continue;
    const auto& attrs = side == PopSide::kUser ? cache_user[r.user] : cache_item[r.item];
    for (NodeRef a : attrs) {
      if (a.kind == kind) ++count[a.id];
    }
  }
  std::vector<NodeRef> order;
  for (Index a = 0; a < count.size(); ++a) order.push_back({kind, a});
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeRef a, NodeRef b) { return count[a.id] > count[b.id]; });
  return order;
}

std::vector<ExplanationSet> baseline_pop(PopSide side, const Hin& hin,
                                         const InteractionLog& train,
                                         std::span<const Index> users, std::size_t budget) {
  const auto ranking = popularity_ranking(side, hin, train);
  std::vector<ExplanationSet> out;
  for (Index u : users) {
    ExplanationSet set;
    set.user = u;
    for (std::size_t i = 0; i < std::min(budget, ranking.size()); ++i) {
      set.attributes.push_back({ranking[i], 0.0});
    }
    out.push_back(std::move(set));
  }
  return out;
}

std::vector<ExplanationSet> policy_explanation_lists(const PolicyParams& policy,
                                                     const ExplanationEnvironment& env,
                                                     std::span<const Index> users,
                                                     std::size_t length) {
  std::vector<ExplanationSet> out;
  const double eps = env.disparity_config().epsilon;
  for (Index u : users) {
    ExplanationSet set;
    set.user = u;
    auto episode = env.begin(u);
    const auto ranked = rank_attributes(policy, env, u, length);
    for (NodeRef a : ranked) {
      const auto r = episode.deploy(a);
      set.attributes.push_back({a, r.drop});
      set.valid = set.valid || r.drop >= eps;
    }
    out.push_back(std::move(set));
  }
  return out;
}

EvaluationContext EvaluationContext::make(const Hin& hin, const LatentFactors& factors,
                                          const EmbeddingTable& embeddings,
                                          const GroupSplit& groups, const InteractionLog& train,
                                          const InteractionLog& test, std::size_t top_k,
                                          DisparityConfig disparity) {
  EvaluationContext ctx;
  ctx.hin = &hin;
  ctx.factors = &factors;
  ctx.embeddings = &embeddings;
  ctx.groups = &groups;
  ctx.truth = ground_truth(test);
  ctx.seen = items_by_user(train, false);
  ctx.top_k = top_k;
  ctx.disparity = disparity;
  for (Index u = 0; u < factors.num_users(); ++u) ctx.users.push_back(u);
  return ctx;
}

LatentFactors fuse_attribute_set(const LatentFactors& factors, const EmbeddingTable& embeddings,
                                 const Hin& hin, const std::vector<char>& active) {
  const auto attrs = all_attributes(hin);
  if (active.size() != attrs.size()) {
    throw Error(ErrorCode::kShape, "active mask must cover every attribute");
  }
  if (embeddings.dim() != factors.dim()) {
    throw Error(ErrorCode::kShape, "embedding width differs from the factor width");
  }
  LatentFactors out = factors;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (!active[i]) continue;
    const auto e = embeddings.row(attrs[i]).array();
    for (NodeRef owner : owners_of(hin, attrs[i])) {
      if (owner.kind == NodeKind::kUser) {
        out.user.row(owner.id).array() *= e;
      } else if (owner.kind == NodeKind::kItem) {
        out.item.row(owner.id).array() *= e;
      }
    }
  }
  return out;
}

std::vector<RecList> recommend_all(const LatentFactors& factors, std::span<const Index> users,
                                   std::size_t k, const std::vector<std::vector<Index>>& seen) {
  std::vector<RecList> out;
  out.reserve(users.size());
  const RowMatrix scores = factors.user * factors.item.transpose();
  for (Index u : users) {
    out.push_back(top_k_from_scores(u, scores.row(u).transpose(), k, seen[u]));
  }
  return out;
}

namespace {

FairnessReport evaluate_active(const EvaluationContext& ctx, const std::vector<char>& active,
                               std::vector<RecList>* lists_out, LatentFactors* fused_out) {
  LatentFactors fused = fuse_attribute_set(*ctx.factors, *ctx.embeddings, *ctx.hin, active);
  auto lists = recommend_all(fused, ctx.users, ctx.top_k, ctx.seen);
  auto report = evaluate_lists(lists, ctx.truth, *ctx.groups, ctx.disparity, ctx.top_k);
  if (lists_out) *lists_out = std::move(lists);
  if (fused_out) *fused_out = std::move(fused);
  return report;
}

}  // namespace

StartingPoint starting_point(const EvaluationContext& ctx) {
  StartingPoint sp;
  std::vector<char> active(all_attributes(*ctx.hin).size(), 1);
  sp.report = evaluate_active(ctx, active, &sp.lists, &sp.fused);
  return sp;
}

ErasureCurve erase_and_evaluate(const EvaluationContext& ctx,
                                std::span<const ExplanationSet> explanations,
                                std::size_t erasure_length, std::size_t batch_size,
                                const std::string& method) {
  ErasureCurve curve;
  curve.method = method;
  curve.erasure_length = erasure_length;
  const std::size_t num_attrs = all_attributes(*ctx.hin).size();
  std::vector<char> active(num_attrs, 1);

  ErasurePoint p0;
  p0.report = evaluate_active(ctx, active, nullptr, nullptr);
  p0.report.erasure_length = erasure_length;
  curve.points.push_back(p0);

  std::vector<NodeRef> queue;
  for (std::size_t rank = 0; rank < erasure_length; ++rank) {
    for (const auto& set : explanations) {
      if (rank < set.attributes.size()) queue.push_back(set.attributes[rank].attribute);
    }
  }
  const std::size_t m = batch_size == 0 ? std::max<std::size_t>(explanations.size(), 1)
                                        : batch_size;
  std::size_t erased = 0, distinct = 0, iteration = 0;
  FairnessReport last = p0.report;
  for (std::size_t start = 0; start < queue.size(); start += m) {
    bool changed = false;
    for (std::size_t i = start; i < std::min(start + m, queue.size()); ++i) {
      const NodeRef a = queue[i];
      if (!ctx.hin->contains(a) || !is_attribute(a.kind)) continue;
      auto& slot = active[attribute_slot(*ctx.hin, a)];
      if (slot) {
        slot = 0;
        ++distinct;
        changed = true;
      }
    }
    erased = std::min(start + m, queue.size());
    ++iteration;
    if (changed) last = evaluate_active(ctx, active, nullptr, nullptr);
    ErasurePoint p;
    p.erased = erased;
    p.distinct = distinct;
    p.report = last;
    p.report.erasure_length = erasure_length;
    p.report.iteration = iteration;
    curve.points.push_back(p);
  }
  return curve;
}

double cumulative_ht_reduction(const ErasureCurve& curve) {
  if (curve.points.empty()) return 0.0;
  return curve.points.front().report.ht - curve.points.back().report.ht;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  throw Error(ErrorCode::kConfig, fmt::format("unknown report format '{}'", name));
}

std::string report_csv(std::span<const ErasureCurve> curves) {
  std::string out = "method,erased,ndcg,hr,ht,gini,disparity\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out += fmt::format("{},{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n", c.method, p.erased,
                         p.report.ndcg, p.report.hr, p.report.ht, p.report.gini,
                         p.report.disparity);
    }
  }
  return out;
}

std::string report_json(std::span<const ErasureCurve> curves) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      nlohmann::ordered_json j;
      j["method"] = c.method;
      j["erased"] = p.erased;
      j["ndcg"] = p.report.ndcg;
      j["hr"] = p.report.hr;
      j["ht"] = p.report.ht;
      j["gini"] = p.report.gini;
      j["disparity"] = p.report.disparity;
      rows.push_back(std::move(j));
    }
  }
  return rows.dump(2) + "\n";
}

void export_report(std::span<const ErasureCurve> curves, const std::filesystem::path& path,
                   ReportFormat format) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write '{}'", path.string()));
  out << (format == ReportFormat::kCsv ? report_csv(curves) : report_json(curves));
}

std::vector<ErasureCurve> read_report_csv(std::istream& in) {
  std::vector<ErasureCurve> curves;
  std::string line;
  if (!std::getline(in, line) || line != "method,erased,ndcg,hr,ht,gini,disparity") {
    throw Error(ErrorCode::kFormat, "report lacks the expected header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 7) throw Error(ErrorCode::kFormat, fmt::format("report line {}", line_no));
    if (curves.empty() || curves.back().method != f[0]) {
      curves.push_back(ErasureCurve{f[0], 0, {}});
    }
    ErasurePoint p;
    try {
      p.erased = std::stoull(f[1]);
      p.report.ndcg = std::stod(f[2]);
      p.report.hr = std::stod(f[3]);
      p.report.ht = std::stod(f[4]);
      p.report.gini = std::stod(f[5]);
      p.report.disparity = std::stod(f[6]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kFormat, fmt::format("report line {}", line_no));
    }
    curves.back().points.push_back(p);
  }
  return curves;
}

}  // namespace fairex
