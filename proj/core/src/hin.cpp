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

#include "fairex/hin.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <queue>
#include <string_view>
#include <utility>

#include "fairex/error.hpp"

namespace fairex {
namespace {

std::vector<std::string_view> split_fields(std::string_view line, char delimiter) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
  text = strip(text);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool skip_line(std::string_view line) {
  line = strip(line);
  return line.empty() || line.front() == '#';
}

std::vector<std::int64_t> identity_labels(std::size_t n) {
  std::vector<std::int64_t> labels(n);
  std::iota(labels.begin(), labels.end(), std::int64_t{0});
  return labels;
}

// Dense index for each label in ascending label order.
std::map<std::int64_t, Index> rank_labels(std::vector<std::int64_t> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  std::map<std::int64_t, Index> ranks;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ranks.emplace(labels[i], static_cast<Index>(i));
  }
  return ranks;
}

}  // namespace

InteractionLog::InteractionLog(std::size_t num_users, std::size_t num_items,
                               std::vector<Interaction> records,
                               std::vector<std::int64_t> user_labels,
                               std::vector<std::int64_t> item_labels)
    : num_users_(num_users),
      num_items_(num_items),
      records_(std::move(records)),
      user_labels_(user_labels.empty() ? identity_labels(num_users)
                                       : std::move(user_labels)),
      item_labels_(item_labels.empty() ? identity_labels(num_items)
                                       : std::move(item_labels)) {
  if (user_labels_.size() != num_users_ || item_labels_.size() != num_items_) {
    throw Error(ErrorCode::kShape, "label tables do not match user/item counts");
  }
  for (const Interaction& r : records_) {
    if (r.user >= num_users_ || r.item >= num_items_) {
      throw Error(ErrorCode::kReference,
                  fmt::format("record ({}, {}) references an unregistered "
                              "user or item",
                              r.user, r.item));
    }
    if (r.timestamp < 0) {
      throw Error(ErrorCode::kParse,
                  fmt::format("negative timestamp {}", r.timestamp));
    }
  }
}

InteractionLog InteractionLog::with_records(std::vector<Interaction> records) const {
  return InteractionLog(num_users_, num_items_, std::move(records), user_labels_,
                        item_labels_);
}

std::size_t InteractionLog::count_positive(double threshold) const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(),
                    [&](const Interaction& r) { return r.rating > threshold; }));
}

InteractionLog parse_interactions(std::istream& in, const LoadOptions& options) {
  struct Raw {
    std::int64_t user;
    std::int64_t item;
    double rating;
    std::int64_t timestamp;
  };
  std::map<std::pair<std::int64_t, std::int64_t>, Raw> latest;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (skip_line(line)) continue;
    auto fields = split_fields(line, options.delimiter);
    Raw raw{};
    if (fields.size() != 4 || !parse_number(fields[0], raw.user) ||
        !parse_number(fields[1], raw.item) || !parse_number(fields[2], raw.rating) ||
        !parse_number(fields[3], raw.timestamp) || !std::isfinite(raw.rating) ||
        raw.timestamp < 0) {
      throw Error(ErrorCode::kParse,
                  fmt::format("line {}: expected user, item, rating, timestamp",
                              line_number));
    }
    if (options.mapping == IdMapping::kDense &&
        (raw.user < 0 || raw.item < 0 ||
         static_cast<std::size_t>(raw.user) >= options.num_users ||
         static_cast<std::size_t>(raw.item) >= options.num_items)) {
      throw Error(ErrorCode::kParse,
                  fmt::format("line {}: dense id out of range", line_number));
    }
    auto key = std::make_pair(raw.user, raw.item);
    auto it = latest.find(key);
    if (it == latest.end()) {
      latest.emplace(key, raw);
    } else if (raw.timestamp >= it->second.timestamp) {
      it->second = raw;
    }
  }
  if (latest.empty() && !options.allow_empty) {
    throw Error(ErrorCode::kEmptyInput, "no interaction records");
  }

  if (options.mapping == IdMapping::kDense) {
    std::vector<Interaction> records;
    records.reserve(latest.size());
    for (const auto& [key, raw] : latest) {
      records.push_back({static_cast<Index>(raw.user), static_cast<Index>(raw.item),
                         raw.rating, raw.timestamp});
    }
    return InteractionLog(options.num_users, options.num_items, std::move(records));
  }

  std::vector<std::int64_t> users, items;
  for (const auto& [key, raw] : latest) {
    users.push_back(raw.user);
    items.push_back(raw.item);
  }
  auto user_rank = rank_labels(users);
  auto item_rank = rank_labels(items);
  std::vector<Interaction> records;
  records.reserve(latest.size());
  for (const auto& [key, raw] : latest) {
    records.push_back(
        {user_rank.at(raw.user), item_rank.at(raw.item), raw.rating, raw.timestamp});
  }
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.user, a.item) < std::tie(b.user, b.item);
  });
  std::vector<std::int64_t> user_labels, item_labels;
  for (const auto& [label, idx] : user_rank) user_labels.push_back(label);
  for (const auto& [label, idx] : item_rank) item_labels.push_back(label);
  const std::size_t m = user_labels.size();
  const std::size_t n = item_labels.size();
  return InteractionLog(m, n, std::move(records), std::move(user_labels), std::move(item_labels));
}

InteractionLog load_interactions(const std::filesystem::path& path,
                                 const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, fmt::format("cannot open '{}'", path.string()));
  }
  return parse_interactions(in, options);
}

void write_interactions(std::ostream& out, const InteractionLog& log) {
  for (const Interaction& r : log.records()) {
    out << fmt::format("{}\t{}\t{}\t{}\n", r.user, r.item, r.rating, r.timestamp);
  }
}

InteractionLog binarize(const InteractionLog& log, double threshold) {
  std::vector<Interaction> records = log.records();
  for (Interaction& r : records) r.rating = r.rating >= threshold ? 1.0 : 0.0;
  return log.with_records(std::move(records));
}

InteractionLog apply_k_core(const InteractionLog& log, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kConfig, "k-core requires k >= 1");
  const std::size_t m = log.num_users();
  const std::size_t n = log.num_items();
  std::vector<std::vector<Index>> user_items(m), item_users(n);
  for (const Interaction& r : log.records()) {
    if (r.rating > 0.5) {
      user_items[r.user].push_back(r.item);
      item_users[r.item].push_back(r.user);
    }
  }
  std::vector<std::size_t> user_degree(m), item_degree(n);
  std::vector<bool> user_alive(m, true), item_alive(n, true);
  // Queue entries: (is_item, index).
  std::queue<std::pair<bool, Index>> pending;
  for (Index u = 0; u < m; ++u) {
    user_degree[u] = user_items[u].size();
    if (user_degree[u] < k) {
      user_alive[u] = false;
      pending.emplace(false, u);
    }
  }
  for (Index v = 0; v < n; ++v) {
    item_degree[v] = item_users[v].size();
    if (item_degree[v] < k) {
      item_alive[v] = false;
      pending.emplace(true, v);
    }
  }
  while (!pending.empty()) {
    auto [is_item, idx] = pending.front();
    pending.pop();
    if (is_item) {
      for (Index u : item_users[idx]) {
        if (user_alive[u] && --user_degree[u] < k) {
          user_alive[u] = false;
          pending.emplace(false, u);
        }
      }
    } else {
      for (Index v : user_items[idx]) {
        if (item_alive[v] && --item_degree[v] < k) {
          item_alive[v] = false;
          pending.emplace(true, v);
        }
      }
    }
  }
  std::vector<Interaction> kept;
  for (const Interaction& r : log.records()) {
    if (user_alive[r.user] && item_alive[r.item]) kept.push_back(r);
  }
  if (kept.empty()) {
    throw Error(ErrorCode::kEmptyCore,
                fmt::format("{}-core is empty", k));
  }
  return log.with_records(std::move(kept));
}

InteractionLog compact(const InteractionLog& log) {
  std::vector<Index> user_map(log.num_users(), kInvalidIndex);
  std::vector<Index> item_map(log.num_items(), kInvalidIndex);
  for (const Interaction& r : log.records()) {
    user_map[r.user] = 0;
    item_map[r.item] = 0;
  }
  std::vector<std::int64_t> user_labels, item_labels;
  for (std::size_t u = 0; u < user_map.size(); ++u) {
    if (user_map[u] == 0) {
      user_map[u] = static_cast<Index>(user_labels.size());
      user_labels.push_back(log.user_labels()[u]);
    }
  }
  for (std::size_t v = 0; v < item_map.size(); ++v) {
    if (item_map[v] == 0) {
      item_map[v] = static_cast<Index>(item_labels.size());
      item_labels.push_back(log.item_labels()[v]);
    }
  }
  std::vector<Interaction> records = log.records();
  for (Interaction& r : records) {
    r.user = user_map[r.user];
    r.item = item_map[r.item];
  }
  const std::size_t m = user_labels.size();
  const std::size_t n = item_labels.size();
  return InteractionLog(m, n, std::move(records), std::move(user_labels),
                        std::move(item_labels));
}

SplitLog chronological_split(const InteractionLog& log,
                             const SplitFractions& fractions) {
  const double sum = fractions.train + fractions.validation + fractions.test;
  if (fractions.train <= 0 || fractions.validation <= 0 || fractions.test <= 0 ||
      std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kConfig,
                fmt::format("split fractions must be positive and sum to 1 "
                            "(got {}, {}, {})",
                            fractions.train, fractions.validation, fractions.test));
  }
  std::vector<std::vector<Interaction>> per_user(log.num_users());
  for (const Interaction& r : log.records()) per_user[r.user].push_back(r);

  // Guard against representation error such as 0.6 * 5 = 3.0000000000000004.
  auto ceil_share = [](double fraction, std::size_t n) {
    return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  };

  std::vector<Interaction> train, validation, test;
  for (auto& records : per_user) {
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
      return std::tie(a.timestamp, a.item) < std::tie(b.timestamp, b.item);
    });
    const std::size_t n = records.size();
    const std::size_t n_train = std::min(n, ceil_share(fractions.train, n));
    const std::size_t n_valid =
        std::min(n - n_train, ceil_share(fractions.validation, n));
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n_train) {
        train.push_back(records[i]);
      } else if (i < n_train + n_valid) {
        validation.push_back(records[i]);
      } else {
        test.push_back(records[i]);
      }
    }
  }
  return SplitLog{log.with_records(std::move(train)),
                  log.with_records(std::move(validation)),
                  log.with_records(std::move(test)), fractions};
}

RelationRegistry::RelationRegistry() : names_{std::string(kInteractionName)} {}

RelationId RelationRegistry::intern(std::string_view name) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<RelationId>(i);
  }
  if (name.empty() || name.find_first_of("\t\n,=") != std::string_view::npos) {
    throw Error(ErrorCode::kParse, fmt::format("invalid relation name '{}'", name));
  }
  names_.emplace_back(name);
  return static_cast<RelationId>(names_.size() - 1);
}

RelationId RelationRegistry::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<RelationId>(i);
  }
  throw Error(ErrorCode::kReference, fmt::format("unknown relation '{}'", name));
}

const std::string& RelationRegistry::name(RelationId id) const {
  if (!contains(id)) {
    throw Error(ErrorCode::kReference, fmt::format("unknown relation id {}", id));
  }
  return names_[id];
}

std::vector<AttributeEdgeRecord> parse_attribute_edges(std::istream& in,
                                                       char delimiter) {
  std::vector<AttributeEdgeRecord> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (skip_line(line)) continue;
    auto fields = split_fields(line, delimiter);
    AttributeEdgeRecord record;
    if (fields.size() != 3 || !parse_number(fields[0], record.owner_label) ||
        !parse_number(fields[1], record.attribute_label) || strip(fields[2]).empty()) {
      throw Error(ErrorCode::kParse,
                  fmt::format("line {}: expected node_id, attribute_id, relation",
                              line_number));
    }
    record.relation = std::string(strip(fields[2]));
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<AttributeEdgeRecord> load_attribute_edges(const std::filesystem::path& path,
                                                      char delimiter) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, fmt::format("cannot open '{}'", path.string()));
  }
  return parse_attribute_edges(in, delimiter);
}

ResolvedAttributes resolve_attribute_edges(std::span<const AttributeEdgeRecord> records,
                                           NodeKind attribute_kind,
                                           std::span<const std::int64_t> owner_labels,
                                           RelationRegistry& relations) {
  if (!is_attribute(attribute_kind)) {
    throw Error(ErrorCode::kConfig, "attribute table needs an attribute node kind");
  }
  const NodeKind owner_kind =
      attribute_kind == NodeKind::kUserAttribute ? NodeKind::kUser : NodeKind::kItem;
  std::map<std::int64_t, Index> owner_index;
  for (std::size_t i = 0; i < owner_labels.size(); ++i) {
    owner_index.emplace(owner_labels[i], static_cast<Index>(i));
  }

  ResolvedAttributes out;
  out.table.kind = attribute_kind;
  std::vector<const AttributeEdgeRecord*> kept;
  std::vector<std::int64_t> attribute_labels;
  std::vector<std::string> names;
  for (const AttributeEdgeRecord& r : records) {
    if (!owner_index.contains(r.owner_label)) {
      ++out.dropped;
      continue;
    }
    kept.push_back(&r);
    attribute_labels.push_back(r.attribute_label);
    names.push_back(r.relation);
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  for (const auto& name : names) relations.intern(name);

  auto attribute_rank = rank_labels(attribute_labels);
  for (const auto& [label, idx] : attribute_rank) out.table.labels.push_back(label);
  for (const AttributeEdgeRecord* r : kept) {
    out.table.edges.push_back(TypedEdge{
        NodeRef{owner_kind, owner_index.at(r->owner_label)},
        NodeRef{attribute_kind, attribute_rank.at(r->attribute_label)},
        relations.find(r->relation)});
  }
  std::sort(out.table.edges.begin(), out.table.edges.end());
  out.table.edges.erase(std::unique(out.table.edges.begin(), out.table.edges.end()),
                        out.table.edges.end());
  return out;
}

Hin Hin::build(const InteractionLog& log, const AttributeTable& user_attributes,
               const AttributeTable& item_attributes, RelationRegistry relations) {
  Hin hin;
  hin.counts_[kind_index(NodeKind::kUser)] = log.num_users();
  hin.counts_[kind_index(NodeKind::kItem)] = log.num_items();
  hin.counts_[kind_index(NodeKind::kUserAttribute)] = user_attributes.size();
  hin.counts_[kind_index(NodeKind::kItemAttribute)] = item_attributes.size();
  for (std::size_t k = 0; k < kNumNodeKinds; ++k) {
    hin.offsets_[k + 1] = hin.offsets_[k] + hin.counts_[k];
  }
  hin.labels_[kind_index(NodeKind::kUser)] = log.user_labels();
  hin.labels_[kind_index(NodeKind::kItem)] = log.item_labels();
  hin.labels_[kind_index(NodeKind::kUserAttribute)] = user_attributes.labels;
  hin.labels_[kind_index(NodeKind::kItemAttribute)] = item_attributes.labels;
  hin.relations_ = std::move(relations);

  std::vector<TypedEdge> interaction_edges;
  for (const Interaction& r : log.records()) {
    if (r.rating > 0.5) {
      interaction_edges.push_back(TypedEdge{NodeRef{NodeKind::kUser, r.user},
                                            NodeRef{NodeKind::kItem, r.item},
                                            RelationRegistry::kInteraction});
    }
  }
  std::sort(interaction_edges.begin(), interaction_edges.end());
  interaction_edges.erase(std::unique(interaction_edges.begin(), interaction_edges.end()),
                          interaction_edges.end());
  hin.edges_ = std::move(interaction_edges);

  auto add_side = [&](const AttributeTable& table, NodeKind owner_kind) {
    std::vector<TypedEdge> side = table.edges;
    std::sort(side.begin(), side.end());
    side.erase(std::unique(side.begin(), side.end()), side.end());
    for (const TypedEdge& e : side) {
      if (e.src.kind != owner_kind || e.dst.kind != table.kind) {
        throw Error(ErrorCode::kReference,
                    fmt::format("attribute edge {}->{} has wrong endpoint kinds",
                                to_string(e.src.kind), to_string(e.dst.kind)));
      }
      if (!hin.contains(e.src) || !hin.contains(e.dst)) {
        throw Error(ErrorCode::kReference,
                    fmt::format("dangling attribute edge {}:{} -> {}:{}",
                                to_string(e.src.kind), e.src.id,
                                to_string(e.dst.kind), e.dst.id));
      }
      if (!hin.relations_.contains(e.relation) ||
          e.relation == RelationRegistry::kInteraction) {
        throw Error(ErrorCode::kReference,
                    fmt::format("attribute edge uses unregistered relation {}",
                                e.relation));
      }
      hin.edges_.push_back(e);
    }
  };
  add_side(user_attributes, NodeKind::kUser);
  add_side(item_attributes, NodeKind::kItem);

  for (const TypedEdge& e : hin.edges_) {
    if (e.src == e.dst) throw Error(ErrorCode::kReference, "self loop");
  }

  // Build CSR adjacency indexed from both endpoints.
  const std::size_t total = hin.num_nodes();
  std::vector<std::vector<std::pair<RelationId, NodeRef>>> adjacency(total);
  for (const TypedEdge& e : hin.edges_) {
    adjacency[hin.global_index(e.src)].emplace_back(e.relation, e.dst);
    adjacency[hin.global_index(e.dst)].emplace_back(e.relation, e.src);
  }
  hin.row_begin_.assign(total + 1, 0);
  for (std::size_t i = 0; i < total; ++i) {
    auto& row = adjacency[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    hin.row_begin_[i + 1] = hin.row_begin_[i] + row.size();
  }
  hin.adj_relation_.reserve(hin.row_begin_[total]);
  hin.adj_node_.reserve(hin.row_begin_[total]);
  for (const auto& row : adjacency) {
    for (const auto& [rel, node] : row) {
      hin.adj_relation_.push_back(rel);
      hin.adj_node_.push_back(node);
    }
  }

  if (hin.num_kinds_present() + hin.num_relations_present() <= 2) {
    throw Error(ErrorCode::kHeterogeneity,
                fmt::format("graph has {} node kinds and {} edge types; "
                            "heterogeneity needs more than 2 in total",
                            hin.num_kinds_present(), hin.num_relations_present()));
  }
  return hin;
}

std::size_t Hin::num_nodes() const { return offsets_[kNumNodeKinds]; }

bool Hin::contains(NodeRef node) const {
  return kind_index(node.kind) < kNumNodeKinds && node.id < counts_[kind_index(node.kind)];
}

void Hin::check_node(NodeRef node) const {
  if (!contains(node)) {
    throw Error(ErrorCode::kReference,
                fmt::format("unknown node {}:{}", to_string(node.kind), node.id));
  }
}

NodeRef Hin::node_at(std::size_t global) const {
  for (std::size_t k = 0; k < kNumNodeKinds; ++k) {
    if (global < offsets_[k + 1]) {
      return NodeRef{static_cast<NodeKind>(k), static_cast<Index>(global - offsets_[k])};
    }
  }
  throw Error(ErrorCode::kReference, fmt::format("global index {} out of range", global));
}

std::span<const NodeRef> Hin::neighbors(NodeRef node, RelationId relation) const {
  check_node(node);
  const std::size_t g = global_index(node);
  auto first = adj_relation_.begin() + static_cast<std::ptrdiff_t>(row_begin_[g]);
  auto last = adj_relation_.begin() + static_cast<std::ptrdiff_t>(row_begin_[g + 1]);
  auto [lo, hi] = std::equal_range(first, last, relation);
  const auto offset = static_cast<std::size_t>(lo - adj_relation_.begin());
  const auto count = static_cast<std::size_t>(hi - lo);
  return std::span<const NodeRef>(adj_node_.data() + offset, count);
}

bool Hin::has_edge(NodeRef a, RelationId relation, NodeRef b) const {
  auto nbrs = neighbors(a, relation);
  return std::binary_search(nbrs.begin(), nbrs.end(), b);
}

bool Hin::adjacent(NodeRef a, NodeRef b) const {
  check_node(a);
  const std::size_t g = global_index(a);
  for (std::size_t i = row_begin_[g]; i < row_begin_[g + 1]; ++i) {
    if (adj_node_[i] == b) return true;
  }
  return false;
}

std::vector<NodeRef> Hin::attributes_of(NodeRef node) const {
  check_node(node);
  std::vector<NodeRef> out;
  const std::size_t g = global_index(node);
  for (std::size_t i = row_begin_[g]; i < row_begin_[g + 1]; ++i) {
    if (is_attribute(adj_node_[i].kind)) out.push_back(adj_node_[i]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t Hin::degree(NodeRef node) const {
  check_node(node);
  const std::size_t g = global_index(node);
  return row_begin_[g + 1] - row_begin_[g];
}

std::size_t Hin::num_kinds_present() const {
  return static_cast<std::size_t>(
      std::count_if(std::begin(counts_), std::end(counts_), [](std::size_t c) { return c > 0; }));
}

std::size_t Hin::num_relations_present() const {
  std::vector<bool> seen(relations_.size(), false);
  for (const TypedEdge& e : edges_) seen[e.relation] = true;
  return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
}

void Hin::serialize(std::ostream& out) const {
  out << "# fairex-hin v1\n";
  for (NodeKind kind : kAllNodeKinds) {
    out << "nodes\t" << to_string(kind) << '\t' << num_nodes(kind) << '\n';
  }
  for (std::size_t r = 0; r < relations_.size(); ++r) {
    out << "relation\t" << r << '\t' << relations_.name(static_cast<RelationId>(r)) << '\n';
  }
  for (const TypedEdge& e : edges_) {
    out << "edge\t" << to_string(e.src.kind) << '\t' << e.src.id << '\t'
        << to_string(e.dst.kind) << '\t' << e.dst.id << '\t' << e.relation << '\n';
  }
}

std::vector<NodeRef> all_attributes(const Hin& hin) {
  std::vector<NodeRef> out;
  for (NodeKind kind : {NodeKind::kUserAttribute, NodeKind::kItemAttribute}) {
    for (Index i = 0; i < hin.num_nodes(kind); ++i) out.push_back(NodeRef{kind, i});
  }
  return out;
}

Hin DatasetBundle::build_hin() const {
  return Hin::build(split.train, user_attributes, item_attributes, relations);
}

}  // namespace fairex
