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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fairex/types.hpp"

namespace fairex {

// One (user, item, rating, timestamp) record. User and item are dense
// indices into the owning log.
struct Interaction {
  Index user = 0;
  Index item = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;

  bool operator==(const Interaction&) const = default;
};

// Timestamped interaction records over M users and N items. Each dense
// index keeps the external integer label it was read with.
class InteractionLog {
 public:
  InteractionLog() = default;
  // Labels default to the identity mapping when empty.
  InteractionLog(std::size_t num_users, std::size_t num_items,
                 std::vector<Interaction> records,
                 std::vector<std::int64_t> user_labels = {},
                 std::vector<std::int64_t> item_labels = {});

  const std::vector<Interaction>& records() const { return records_; }
  std::size_t num_users() const { return num_users_; }
  std::size_t num_items() const { return num_items_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const std::vector<std::int64_t>& user_labels() const { return user_labels_; }
  const std::vector<std::int64_t>& item_labels() const { return item_labels_; }

  // Same users, items and labels with a different record set.
  InteractionLog with_records(std::vector<Interaction> records) const;

  std::size_t count_positive(double threshold = 0.5) const;

 private:
  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::vector<Interaction> records_;
  std::vector<std::int64_t> user_labels_;
  std::vector<std::int64_t> item_labels_;
};

enum class IdMapping {
  // External ids are remapped to dense indices in ascending label order.
  kRemap,
  // Ids are already dense indices below the given counts.
  kDense,
};

struct LoadOptions {
  char delimiter = '\t';
  IdMapping mapping = IdMapping::kRemap;
  std::size_t num_users = 0;  // kDense only
  std::size_t num_items = 0;  // kDense only
  bool allow_empty = false;
};

// Reads `user item rating timestamp` lines; `#` lines and blank lines are
// skipped. Duplicate (user, item) pairs keep the latest timestamp (the later
// line on equal timestamps). Output records are sorted by (user, item).
InteractionLog parse_interactions(std::istream& in, const LoadOptions& options = {});
InteractionLog load_interactions(const std::filesystem::path& path,
                                 const LoadOptions& options = {});
void write_interactions(std::ostream& out, const InteractionLog& log);

// Ratings >= threshold become 1, everything else 0. Negatives are kept.
InteractionLog binarize(const InteractionLog& log, double threshold);

// Peels users and items with fewer than k positive interactions until the
// fixpoint. Records touching a removed user or item are dropped; counts and
// labels are unchanged. Throws kEmptyCore when nothing survives.
InteractionLog apply_k_core(const InteractionLog& log, std::size_t k);

// Drops users and items that no record references and renumbers the rest
// densely, preserving label order.
InteractionLog compact(const InteractionLog& log);

struct SplitFractions {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

struct SplitLog {
  InteractionLog train;
  InteractionLog validation;
  InteractionLog test;
  SplitFractions fractions;
};

// Per user and in (timestamp, item) order: the first ceil(train * n) records
// go to train, the next ceil(validation * n) to validation, the rest to test.
SplitLog chronological_split(const InteractionLog& log,
                             const SplitFractions& fractions = {});

// Names of edge types. Id 0 is always the user-item interaction relation.
class RelationRegistry {
 public:
  static constexpr RelationId kInteraction = 0;
  static constexpr std::string_view kInteractionName = "interacts";

  RelationRegistry();

  RelationId intern(std::string_view name);
  RelationId find(std::string_view name) const;  // throws kReference
  bool contains(RelationId id) const { return id < names_.size(); }
  const std::string& name(RelationId id) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const RelationRegistry&) const = default;

 private:
  std::vector<std::string> names_;
};

struct TypedEdge {
  NodeRef src;
  NodeRef dst;
  RelationId relation = 0;

  auto operator<=>(const TypedEdge&) const = default;
};

// One raw line of an attribute-edge file.
struct AttributeEdgeRecord {
  std::int64_t owner_label = 0;
  std::int64_t attribute_label = 0;
  std::string relation;
};

std::vector<AttributeEdgeRecord> parse_attribute_edges(std::istream& in,
                                                       char delimiter = '\t');
std::vector<AttributeEdgeRecord> load_attribute_edges(
    const std::filesystem::path& path, char delimiter = '\t');

// Attribute nodes of one side (user or item) and their owner edges.
struct AttributeTable {
  NodeKind kind = NodeKind::kUserAttribute;
  std::vector<std::int64_t> labels;  // dense attribute id -> external label
  std::vector<TypedEdge> edges;      // owner -> attribute, sorted

  std::size_t size() const { return labels.size(); }
};

struct ResolvedAttributes {
  AttributeTable table;
  std::size_t dropped = 0;  // records whose owner label is unknown
};

// Maps owner labels through `owner_labels` (dense index = position) and
// attribute labels to dense ids in ascending order. Relations are interned
// in ascending name order.
ResolvedAttributes resolve_attribute_edges(
    std::span<const AttributeEdgeRecord> records, NodeKind attribute_kind,
    std::span<const std::int64_t> owner_labels, RelationRegistry& relations);

// Typed heterogeneous graph over users, items and their attributes. Every
// edge is indexed from both endpoints; neighbor lists are sorted ascending.
class Hin {
 public:
  // Interaction edges come from records with rating 1 (> 0.5). Throws
  // kReference on dangling endpoints or self loops and kHeterogeneity when
  // node kinds plus edge types present do not exceed two.
  static Hin build(const InteractionLog& log, const AttributeTable& user_attributes,
                   const AttributeTable& item_attributes,
                   RelationRegistry relations);

  std::size_t num_nodes(NodeKind kind) const { return counts_[kind_index(kind)]; }
  std::size_t num_nodes() const;
  bool contains(NodeRef node) const;

  const std::vector<TypedEdge>& edges() const { return edges_; }
  const RelationRegistry& relations() const { return relations_; }

  // Throws kReference for an unknown node; empty for an unknown relation.
  std::span<const NodeRef> neighbors(NodeRef node, RelationId relation) const;
  bool has_edge(NodeRef a, RelationId relation, NodeRef b) const;
  bool adjacent(NodeRef a, NodeRef b) const;
  // All attribute neighbors of a user or item, ascending.
  std::vector<NodeRef> attributes_of(NodeRef node) const;
  std::size_t degree(NodeRef node) const;

  std::size_t num_kinds_present() const;
  std::size_t num_relations_present() const;

  // Dense position of a node across all kinds.
  std::size_t global_index(NodeRef node) const {
    return offsets_[kind_index(node.kind)] + node.id;
  }
  NodeRef node_at(std::size_t global) const;

  const std::vector<std::int64_t>& labels(NodeKind kind) const {
    return labels_[kind_index(kind)];
  }

  // Line-oriented dump used for determinism checks and inspection.
  void serialize(std::ostream& out) const;

 private:
  Hin() = default;
  void check_node(NodeRef node) const;

  std::size_t counts_[kNumNodeKinds] = {0, 0, 0, 0};
  std::size_t offsets_[kNumNodeKinds + 1] = {0, 0, 0, 0, 0};
  std::vector<std::int64_t> labels_[kNumNodeKinds];
  RelationRegistry relations_;
  std::vector<TypedEdge> edges_;
  // CSR adjacency sorted by (relation, neighbor).
  std::vector<std::size_t> row_begin_;
  std::vector<RelationId> adj_relation_;
  std::vector<NodeRef> adj_node_;
};

std::vector<NodeRef> all_attributes(const Hin& hin);

// Dataset bundle: one directory holding the split interaction files, both
// attribute-edge files, external labels and a key=value manifest.
struct DatasetBundle {
  SplitLog split;
  AttributeTable user_attributes{NodeKind::kUserAttribute, {}, {}};
  AttributeTable item_attributes{NodeKind::kItemAttribute, {}, {}};
  RelationRegistry relations;

  // Graph over the training interactions plus all attribute edges.
  Hin build_hin() const;
};

void write_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle);
DatasetBundle read_bundle(const std::filesystem::path& dir);

}  // namespace fairex
