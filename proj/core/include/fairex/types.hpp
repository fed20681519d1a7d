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

#include <Eigen/Core>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace fairex {

using Index = std::uint32_t;
inline constexpr Index kInvalidIndex = static_cast<Index>(-1);

using Vector = Eigen::VectorXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Rng = std::mt19937_64;

enum class NodeKind : std::uint8_t {
  kUser = 0,
  kItem = 1,
  kUserAttribute = 2,
  kItemAttribute = 3,
};
inline constexpr std::size_t kNumNodeKinds = 4;

inline constexpr NodeKind kAllNodeKinds[kNumNodeKinds] = {
    NodeKind::kUser, NodeKind::kItem, NodeKind::kUserAttribute,
    NodeKind::kItemAttribute};

constexpr std::size_t kind_index(NodeKind kind) {
  return static_cast<std::size_t>(kind);
}
constexpr bool is_attribute(NodeKind kind) {
  return kind == NodeKind::kUserAttribute || kind == NodeKind::kItemAttribute;
}

std::string_view to_string(NodeKind kind);
NodeKind parse_node_kind(std::string_view name);

// A node of the heterogeneous graph: dense id within its kind.
struct NodeRef {
  NodeKind kind = NodeKind::kUser;
  Index id = 0;

  auto operator<=>(const NodeRef&) const = default;
};

using RelationId = std::uint16_t;

// Mixes a seed with a stream tag so independent components draw from
// independent generators.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace fairex
