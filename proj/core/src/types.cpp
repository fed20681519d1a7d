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

#include "fairex/types.hpp"

#include <fmt/format.h>

#include "fairex/error.hpp"

namespace fairex {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::kUser: return "user";
    case NodeKind::kItem: return "item";
    case NodeKind::kUserAttribute: return "user_attribute";
    case NodeKind::kItemAttribute: return "item_attribute";
  }
  return "unknown";
}

NodeKind parse_node_kind(std::string_view name) {
  for (NodeKind kind : kAllNodeKinds) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::kParse, fmt::format("unknown node kind '{}'", name));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace fairex
