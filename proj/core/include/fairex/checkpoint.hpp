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
#include <string>
#include <utility>
#include <vector>

#include "fairex/types.hpp"

namespace fairex {

// Versioned container for named row-major matrices plus ordered key=value
// metadata. Factor, embedding and policy checkpoints all use it.
//
// Text layout (version 1):
//   fairex-checkpoint 1
//   kind=<kind>
//   meta <key>=<value>        (zero or more)
//   block <name> <rows> <cols>
//   <rows lines of cols values, %.17g, space separated>
//   end
//
// Binary layout (version 1, little-endian):
//   "FXCK" u32 version
//   str kind, u32 n_meta, n_meta x (str key, str value)
//   u32 n_blocks, n_blocks x (str name, u64 rows, u64 cols, rows*cols f64)
// where str is a u32 byte length followed by the bytes.
struct Checkpoint {
  static constexpr int kVersion = 1;

  std::string kind;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, RowMatrix>> blocks;

  void set_meta(const std::string& key, const std::string& value);
  const std::string& meta_value(const std::string& key) const;  // throws kFormat
  void add_block(const std::string& name, RowMatrix matrix);
  const RowMatrix& block(const std::string& name) const;  // throws kFormat
  bool has_block(const std::string& name) const;
};

enum class CheckpointFormat { kText, kBinary };

CheckpointFormat parse_checkpoint_format(const std::string& name);

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint,
                      CheckpointFormat format);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint,
                      CheckpointFormat format);
// Detects the variant from the leading bytes.
Checkpoint read_checkpoint(std::istream& in);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace fairex
