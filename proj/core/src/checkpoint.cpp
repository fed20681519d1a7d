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

#include "fairex/checkpoint.hpp"

#include <fmt/format.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "fairex/error.hpp"

namespace fairex {
namespace {

constexpr char kTextMagic[] = "fairex-checkpoint";
constexpr char kBinaryMagic[4] = {'F', 'X', 'C', 'K'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorCode::kFormat, "truncated binary checkpoint");
  return value;
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > (1u << 24)) throw Error(ErrorCode::kFormat, "implausible string length");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw Error(ErrorCode::kFormat, "truncated binary checkpoint");
  return s;
}

Checkpoint read_binary(std::istream& in) {
  Checkpoint ck;
  const auto version = get<std::uint32_t>(in);
  if (version != Checkpoint::kVersion) {
    throw Error(ErrorCode::kFormat, fmt::format("unsupported checkpoint version {}", version));
  }
  ck.kind = get_string(in);
  const auto n_meta = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto key = get_string(in);
    auto value = get_string(in);
    ck.meta.emplace_back(std::move(key), std::move(value));
  }
  const auto n_blocks = get<std::uint32_t>(in);
  for (std::uint32_t b = 0; b < n_blocks; ++b) {
    auto name = get_string(in);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows * cols > (1ull << 32)) throw Error(ErrorCode::kFormat, "implausible block size");
    RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(rows * cols * sizeof(double)));
    if (!in) throw Error(ErrorCode::kFormat, "truncated binary checkpoint");
    ck.blocks.emplace_back(std::move(name), std::move(m));
  }
  return ck;
}

Checkpoint read_text(std::istream& in) {
  Checkpoint ck;
  std::string line;
  std::getline(in, line);
  {
    std::stringstream ss(line);
    std::string magic;
    int version = 0;
    ss >> magic >> version;
    if (magic != kTextMagic || version != Checkpoint::kVersion) {
      throw Error(ErrorCode::kFormat, "bad text checkpoint header");
    }
  }
  bool ended = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == "end") {
      ended = true;
      break;
    }
    if (line.rfind("kind=", 0) == 0) {
      ck.kind = line.substr(5);
    } else if (line.rfind("meta ", 0) == 0) {
      auto body = line.substr(5);
      auto eq = body.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::kFormat, "bad meta line");
      ck.meta.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else if (line.rfind("block ", 0) == 0) {
      std::stringstream ss(line.substr(6));
      std::string name;
      long long rows = -1, cols = -1;
      if (!(ss >> name >> rows >> cols) || rows < 0 || cols < 0) {
        throw Error(ErrorCode::kFormat, "bad block header");
      }
      RowMatrix m(rows, cols);
      for (long long r = 0; r < rows; ++r) {
        for (long long c = 0; c < cols; ++c) {
          if (!(in >> m(r, c))) throw Error(ErrorCode::kFormat, "truncated text block");
        }
      }
      std::getline(in, line);  // rest of the last row
      ck.blocks.emplace_back(std::move(name), std::move(m));
    } else {
      throw Error(ErrorCode::kFormat, fmt::format("unexpected line '{}'", line));
    }
  }
  if (!ended) throw Error(ErrorCode::kFormat, "text checkpoint lacks 'end'");
  return ck;
}

}  // namespace

void Checkpoint::set_meta(const std::string& key, const std::string& value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta.emplace_back(key, value);
}

const std::string& Checkpoint::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  throw Error(ErrorCode::kFormat, fmt::format("checkpoint lacks meta '{}'", key));
}

void Checkpoint::add_block(const std::string& name, RowMatrix matrix) {
  blocks.emplace_back(name, std::move(matrix));
}

const RowMatrix& Checkpoint::block(const std::string& name) const {
  for (const auto& [n, m] : blocks) {
    if (n == name) return m;
  }
  throw Error(ErrorCode::kFormat, fmt::format("checkpoint lacks block '{}'", name));
}

bool Checkpoint::has_block(const std::string& name) const {
  for (const auto& [n, m] : blocks) {
    if (n == name) return true;
  }
  return false;
}

CheckpointFormat parse_checkpoint_format(const std::string& name) {
  if (name == "text") return CheckpointFormat::kText;
  if (name == "binary") return CheckpointFormat::kBinary;
  throw Error(ErrorCode::kConfig, fmt::format("unknown checkpoint format '{}'", name));
}

void write_checkpoint(std::ostream& out, const Checkpoint& ck, CheckpointFormat format) {
  if (format == CheckpointFormat::kBinary) {
    out.write(kBinaryMagic, 4);
    put<std::uint32_t>(out, Checkpoint::kVersion);
    put_string(out, ck.kind);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ck.meta.size()));
    for (const auto& [k, v] : ck.meta) {
      put_string(out, k);
      put_string(out, v);
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ck.blocks.size()));
    for (const auto& [name, m] : ck.blocks) {
      put_string(out, name);
      put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
      put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
      out.write(reinterpret_cast<const char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
    }
    return;
  }
  out << kTextMagic << ' ' << Checkpoint::kVersion << '\n';
  out << "kind=" << ck.kind << '\n';
  for (const auto& [k, v] : ck.meta) out << "meta " << k << '=' << v << '\n';
  for (const auto& [name, m] : ck.blocks) {
    out << "block " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      std::string row;
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c) row += ' ';
        row += fmt::format("{:.17g}", m(r, c));
      }
      out << row << '\n';
    }
  }
  out << "end\n";
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck,
                      CheckpointFormat format) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write '{}'", path.string()));
  write_checkpoint(out, ck, format);
}

Checkpoint read_checkpoint(std::istream& in) {
  char head[4] = {0, 0, 0, 0};
  in.read(head, 4);
  if (!in) throw Error(ErrorCode::kFormat, "empty checkpoint");
  if (std::memcmp(head, kBinaryMagic, 4) == 0) return read_binary(in);
  std::string rest;
  std::getline(in, rest);
  std::stringstream text;
  text << std::string(head, 4) << rest << '\n' << in.rdbuf();
  return read_text(text);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open '{}'", path.string()));
  return read_checkpoint(in);
}

}  // namespace fairex
