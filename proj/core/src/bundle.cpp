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

#include <fmt/format.h>

#include <fstream>
#include <map>
#include <sstream>

#include "fairex/error.hpp"
#include "fairex/hin.hpp"

namespace fairex {
namespace {

constexpr std::string_view kBundleFormat = "fairex-bundle";
constexpr int kBundleVersion = 1;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write '{}'", path.string()));
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open '{}'", path.string()));
  return in;
}

void write_attribute_file(const std::filesystem::path& path, const AttributeTable& table,
                          const RelationRegistry& relations) {
  auto out = open_out(path);
  out << "# node_id\tattribute_id\trelation\n";
  for (const TypedEdge& e : table.edges) {
    out << e.src.id << '\t' << e.dst.id << '\t' << relations.name(e.relation) << '\n';
  }
}

AttributeTable read_attribute_file(const std::filesystem::path& path, NodeKind kind,
                                   std::size_t num_attributes, std::size_t num_owners,
                                   const RelationRegistry& relations) {
  auto in = open_in(path);
  auto records = parse_attribute_edges(in);
  AttributeTable table;
  table.kind = kind;
  const NodeKind owner =
      kind == NodeKind::kUserAttribute ? NodeKind::kUser : NodeKind::kItem;
  for (const auto& r : records) {
    if (r.owner_label < 0 || static_cast<std::size_t>(r.owner_label) >= num_owners ||
        r.attribute_label < 0 ||
        static_cast<std::size_t>(r.attribute_label) >= num_attributes) {
      throw Error(ErrorCode::kReference,
                  fmt::format("'{}': edge {} -> {} out of range", path.string(),
                              r.owner_label, r.attribute_label));
    }
    table.edges.push_back(TypedEdge{NodeRef{owner, static_cast<Index>(r.owner_label)},
                                    NodeRef{kind, static_cast<Index>(r.attribute_label)},
                                    relations.find(r.relation)});
  }
  std::sort(table.edges.begin(), table.edges.end());
  table.labels.resize(num_attributes);
  return table;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(part);
  return out;
}

}  // namespace

void write_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle) {
  std::filesystem::create_directories(dir);
  const auto& split = bundle.split;
  {
    auto out = open_out(dir / "manifest.txt");
    out << "format=" << kBundleFormat << '\n';
    out << "version=" << kBundleVersion << '\n';
    out << "num_users=" << split.train.num_users() << '\n';
    out << "num_items=" << split.train.num_items() << '\n';
    out << "num_user_attributes=" << bundle.user_attributes.size() << '\n';
    out << "num_item_attributes=" << bundle.item_attributes.size() << '\n';
    out << "node_kinds=user,item,user_attribute,item_attribute\n";
    out << "relations=" << join(bundle.relations.names()) << '\n';
    out << "train_records=" << split.train.size() << '\n';
    out << "validation_records=" << split.validation.size() << '\n';
    out << "test_records=" << split.test.size() << '\n';
    out << fmt::format("split={},{},{}\n", split.fractions.train,
                       split.fractions.validation, split.fractions.test);
  }
  const std::pair<const char*, const InteractionLog*> parts[] = {
      {"train.tsv", &split.train},
      {"validation.tsv", &split.validation},
      {"test.tsv", &split.test}};
  for (const auto& [name, log] : parts) {
    auto out = open_out(dir / name);
    out << "# user_id\titem_id\trating\ttimestamp\n";
    write_interactions(out, *log);
  }
  write_attribute_file(dir / "user_attributes.tsv", bundle.user_attributes,
                       bundle.relations);
  write_attribute_file(dir / "item_attributes.tsv", bundle.item_attributes,
                       bundle.relations);
  {
    auto out = open_out(dir / "labels.tsv");
    out << "# kind\tdense_id\tlabel\n";
    const std::pair<NodeKind, const std::vector<std::int64_t>*> tables[] = {
        {NodeKind::kUser, &split.train.user_labels()},
        {NodeKind::kItem, &split.train.item_labels()},
        {NodeKind::kUserAttribute, &bundle.user_attributes.labels},
        {NodeKind::kItemAttribute, &bundle.item_attributes.labels}};
    for (const auto& [kind, labels] : tables) {
      for (std::size_t i = 0; i < labels->size(); ++i) {
        out << to_string(kind) << '\t' << i << '\t' << (*labels)[i] << '\n';
      }
    }
  }
}

DatasetBundle read_bundle(const std::filesystem::path& dir) {
  std::map<std::string, std::string> manifest;
  {
    auto in = open_in(dir / "manifest.txt");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::kFormat, fmt::format("manifest line '{}'", line));
      }
      manifest[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = manifest.find(key);
    if (it == manifest.end()) {
      throw Error(ErrorCode::kFormat, fmt::format("manifest lacks '{}'", key));
    }
    return it->second;
  };
  if (get("format") != kBundleFormat || std::stoi(get("version")) != kBundleVersion) {
    throw Error(ErrorCode::kFormat, "unsupported bundle format or version");
  }
  const std::size_t num_users = std::stoull(get("num_users"));
  const std::size_t num_items = std::stoull(get("num_items"));
  const std::size_t num_user_attrs = std::stoull(get("num_user_attributes"));
  const std::size_t num_item_attrs = std::stoull(get("num_item_attributes"));

  DatasetBundle bundle;
  auto names = split_commas(get("relations"));
  if (names.empty() || names[0] != RelationRegistry::kInteractionName) {
    throw Error(ErrorCode::kFormat, "relation registry must start with 'interacts'");
  }
  for (std::size_t i = 1; i < names.size(); ++i) bundle.relations.intern(names[i]);

  std::vector<std::int64_t> labels[kNumNodeKinds];
  labels[kind_index(NodeKind::kUser)].resize(num_users);
  labels[kind_index(NodeKind::kItem)].resize(num_items);
  labels[kind_index(NodeKind::kUserAttribute)].resize(num_user_attrs);
  labels[kind_index(NodeKind::kItemAttribute)].resize(num_item_attrs);
  {
    auto in = open_in(dir / "labels.tsv");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::stringstream ss(line);
      std::string kind;
      std::size_t id = 0;
      std::int64_t label = 0;
      if (!(ss >> kind >> id >> label)) {
        throw Error(ErrorCode::kFormat, fmt::format("labels line '{}'", line));
      }
      auto& table = labels[kind_index(parse_node_kind(kind))];
      if (id >= table.size()) throw Error(ErrorCode::kFormat, "label id out of range");
      table[id] = label;
    }
  }

  LoadOptions options;
  options.mapping = IdMapping::kDense;
  options.num_users = num_users;
  options.num_items = num_items;
  options.allow_empty = true;
  auto read_part = [&](const char* name) {
    auto log = load_interactions(dir / name, options);
    return InteractionLog(num_users, num_items, log.records(),
                          labels[kind_index(NodeKind::kUser)],
                          labels[kind_index(NodeKind::kItem)]);
  };
  bundle.split.train = read_part("train.tsv");
  bundle.split.validation = read_part("validation.tsv");
  bundle.split.test = read_part("test.tsv");
  auto fractions = split_commas(get("split"));
  if (fractions.size() == 3) {
    bundle.split.fractions = {std::stod(fractions[0]), std::stod(fractions[1]),
                              std::stod(fractions[2])};
  }

  bundle.user_attributes =
      read_attribute_file(dir / "user_attributes.tsv", NodeKind::kUserAttribute,
                          num_user_attrs, num_users, bundle.relations);
  bundle.user_attributes.labels = labels[kind_index(NodeKind::kUserAttribute)];
  bundle.item_attributes =
      read_attribute_file(dir / "item_attributes.tsv", NodeKind::kItemAttribute,
                          num_item_attrs, num_items, bundle.relations);
  bundle.item_attributes.labels = labels[kind_index(NodeKind::kItemAttribute)];
  return bundle;
}

}  // namespace fairex
