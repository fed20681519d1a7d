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
#include <fstream>
#include <random>
#include <string>

#include "fairex/cfe.hpp"
#include "fairex/fairness.hpp"
#include "fairex/graphrep.hpp"
#include "fairex/hin.hpp"
#include "fairex/recsys.hpp"

namespace testing_support {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fairex_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline fairex::RowMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng,
                                       double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  fairex::RowMatrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Random log over m users and n items with ratings in {1..5}.
inline fairex::InteractionLog random_log(std::size_t m, std::size_t n, double density,
                                         std::mt19937_64& rng) {
  std::bernoulli_distribution keep(density);
  std::uniform_int_distribution<int> rating(1, 5);
  std::uniform_int_distribution<int> ts(0, 50);
  std::vector<fairex::Interaction> recs;
  for (fairex::Index u = 0; u < m; ++u)
    for (fairex::Index v = 0; v < n; ++v)
      if (keep(rng)) recs.push_back({u, v, static_cast<double>(rating(rng)), ts(rng)});
  return fairex::InteractionLog(m, n, std::move(recs));
}

// Binary log (ratings already 0/1) with random attribute tables.
struct Toy {
  fairex::InteractionLog log;
  fairex::AttributeTable users{fairex::NodeKind::kUserAttribute, {}, {}};
  fairex::AttributeTable items{fairex::NodeKind::kItemAttribute, {}, {}};
  fairex::RelationRegistry relations;

  fairex::Hin hin() const { return fairex::Hin::build(log, users, items, relations); }
};

inline Toy random_toy(std::size_t m, std::size_t n, std::size_t ua, std::size_t ia,
                      double density, std::mt19937_64& rng) {
  Toy t;
  std::bernoulli_distribution keep(density);
  std::vector<fairex::Interaction> recs;
  for (fairex::Index u = 0; u < m; ++u)
    for (fairex::Index v = 0; v < n; ++v)
      if (keep(rng)) recs.push_back({u, v, 1.0, static_cast<std::int64_t>(v)});
  t.log = fairex::InteractionLog(m, n, std::move(recs));
  const auto ru = t.relations.intern("has_user_feature");
  const auto ri = t.relations.intern("has_item_feature");
  t.users.labels.resize(ua);
  t.items.labels.resize(ia);
  for (std::size_t i = 0; i < ua; ++i) t.users.labels[i] = static_cast<std::int64_t>(i);
  for (std::size_t i = 0; i < ia; ++i) t.items.labels[i] = static_cast<std::int64_t>(i);
  std::bernoulli_distribution attach(0.3);
  using fairex::NodeKind;
  using fairex::NodeRef;
  for (fairex::Index u = 0; u < m; ++u)
    for (fairex::Index a = 0; a < ua; ++a)
      if (attach(rng)) t.users.edges.push_back({NodeRef{NodeKind::kUser, u}, NodeRef{NodeKind::kUserAttribute, a}, ru});
  for (fairex::Index v = 0; v < n; ++v)
    for (fairex::Index a = 0; a < ia; ++a)
      if (attach(rng)) t.items.edges.push_back({NodeRef{NodeKind::kItem, v}, NodeRef{NodeKind::kItemAttribute, a}, ri});
  return t;
}

}  // namespace testing_support

namespace testing_support {

// Toy graph with random factors and attribute embeddings of width d.
struct World {
  Toy toy;
  fairex::Hin hin;
  fairex::LatentFactors factors;
  fairex::EmbeddingTable embeddings;
  fairex::GroupSplit groups;
};

inline World random_world(std::size_t m, std::size_t n, std::size_t ua, std::size_t ia,
                          std::size_t d, std::uint64_t seed, double density = 0.3) {
  std::mt19937_64 rng(seed);
  Toy toy = random_toy(m, n, ua, ia, density, rng);
  fairex::Hin hin = toy.hin();
  fairex::LatentFactors f;
  f.user = random_matrix(m, d, rng);
  f.item = random_matrix(n, d, rng);
  auto emb = fairex::EmbeddingTable::zeros_like(hin, d);
  emb.values() = random_matrix(emb.size(), d, rng);
  auto groups = fairex::split_groups(toy.log);
  return World{std::move(toy), std::move(hin), std::move(f), std::move(emb), std::move(groups)};
}

}  // namespace testing_support
