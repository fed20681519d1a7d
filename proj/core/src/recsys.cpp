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

#include "fairex/recsys.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairex/error.hpp"

namespace fairex {
namespace {

constexpr std::uint64_t kInitStream = 0x1001;
constexpr std::uint64_t kSampleStream = 0x1002;

void check_user(const LatentFactors& f, Index user) {
  if (user >= f.num_users()) {
    throw Error(ErrorCode::kReference,
                fmt::format("user {} out of range (M={})", user, f.num_users()));
  }
}

void check_item(const LatentFactors& f, Index item) {
  if (item >= f.num_items()) {
    throw Error(ErrorCode::kReference,
                fmt::format("item {} out of range (N={})", item, f.num_items()));
  }
}

void check_embedding(const LatentFactors& f, const Vector& e) {
  if (static_cast<std::size_t>(e.size()) != f.dim()) {
    throw Error(ErrorCode::kShape,
                fmt::format("embedding has {} coordinates, factors have {}", e.size(),
                            f.dim()));
  }
}

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double pair_loss(double score, double label) {
  // -y log s(x) - (1-y) log(1 - s(x))
  return label * softplus(-score) + (1.0 - label) * softplus(score);
}

}  // namespace

bool LatentFactors::operator==(const LatentFactors& other) const {
  return seed == other.seed && user.rows() == other.user.rows() &&
         user.cols() == other.user.cols() && item.rows() == other.item.rows() &&
         item.cols() == other.item.cols() && user == other.user && item == other.item;
}

void TrainConfig::validate() const {
  if (dim == 0) throw Error(ErrorCode::kConfig, "recommender dimension must be positive");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kConfig, "learning rate must be positive");
  }
  if (!(l2 >= 0) || !std::isfinite(l2)) {
    throw Error(ErrorCode::kConfig, "l2 weight must be non-negative");
  }
}

LatentFactors init_factors(std::size_t num_users, std::size_t num_items, std::size_t dim,
                           std::uint64_t seed) {
  Rng rng(derive_seed(seed, kInitStream));
  std::uniform_real_distribution<double> dist(-0.01, 0.01);
  LatentFactors f;
  f.seed = seed;
  f.user.resize(static_cast<Eigen::Index>(num_users), static_cast<Eigen::Index>(dim));
  f.item.resize(static_cast<Eigen::Index>(num_items), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < f.user.size(); ++i) f.user.data()[i] = dist(rng);
  for (Eigen::Index i = 0; i < f.item.size(); ++i) f.item.data()[i] = dist(rng);
  return f;
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double predict_score(const LatentFactors& factors, Index user, Index item) {
  check_user(factors, user);
  check_item(factors, item);
  return factors.user.row(user).dot(factors.item.row(item));
}

double mf_loss(const LatentFactors& factors, std::span<const LabeledPair> pairs, double l2) {
  double loss = 0.0;
  for (const auto& p : pairs) loss += pair_loss(predict_score(factors, p.user, p.item), p.label);
  loss += 0.5 * l2 * (factors.user.squaredNorm() + factors.item.squaredNorm());
  return loss;
}

void mf_loss_gradient(const LatentFactors& factors, std::span<const LabeledPair> pairs,
                      double l2, RowMatrix& grad_user, RowMatrix& grad_item) {
  grad_user = l2 * factors.user;
  grad_item = l2 * factors.item;
  for (const auto& p : pairs) {
    const double g = logistic(predict_score(factors, p.user, p.item)) - p.label;
    grad_user.row(p.user) += g * factors.item.row(p.item);
    grad_item.row(p.item) += g * factors.user.row(p.user);
  }
}

std::vector<std::vector<Index>> items_by_user(const InteractionLog& log,
                                              bool positives_only) {
  std::vector<std::vector<Index>> out(log.num_users());
  for (const auto& r : log.records()) {
    if (positives_only && !(r.rating > 0.5)) continue;
    out[r.user].push_back(r.item);
  }
  for (auto& items : out) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }
  return out;
}

LatentFactors train_mf(const InteractionLog& train, const TrainConfig& config,
                       TrainReport* report) {
  config.validate();
  if (train.empty()) throw Error(ErrorCode::kEmptyInput, "training log is empty");
  LatentFactors f = init_factors(train.num_users(), train.num_items(), config.dim, config.seed);
  if (report) report->epoch_loss.clear();
  if (config.epochs == 0) return f;

  const auto seen = items_by_user(train, false);
  Rng rng(derive_seed(config.seed, kSampleStream));
  std::uniform_int_distribution<Index> pick_item(0, static_cast<Index>(train.num_items() - 1));

  std::vector<LabeledPair> examples;
  examples.reserve(train.size() * (1 + config.negative_ratio));
  Vector u_old(static_cast<Eigen::Index>(config.dim));
  const double lr = config.learning_rate;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    examples.clear();
    for (const auto& r : train.records()) {
      const double label = r.rating > 0.5 ? 1.0 : 0.0;
      examples.push_back({r.user, r.item, label});
      if (label == 0.0) continue;
      const auto& mine = seen[r.user];
      if (mine.size() >= train.num_items()) continue;
      for (std::size_t s = 0; s < config.negative_ratio; ++s) {
        Index v = pick_item(rng);
        while (std::binary_search(mine.begin(), mine.end(), v)) v = pick_item(rng);
        examples.push_back({r.user, v, 0.0});
      }
    }
    std::shuffle(examples.begin(), examples.end(), rng);

    double total = 0.0;
    for (const auto& p : examples) {
      auto urow = f.user.row(p.user);
      auto vrow = f.item.row(p.item);
      const double score = urow.dot(vrow);
      total += pair_loss(score, p.label);
      const double g = logistic(score) - p.label;
      u_old = urow.transpose();
      urow -= lr * (g * vrow + config.l2 * urow);
      vrow -= lr * (g * u_old.transpose() + config.l2 * vrow);
    }
    const double mean = total / static_cast<double>(examples.size());
    if (!std::isfinite(mean) || !f.user.allFinite() || !f.item.allFinite()) {
      throw Error(ErrorCode::kTraining,
                  fmt::format("matrix factorization diverged at epoch {}", epoch + 1));
    }
    if (report) report->epoch_loss.push_back(mean);
  }
  return f;
}

RecList top_k_from_scores(Index user, const Vector& scores, std::size_t k,
                          std::span<const Index> exclude) {
  if (k == 0) throw Error(ErrorCode::kConfig, "top-k list length must be at least 1");
  const auto n = static_cast<std::size_t>(scores.size());
  std::vector<char> banned(n, 0);
  std::size_t num_banned = 0;
  for (Index v : exclude) {
    if (v < n && !banned[v]) {
      banned[v] = 1;
      ++num_banned;
    }
  }
  if (k > n - num_banned) {
    throw Error(ErrorCode::kCapacity,
                fmt::format("cannot rank {} items: only {} of {} remain after exclusion", k,
                            n - num_banned, n));
  }
  std::vector<Index> candidates;
  candidates.reserve(n - num_banned);
  for (Index v = 0; v < n; ++v) {
    if (!banned[v]) candidates.push_back(v);
  }
  auto better = [&](Index a, Index b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end(), better);
  RecList out;
  out.user = user;
  out.items.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k));
  out.scores.reserve(k);
  for (Index v : out.items) out.scores.push_back(scores[v]);
  return out;
}

RecList top_k(const LatentFactors& factors, Index user, std::size_t k,
              std::span<const Index> exclude) {
  check_user(factors, user);
  const Vector scores = factors.item * factors.user.row(user).transpose();
  return top_k_from_scores(user, scores, k, exclude);
}

FusionSide fusion_side(NodeKind attribute_kind) {
  if (attribute_kind == NodeKind::kUserAttribute) return FusionSide::kUser;
  if (attribute_kind == NodeKind::kItemAttribute) return FusionSide::kItem;
  throw Error(ErrorCode::kReference,
              fmt::format("'{}' nodes are not attributes", to_string(attribute_kind)));
}

LatentFactors fuse(const LatentFactors& factors, Index user, const RecList& recs,
                   const Vector& embedding, FusionSide side) {
  check_user(factors, user);
  check_embedding(factors, embedding);
  LatentFactors out = factors;
  if (side == FusionSide::kUser) {
    out.user.row(user).array() *= embedding.transpose().array();
  } else {
    for (Index v : recs.items) {
      check_item(factors, v);
      out.item.row(v).array() *= embedding.transpose().array();
    }
  }
  return out;
}

FusedFactors::FusedFactors(const LatentFactors& base, Index user)
    : base_(&base), user_(user) {
  check_user(base, user);
  user_row_ = base.user.row(user).transpose();
}

void FusedFactors::fuse(const RecList& recs, const Vector& embedding, FusionSide side) {
  check_embedding(*base_, embedding);
  if (side == FusionSide::kUser) {
    user_row_.array() *= embedding.array();
    return;
  }
  for (Index v : recs.items) {
    check_item(*base_, v);
    auto it = items_.find(v);
    if (it == items_.end()) {
      it = items_.emplace(v, base_->item.row(v).transpose()).first;
    }
    it->second.array() *= embedding.array();
  }
}

Vector FusedFactors::item_row(Index item) const {
  auto it = items_.find(item);
  if (it != items_.end()) return it->second;
  check_item(*base_, item);
  return base_->item.row(item).transpose();
}

Vector FusedFactors::scores() const {
  Vector s = base_->item * user_row_;
  for (const auto& [v, row] : items_) s[v] = row.dot(user_row_);
  return s;
}

RecList FusedFactors::top_k(std::size_t k, std::span<const Index> exclude) const {
  return top_k_from_scores(user_, scores(), k, exclude);
}

Checkpoint factors_to_checkpoint(const LatentFactors& factors) {
  Checkpoint ck;
  ck.kind = "latent_factors";
  ck.set_meta("M", std::to_string(factors.num_users()));
  ck.set_meta("N", std::to_string(factors.num_items()));
  ck.set_meta("d", std::to_string(factors.dim()));
  ck.set_meta("seed", std::to_string(factors.seed));
  ck.add_block("U", factors.user);
  ck.add_block("V", factors.item);
  return ck;
}

LatentFactors factors_from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != "latent_factors") {
    throw Error(ErrorCode::kFormat,
                fmt::format("expected a latent_factors checkpoint, got '{}'", ck.kind));
  }
  LatentFactors f;
  f.user = ck.block("U");
  f.item = ck.block("V");
  f.seed = std::stoull(ck.meta_value("seed"));
  const auto m = std::stoull(ck.meta_value("M"));
  const auto n = std::stoull(ck.meta_value("N"));
  const auto d = std::stoull(ck.meta_value("d"));
  if (f.num_users() != m || f.num_items() != n || f.dim() != d ||
      static_cast<std::size_t>(f.item.cols()) != d) {
    throw Error(ErrorCode::kFormat, "latent factor blocks disagree with the header");
  }
  return f;
}

}  // namespace fairex
