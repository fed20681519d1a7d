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

#include <span>
#include <unordered_map>
#include <vector>

#include "fairex/checkpoint.hpp"
#include "fairex/hin.hpp"
#include "fairex/types.hpp"

namespace fairex {

// Matrix-factorization user and item factors, one row per user/item.
struct LatentFactors {
  RowMatrix user;  // M x d
  RowMatrix item;  // N x d
  std::uint64_t seed = 0;

  std::size_t dim() const { return static_cast<std::size_t>(user.cols()); }
  std::size_t num_users() const { return static_cast<std::size_t>(user.rows()); }
  std::size_t num_items() const { return static_cast<std::size_t>(item.rows()); }

  bool operator==(const LatentFactors& other) const;
};

struct TrainConfig {
  std::size_t dim = 128;
  double learning_rate = 0.05;
  double l2 = 1e-4;
  std::size_t epochs = 30;
  std::size_t negative_ratio = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean cross-entropy per example
};

// Uniform(-0.01, 0.01) initialization drawn from the seed.
LatentFactors init_factors(std::size_t num_users, std::size_t num_items, std::size_t dim,
                           std::uint64_t seed);

double logistic(double x);

// Raw inner product U_u . V_v used for ranking. Throws kReference.
double predict_score(const LatentFactors& factors, Index user, Index item);

struct LabeledPair {
  Index user = 0;
  Index item = 0;
  double label = 0.0;
};

// Sum of binary cross-entropy over the pairs with the logistic of the inner
// product as the predicted probability, plus (l2 / 2) (|U|^2 + |V|^2).
double mf_loss(const LatentFactors& factors, std::span<const LabeledPair> pairs, double l2);
// Gradient of mf_loss with respect to U and V.
void mf_loss_gradient(const LatentFactors& factors, std::span<const LabeledPair> pairs,
                      double l2, RowMatrix& grad_user, RowMatrix& grad_item);

// Observed labels plus `negative_ratio` uniformly drawn unseen items per
// positive, resampled every epoch, optimized by SGD. Throws kTraining when
// the loss becomes non-finite.
LatentFactors train_mf(const InteractionLog& train, const TrainConfig& config,
                       TrainReport* report = nullptr);

struct RecList {
  Index user = 0;
  std::vector<Index> items;
  std::vector<double> scores;

  std::size_t size() const { return items.size(); }
};

// Items of `scores` ranked by descending score, ascending id on ties,
// skipping excluded items. Throws kCapacity when fewer than k remain.
RecList top_k_from_scores(Index user, const Vector& scores, std::size_t k,
                          std::span<const Index> exclude);
RecList top_k(const LatentFactors& factors, Index user, std::size_t k,
              std::span<const Index> exclude = {});

enum class FusionSide { kUser, kItem };

FusionSide fusion_side(NodeKind attribute_kind);

// Element-wise product fusion of an attribute embedding: user side fuses
// into the user's row, item side into every item row of the list. Returns a
// new set of factors; the input is not modified.
LatentFactors fuse(const LatentFactors& factors, Index user, const RecList& recs,
                   const Vector& embedding, FusionSide side);

// Counterfactual view of the factors for a single user: holds the fused
// user row and fused item rows over a shared base. Fusions accumulate.
class FusedFactors {
 public:
  FusedFactors(const LatentFactors& base, Index user);

  void fuse(const RecList& recs, const Vector& embedding, FusionSide side);

  Index user() const { return user_; }
  const LatentFactors& base() const { return *base_; }
  const Vector& user_row() const { return user_row_; }
  Vector item_row(Index item) const;
  bool item_fused(Index item) const { return items_.contains(item); }

  Vector scores() const;
  RecList top_k(std::size_t k, std::span<const Index> exclude) const;

 private:
  const LatentFactors* base_;
  Index user_;
  Vector user_row_;
  std::unordered_map<Index, Vector> items_;
};

Checkpoint factors_to_checkpoint(const LatentFactors& factors);
LatentFactors factors_from_checkpoint(const Checkpoint& checkpoint);

// Per-user item ids from the records, ascending.
std::vector<std::vector<Index>> items_by_user(const InteractionLog& log,
                                              bool positives_only);

}  // namespace fairex
