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

#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "fairex/checkpoint.hpp"
#include "fairex/error.hpp"
#include "fairex/recsys.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fairex;
namespace ts = testing_support;

namespace {

LatentFactors random_factors(std::size_t m, std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LatentFactors f;
  f.user = ts::random_matrix(m, d, rng);
  f.item = ts::random_matrix(n, d, rng);
  return f;
}

}  // namespace

TEST(PredictScore, ZeroUserScoresZero) {
  auto f = random_factors(2, 5, 4, 1);
  f.user.row(0).setZero();
  for (Index v = 0; v < 5; ++v) EXPECT_EQ(predict_score(f, 0, v), 0.0);
}

TEST(PredictScore, HandDotProduct) {
  LatentFactors f;
  f.user = RowMatrix{{1, 2}};
  f.item = RowMatrix{{3, -1}};
  EXPECT_DOUBLE_EQ(predict_score(f, 0, 0), 1.0);
}

TEST(PredictScore, MatchesMultiplyAccumulateLoop) {
  const auto f = random_factors(6, 7, 8, 2);
  for (Index u = 0; u < 6; ++u)
    for (Index v = 0; v < 7; ++v) {
      double acc = 0;
      for (int k = 0; k < 8; ++k) acc += f.user(u, k) * f.item(v, k);
      EXPECT_NEAR(predict_score(f, u, v), acc, 1e-12);
    }
}

TEST(PredictScore, OutOfRangeIsReferenceError) {
  const auto f = random_factors(2, 2, 2, 3);
  EXPECT_THROW(predict_score(f, 2, 0), Error);
  EXPECT_THROW(predict_score(f, 0, 5), Error);
}

TEST(PredictScore, LinearInUserFactor) {
  auto f = random_factors(1, 3, 4, 4);
  const double before = predict_score(f, 0, 1);
  f.user *= 2.5;
  EXPECT_NEAR(predict_score(f, 0, 1), 2.5 * before, 1e-12);
}

TEST(TrainMf, SeparableToyOrdersItems) {
  InteractionLog log(1, 2, {{0, 0, 1.0, 0}, {0, 1, 0.0, 1}});
  TrainConfig cfg;
  cfg.dim = 2;
  cfg.epochs = 200;
  cfg.learning_rate = 0.5;
  cfg.negative_ratio = 0;
  const auto f = train_mf(log, cfg);
  EXPECT_GT(logistic(predict_score(f, 0, 0)), logistic(predict_score(f, 0, 1)));
}

TEST(TrainMf, ZeroEpochsReturnsInitialization) {
  std::mt19937_64 rng(1);
  const auto log = binarize(ts::random_log(5, 6, 0.5, rng), 4);
  TrainConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 0;
  cfg.seed = 9;
  EXPECT_EQ(train_mf(log, cfg), init_factors(5, 6, 4, 9));
}

TEST(TrainMf, InitializationWithinBounds) {
  const auto f = init_factors(10, 10, 8, 3);
  EXPECT_LE(f.user.cwiseAbs().maxCoeff(), 0.01);
  EXPECT_LE(f.item.cwiseAbs().maxCoeff(), 0.01);
}

TEST(TrainMf, LossDecreasesAndIsDeterministic) {
  std::mt19937_64 rng(6);
  const auto log = binarize(ts::random_log(30, 40, 0.3, rng), 4);
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 20;
  TrainReport r1, r2;
  const auto a = train_mf(log, cfg, &r1);
  const auto b = train_mf(log, cfg, &r2);
  EXPECT_EQ(a, b);
  ASSERT_EQ(r1.epoch_loss.size(), 20u);
  EXPECT_LE(r1.epoch_loss.back(), r1.epoch_loss.front());
}

TEST(TrainMf, DivergenceIsTrainingError) {
  std::mt19937_64 rng(6);
  const auto log = binarize(ts::random_log(10, 10, 0.5, rng), 4);
  TrainConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 50;
  cfg.learning_rate = 1e200;
  try {
    train_mf(log, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTraining);
  }
}

TEST(TrainMf, ConfigValidation) {
  TrainConfig cfg;
  cfg.learning_rate = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(MfLoss, GradientMatchesFiniteDifferences) {
  auto f = random_factors(4, 5, 6, 8);
  f.user *= 0.5;
  f.item *= 0.5;
  std::vector<LabeledPair> pairs{{0, 1, 1}, {0, 2, 0}, {1, 1, 0}, {2, 4, 1}, {3, 0, 1}, {3, 3, 0}};
  const double l2 = 0.1;
  RowMatrix gu, gi;
  mf_loss_gradient(f, pairs, l2, gu, gi);
  std::vector<double*> params;
  std::vector<double> analytic;
  for (Eigen::Index i = 0; i < f.user.size(); ++i) {
    params.push_back(f.user.data() + i);
    analytic.push_back(gu.data()[i]);
  }
  for (Eigen::Index i = 0; i < f.item.size(); ++i) {
    params.push_back(f.item.data() + i);
    analytic.push_back(gi.data()[i]);
  }
  const auto numeric = oracle::numeric_gradient(params, [&] { return mf_loss(f, pairs, l2); });
  EXPECT_LT(oracle::relative_error(analytic, numeric), 1e-4);
}

TEST(TopK, DirectSort) {
  const Vector s = (Vector(3) << 0.9, 0.1, 0.5).finished();
  const auto l = top_k_from_scores(0, s, 2, {});
  EXPECT_EQ(l.items, (std::vector<Index>{0, 2}));
}

TEST(TopK, Exclusion) {
  const Vector s = (Vector(3) << 0.9, 0.1, 0.5).finished();
  const std::vector<Index> ex{0};
  EXPECT_EQ(top_k_from_scores(0, s, 2, ex).items, (std::vector<Index>{2, 1}));
}

TEST(TopK, TiesByAscendingId) {
  const Vector s = Vector::Constant(5, 1.0);
  EXPECT_EQ(top_k_from_scores(0, s, 3, {}).items, (std::vector<Index>{0, 1, 2}));
}

TEST(TopK, CapacityError) {
  const Vector s = Vector::Zero(3);
  const std::vector<Index> ex{0, 1};
  try {
    top_k_from_scores(0, s, 2, ex);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCapacity);
  }
}

TEST(TopK, MatchesFullSortOracle) {
  const auto f = random_factors(5, 100, 8, 12);
  const std::vector<Index> ex{3, 17, 40, 41};
  for (Index u = 0; u < 5; ++u) {
    const auto list = top_k(f, u, 20, ex);
    std::vector<std::pair<double, Index>> all;
    for (Index v = 0; v < 100; ++v)
      if (std::find(ex.begin(), ex.end(), v) == ex.end()) all.push_back({-f.user.row(u).dot(f.item.row(v)), v});
    std::sort(all.begin(), all.end());
    for (int k = 0; k < 20; ++k) EXPECT_EQ(list.items[k], all[k].second);
    EXPECT_TRUE(std::is_sorted(list.scores.rbegin(), list.scores.rend()));
  }
}

TEST(TopK, FirstItemAttainsMaximum) {
  const auto f = random_factors(1, 30, 4, 13);
  const auto l = top_k(f, 0, 1);
  const Vector s = f.item * f.user.row(0).transpose();
  EXPECT_EQ(s[l.items[0]], s.maxCoeff());
}

TEST(Fuse, OnesLeaveFactorsUnchanged) {
  const auto f = random_factors(3, 6, 4, 14);
  const auto list = top_k(f, 1, 3);
  const Vector ones = Vector::Ones(4);
  EXPECT_EQ(fuse(f, 1, list, ones, FusionSide::kUser), f);
  EXPECT_EQ(fuse(f, 1, list, ones, FusionSide::kItem), f);
}

TEST(Fuse, ZeroUserSideAnnihilatesScores) {
  const auto f = random_factors(3, 6, 4, 15);
  const auto g = fuse(f, 2, top_k(f, 2, 3), Vector::Zero(4), FusionSide::kUser);
  for (Index v = 0; v < 6; ++v) EXPECT_EQ(predict_score(g, 2, v), 0.0);
}

TEST(Fuse, CoordinateWiseProductAndLocality) {
  const auto f = random_factors(4, 10, 5, 16);
  const auto list = top_k(f, 1, 4);
  std::mt19937_64 rng(1);
  const Vector e = ts::random_matrix(5, 1, rng).col(0);
  const auto g = fuse(f, 1, list, e, FusionSide::kItem);
  for (Index v = 0; v < 10; ++v) {
    const bool in_list = std::find(list.items.begin(), list.items.end(), v) != list.items.end();
    for (int k = 0; k < 5; ++k) {
      const double expected = in_list ? f.item(v, k) * e[k] : f.item(v, k);
      EXPECT_EQ(g.item(v, k), expected);
    }
  }
  EXPECT_EQ(g.user, f.user);
  const auto h = fuse(f, 1, list, e, FusionSide::kUser);
  for (Index u = 0; u < 4; ++u)
    for (int k = 0; k < 5; ++k) EXPECT_EQ(h.user(u, k), u == 1 ? f.user(u, k) * e[k] : f.user(u, k));
  EXPECT_EQ(h.item, f.item);
}

TEST(Fuse, DimensionMismatchIsShapeError) {
  const auto f = random_factors(2, 3, 4, 17);
  try {
    fuse(f, 0, top_k(f, 0, 1), Vector::Ones(3), FusionSide::kUser);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShape);
  }
}

TEST(FusedFactors, AgreesWithSequentialPureFusion) {
  const auto f = random_factors(3, 12, 4, 18);
  std::mt19937_64 rng(2);
  FusedFactors view(f, 0);
  LatentFactors pure = f;
  RecList list = top_k(f, 0, 4);
  for (int step = 0; step < 4; ++step) {
    const Vector e = ts::random_matrix(4, 1, rng).col(0);
    const auto side = step % 2 ? FusionSide::kItem : FusionSide::kUser;
    view.fuse(list, e, side);
    pure = fuse(pure, 0, list, e, side);
    list = view.top_k(4, {});
    EXPECT_EQ(list.items, top_k(pure, 0, 4).items);
  }
  EXPECT_EQ(view.user_row(), Vector(pure.user.row(0).transpose()));
}

TEST(FactorCheckpoint, TextAndBinaryRoundTrip) {
  auto f = random_factors(3, 4, 5, 19);
  f.seed = 42;
  for (auto fmt : {CheckpointFormat::kText, CheckpointFormat::kBinary}) {
    std::stringstream buf;
    write_checkpoint(buf, factors_to_checkpoint(f), fmt);
    const auto back = factors_from_checkpoint(read_checkpoint(buf));
    EXPECT_EQ(back, f);
    EXPECT_EQ(back.seed, 42u);
  }
}

TEST(FactorCheckpoint, WrongKindRejected) {
  Checkpoint ck;
  ck.kind = "embeddings";
  EXPECT_THROW(factors_from_checkpoint(ck), Error);
}
