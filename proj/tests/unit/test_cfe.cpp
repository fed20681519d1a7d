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

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "fairex/cfe.hpp"
#include "fairex/checkpoint.hpp"
#include "fairex/error.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fairex;
namespace ts = testing_support;

namespace {

Vector random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  return ts::random_matrix(n, 1, rng, scale).col(0);
}

GruParams random_gru(std::size_t in, std::size_t h, std::mt19937_64& rng) {
  GruParams p = GruParams::zeros(in, h);
  for (int g = 0; g < 3; ++g) {
    p.W[g] = ts::random_matrix(h, in, rng, 0.5);
    p.U[g] = ts::random_matrix(h, h, rng, 0.5);
    p.b[g] = random_vector(h, rng, 0.5);
  }
  return p;
}

// Plain loops, written from the textbook cell.
std::vector<double> reference_gru(const GruParams& p, const std::vector<double>& x,
                                  const std::vector<double>& s) {
  const std::size_t h = p.state_dim(), in = p.input_dim();
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  std::vector<double> u(h), r(h), out(h);
  for (std::size_t i = 0; i < h; ++i) {
    double zu = p.b[0][i], zr = p.b[1][i];
    for (std::size_t j = 0; j < in; ++j) {
      zu += p.W[0](i, j) * x[j];
      zr += p.W[1](i, j) * x[j];
    }
    for (std::size_t j = 0; j < h; ++j) {
      zu += p.U[0](i, j) * s[j];
      zr += p.U[1](i, j) * s[j];
    }
    u[i] = sig(zu);
    r[i] = sig(zr);
  }
  for (std::size_t i = 0; i < h; ++i) {
    double zc = p.b[2][i];
    for (std::size_t j = 0; j < in; ++j) zc += p.W[2](i, j) * x[j];
    for (std::size_t j = 0; j < h; ++j) zc += p.U[2](i, j) * r[j] * s[j];
    out[i] = (1 - u[i]) * s[i] + u[i] * std::tanh(zc);
  }
  return out;
}

std::vector<double*> gru_pointers(GruParams& p) {
  std::vector<double*> out;
  for (int g = 0; g < 3; ++g) {
    for (Eigen::Index i = 0; i < p.W[g].size(); ++i) out.push_back(p.W[g].data() + i);
    for (Eigen::Index i = 0; i < p.U[g].size(); ++i) out.push_back(p.U[g].data() + i);
    for (Eigen::Index i = 0; i < p.b[g].size(); ++i) out.push_back(p.b[g].data() + i);
  }
  return out;
}

std::vector<double> gru_values(const GruParams& p) {
  std::vector<double> out;
  for (int g = 0; g < 3; ++g) {
    out.insert(out.end(), p.W[g].data(), p.W[g].data() + p.W[g].size());
    out.insert(out.end(), p.U[g].data(), p.U[g].data() + p.U[g].size());
    out.insert(out.end(), p.b[g].data(), p.b[g].data() + p.b[g].size());
  }
  return out;
}

std::vector<NodeRef> item_attrs(std::initializer_list<Index> ids) {
  std::vector<NodeRef> out;
  for (Index i : ids) out.push_back(NodeRef{NodeKind::kItemAttribute, i});
  return out;
}

PolicyConfig small_policy(std::size_t K, std::size_t d) {
  PolicyConfig c;
  c.list_length = K;
  c.embed_dim = d;
  c.state_dim = 4;
  c.attention_dim = 3;
  c.candidate_size = 4;
  return c;
}

// Hand-built trajectories for gradient checks: `actions` candidates per step.
std::vector<Trajectory> toy_batch(const PolicyParams& p, std::size_t actions,
                                  std::mt19937_64& rng) {
  std::vector<Trajectory> batch(2);
  std::uniform_real_distribution<double> unit(0.2, 1.0);
  for (auto& traj : batch) {
    traj.gamma = 0.8;
    for (int t = 0; t < 3; ++t) {
      TrajectoryStep step;
      step.input = random_vector(p.gru.input_dim(), rng);
      step.action_embeddings = ts::random_matrix(actions, p.config.embed_dim, rng);
      step.action_index = static_cast<std::size_t>(t) % actions;
      step.pi_e = unit(rng);
      step.pi_0 = unit(rng);
      step.reward = unit(rng) * 2 - 0.5;
      traj.steps.push_back(std::move(step));
    }
  }
  return batch;
}

bool same_policy(const PolicyParams& a, const PolicyParams& b) {
  return a.head == b.head && gru_values(a.gru) == gru_values(b.gru) &&
         a.attention.Ws == b.attention.Ws && a.attention.Wh == b.attention.Wh &&
         a.attention.b == b.attention.b;
}

}  // namespace

// ---- GRU ------------------------------------------------------------------

TEST(Gru, ZeroParametersKeepZeroState) {
  const auto p = GruParams::zeros(5, 3);
  std::mt19937_64 rng(1);
  Vector s = Vector::Zero(3);
  for (int t = 0; t < 6; ++t) s = gru_step(p, random_vector(5, rng), s);
  EXPECT_EQ(s, Vector::Zero(3));
}

TEST(Gru, SaturatedUpdateGateCopiesCandidate) {
  std::mt19937_64 rng(2);
  auto p = random_gru(4, 3, rng);
  p.b[0].setConstant(1e3);
  GruCache cache;
  const Vector s = gru_step(p, random_vector(4, rng), random_vector(3, rng, 0.3), &cache);
  EXPECT_EQ(s, cache.s_hat);
}

TEST(Gru, MatchesReferenceCell) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_gru(6, 4, rng);
    const Vector x = random_vector(6, rng), s = random_vector(4, rng, 0.5);
    const Vector got = gru_step(p, x, s);
    const auto want = reference_gru(p, std::vector<double>(x.data(), x.data() + 6),
                                    std::vector<double>(s.data(), s.data() + 4));
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(got[i], want[i], 1e-10);
  }
}

TEST(Gru, StateStaysInsideOpenUnitCube) {
  std::mt19937_64 rng(4);
  const auto p = random_gru(3, 5, rng);
  Vector s = Vector::Zero(5);
  for (int t = 0; t < 50; ++t) {
    s = gru_step(p, random_vector(3, rng, 3.0), s);
    EXPECT_LT(s.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(Gru, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  auto p = random_gru(3, 4, rng);
  const Vector x = random_vector(3, rng);
  Vector s0 = random_vector(4, rng, 0.5);
  const Vector c = random_vector(4, rng);
  GruCache cache;
  gru_step(p, x, s0, &cache);
  GruParams grad = GruParams::zeros(3, 4);
  const Vector ds_prev = gru_backward(p, cache, c, grad);

  auto params = gru_pointers(p);
  std::vector<double> analytic = gru_values(grad);
  for (int i = 0; i < 4; ++i) {
    params.push_back(s0.data() + i);
    analytic.push_back(ds_prev[i]);
  }
  const auto numeric = oracle::numeric_gradient(params, [&] { return c.dot(gru_step(p, x, s0)); });
  EXPECT_LT(oracle::relative_error(analytic, numeric), 1e-6);
}

TEST(Gru, ShapeMismatch) {
  const auto p = GruParams::zeros(3, 2);
  try {
    gru_step(p, Vector::Zero(4), Vector::Zero(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShape);
  }
}

TEST(EncodeState, ConcatenatesListEmbeddingsAndAdvances) {
  const auto w = ts::random_world(3, 6, 2, 3, 2, 6);
  RecList list;
  list.user = 0;
  list.items = {4, 1};
  const Vector x = encode_list(w.embeddings, list);
  ASSERT_EQ(x.size(), 4);
  EXPECT_EQ(x.segment(0, 2), w.embeddings.vector({NodeKind::kItem, 4}));
  EXPECT_EQ(x.segment(2, 2), w.embeddings.vector({NodeKind::kItem, 1}));
  std::mt19937_64 rng(1);
  const auto p = random_gru(4, 3, rng);
  const auto s0 = initial_state(0, list, 3);
  const auto s1 = encode_state(s0, list, w.embeddings, p);
  EXPECT_EQ(s1.t, 1u);
  EXPECT_EQ(s1.s, gru_step(p, x, Vector::Zero(3)));
}

// ---- candidates and pruning -----------------------------------------------

TEST(CandidateAttributes, SingleUserAttribute) {
  ts::Toy t;
  t.log = InteractionLog(1, 2, {{0, 0, 1.0, 0}, {0, 1, 1.0, 1}});
  const auto r = t.relations.intern("has_user_feature");
  t.users.labels = {10};
  t.users.edges.push_back({NodeRef{NodeKind::kUser, 0}, NodeRef{NodeKind::kUserAttribute, 0}, r});
  const Hin hin = t.hin();
  RecList list;
  list.items = {0, 1};
  const auto c = candidate_attributes(hin, 0, list);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], (NodeRef{NodeKind::kUserAttribute, 0}));
}

TEST(CandidateAttributes, UnionMatchesEdgeScan) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto t = ts::random_toy(8, 15, 4, 6, 0.3, rng);
    const Hin hin = t.hin();
    RecList list;
    list.user = 3;
    list.items = {0, 2, 5, 11};
    std::set<NodeRef> want;
    for (const auto& e : t.users.edges)
      if (e.src.id == 3) want.insert(e.dst);
    for (const auto& e : t.items.edges)
      if (std::find(list.items.begin(), list.items.end(), e.src.id) != list.items.end()) want.insert(e.dst);
    const auto got = candidate_attributes(hin, 3, list);
    EXPECT_EQ(got, std::vector<NodeRef>(want.begin(), want.end()));
  }
}

TEST(Attention, EqualLogitsGiveUniformWeights) {
  const Vector w = softmax(Vector::Constant(4, 2.5));
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(w[i], 0.25);
  const auto world = ts::random_world(3, 6, 2, 3, 3, 7);
  std::mt19937_64 rng(2);
  AttentionParams p = AttentionParams::init(3, 4, 3, rng);
  p.Wh.setZero();  // attribute embeddings no longer matter
  const auto attrs = item_attrs({0, 1, 2});
  const Vector a = attention_scores(random_vector(4, rng), attrs, world.embeddings, p);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], 1.0 / 3, 1e-15);
}

TEST(Attention, DominantLogitTakesAllWeight) {
  const Vector w = softmax((Vector(3) << 0.0, 800.0, 1.0).finished());
  EXPECT_NEAR(w[1], 1.0, 1e-300);
  EXPECT_GE(w[0], 0.0);
}

TEST(Attention, MatchesExpSumOracle) {
  const auto world = ts::random_world(3, 6, 3, 4, 3, 8);
  std::mt19937_64 rng(3);
  const auto p = AttentionParams::init(5, 4, 3, rng);
  const std::vector<NodeRef> attrs{{NodeKind::kUserAttribute, 1}, {NodeKind::kItemAttribute, 0},
                                   {NodeKind::kItemAttribute, 3}};
  for (int trial = 0; trial < 20; ++trial) {
    const Vector s = random_vector(4, rng);
    const Vector got = attention_scores(s, attrs, world.embeddings, p);
    std::vector<double> logit;
    for (const auto& a : attrs) {
      const Vector e = world.embeddings.vector(a);
      double sum = 0;
      for (int i = 0; i < 5; ++i) {
        double z = p.b[i];
        for (int j = 0; j < 4; ++j) z += p.Ws(i, j) * s[j];
        for (int j = 0; j < 3; ++j) z += p.Wh(i, j) * e[j];
        sum += std::max(z, 0.0);
      }
      logit.push_back(sum);
    }
    double z = 0;
    for (double l : logit) z += std::exp(l);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(got[i], std::exp(logit[i]) / z, 1e-12);
  }
}

TEST(Attention, EmptySetIsEmptyCandidateError) {
  const auto world = ts::random_world(2, 4, 1, 1, 2, 9);
  std::mt19937_64 rng(1);
  const auto p = AttentionParams::init(2, 2, 2, rng);
  try {
    attention_scores(Vector::Zero(2), {}, world.embeddings, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCandidate);
  }
}

TEST(Prune, AllEqualKeepsLowestIds) {
  const auto attrs = item_attrs({0, 1, 2, 3, 4});
  const auto c = prune_actions(attrs, Vector::Constant(5, 0.2), 3);
  EXPECT_EQ(c.actions, item_attrs({0, 1, 2}));
  EXPECT_EQ(c.size_limit, 3u);
}

TEST(Prune, LargeLimitKeepsEverything) {
  const auto attrs = item_attrs({0, 1, 2});
  const auto c = prune_actions(attrs, (Vector(3) << 0.2, 0.5, 0.3).finished(), 10);
  std::set<NodeRef> kept(c.actions.begin(), c.actions.end());
  EXPECT_EQ(kept.size(), 3u);
  EXPECT_EQ(c.actions.front(), attrs[1]);
}

TEST(Prune, MatchesFullSortOracle) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<NodeRef> attrs;
    Vector w(12);
    for (Index i = 0; i < 12; ++i) {
      attrs.push_back({NodeKind::kItemAttribute, i});
      // coarse values force ties
      w[i] = std::round(u(rng) * 5) / 5;
    }
    std::vector<std::pair<double, Index>> order;
    for (Index i = 0; i < 12; ++i) order.push_back({-w[i], i});
    std::sort(order.begin(), order.end());
    const auto c = prune_actions(attrs, w, 5);
    ASSERT_EQ(c.actions.size(), 5u);
    for (int k = 0; k < 5; ++k) EXPECT_EQ(c.actions[k].id, order[k].second);
  }
}

TEST(Prune, AddingWeakerAttributeKeepsActions) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 1);
  std::vector<NodeRef> attrs;
  std::vector<double> w;
  for (Index i = 0; i < 8; ++i) {
    attrs.push_back({NodeKind::kItemAttribute, i});
    w.push_back(u(rng));
  }
  const auto before = prune_actions(attrs, Eigen::Map<Vector>(w.data(), 8), 4);
  attrs.push_back({NodeKind::kItemAttribute, 8});
  w.push_back(before.weights.back() / 2);
  const auto after = prune_actions(attrs, Eigen::Map<Vector>(w.data(), 9), 4);
  EXPECT_EQ(before.actions, after.actions);
}

TEST(Prune, ZeroLimitRejected) {
  EXPECT_THROW(prune_actions(item_attrs({0}), Vector::Ones(1), 0), Error);
}

// ---- policy ---------------------------------------------------------------

TEST(PolicyDistribution, ZeroHeadIsUniform) {
  std::mt19937_64 rng(12);
  const auto p = policy_distribution(random_vector(4, rng), ts::random_matrix(5, 3, rng),
                                     RowMatrix::Zero(4, 3));
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(p[i], 0.2);
}

TEST(PolicyDistribution, SingleCandidateHasProbabilityOne) {
  std::mt19937_64 rng(13);
  const auto p = policy_distribution(random_vector(4, rng), ts::random_matrix(1, 3, rng),
                                     ts::random_matrix(4, 3, rng));
  EXPECT_EQ(p.size(), 1);
  EXPECT_DOUBLE_EQ(p[0], 1.0);
}

TEST(PolicyDistribution, MatchesBilinearOracleAndArgmaxScaleInvariance) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector s = random_vector(4, rng);
    const RowMatrix E = ts::random_matrix(6, 3, rng), W = ts::random_matrix(4, 3, rng);
    const Vector p = policy_distribution(s, E, W);
    std::vector<double> score(6);
    double z = 0;
    for (int a = 0; a < 6; ++a) {
      double acc = 0;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) acc += s[i] * W(i, j) * E(a, j);
      score[a] = acc;
      z += std::exp(acc);
    }
    for (int a = 0; a < 6; ++a) EXPECT_NEAR(p[a], std::exp(score[a]) / z, 1e-12);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    Eigen::Index i1, i2;
    p.maxCoeff(&i1);
    policy_distribution(s, E, 7.5 * W).maxCoeff(&i2);
    EXPECT_EQ(i1, i2);
  }
}

TEST(PolicyDistribution, EmptyCandidatesRejected) {
  try {
    policy_distribution(Vector::Zero(2), RowMatrix(0, 3), RowMatrix::Zero(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCandidate);
  }
}

TEST(PolicyParams, InitHasZeroHeadAndMatchingShapes) {
  const auto p = PolicyParams::init(small_policy(3, 5), 1);
  EXPECT_EQ(p.head, RowMatrix::Zero(4, 5));
  EXPECT_EQ(p.gru.input_dim(), 15u);
  EXPECT_EQ(p.attention.Wh.cols(), 5);
  EXPECT_TRUE(same_policy(p, PolicyParams::init(small_policy(3, 5), 1)));
}

// ---- reward ---------------------------------------------------------------

TEST(Reward, IdentityFusionWithDropScoresThree) {
  const auto g = groups_from_head(10, std::vector<Index>{0, 1});
  LatentFactors f;
  std::mt19937_64 rng(15);
  f.user = ts::random_matrix(1, 3, rng);
  f.item = ts::random_matrix(10, 3, rng);
  RecList before, after;
  before.items = {0, 1, 2};
  after.items = {0, 3, 4};
  DisparityConfig cfg;
  cfg.epsilon = 0.1;
  ASSERT_GT(disparity(before, g, cfg) - disparity(after, g, cfg), cfg.epsilon);
  EXPECT_DOUBLE_EQ(counterfactual_reward(f, f, 0, before, after, g, cfg), 3.0);
}

TEST(Reward, OrthogonalFactorsWithoutDropScoreZero) {
  const auto g = groups_from_head(4, std::vector<Index>{0});
  LatentFactors a, b;
  a.user = RowMatrix{{1, 0}};
  b.user = RowMatrix{{0, 2}};
  a.item = RowMatrix{{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  b.item = RowMatrix{{0, 3}, {-1, 0}, {1, -1}, {1, 1}};
  RecList l;
  l.items = {0, 1, 2, 3};
  DisparityConfig cfg;
  cfg.epsilon = 0.5;
  EXPECT_NEAR(counterfactual_reward(a, b, 0, l, l, g, cfg), 0.0, 1e-15);
}

TEST(Reward, ZeroVectorTermContributesNothing) {
  EXPECT_EQ(cosine_similarity(Vector::Zero(3), Vector::Ones(3)), 0.0);
}

TEST(Reward, CosineMatchesOracle) {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 50; ++i) {
    const Vector a = random_vector(5, rng), b = random_vector(5, rng);
    double dot = 0, na = 0, nb = 0;
    for (int k = 0; k < 5; ++k) {
      dot += a[k] * b[k];
      na += a[k] * a[k];
      nb += b[k] * b[k];
    }
    EXPECT_NEAR(cosine_similarity(a, b), dot / std::sqrt(na * nb), 1e-12);
  }
}

TEST(Reward, BonusFiresExactlyAtThreshold) {
  for (double drop : {-1.0, 0.0, 0.29, 0.3, 0.31, 5.0}) {
    const double r = reward_from_parts(drop, 0.3, 0.25, -0.5);
    EXPECT_DOUBLE_EQ(r, (drop >= 0.3 ? 1.0 : 0.0) - 0.25);
  }
}

TEST(Reward, BoundedOnRandomFusions) {
  const auto w = ts::random_world(6, 20, 3, 5, 4, 17);
  std::mt19937_64 rng(18);
  DisparityConfig cfg;
  cfg.epsilon = 0.5;
  for (int trial = 0; trial < 200; ++trial) {
    const Index u = trial % 6;
    const RecList before = top_k(w.factors, u, 5);
    const Vector e = random_vector(4, rng, 2.0);
    const auto side = trial % 2 ? FusionSide::kUser : FusionSide::kItem;
    const auto after = fuse(w.factors, u, before, e, side);
    const double r = counterfactual_reward(w.factors, after, u, before, top_k(after, u, 5), w.groups, cfg);
    EXPECT_GE(r, -2.0);
    EXPECT_LE(r, 3.0);
  }
}

// ---- off-policy objective -------------------------------------------------

TEST(CrmReturn, UnitWeightsUndiscountedIsRewardSum) {
  Trajectory t;
  t.gamma = 1.0;
  for (double r : {0.5, 1.5, -0.25}) {
    TrajectoryStep s;
    s.pi_e = s.pi_0 = 0.25;
    s.reward = r;
    t.steps.push_back(s);
  }
  EXPECT_DOUBLE_EQ(crm_return(t), 1.75);
}

TEST(CrmReturn, ZeroDiscountKeepsFirstStep) {
  Trajectory t;
  t.gamma = 0.0;
  TrajectoryStep a, b;
  a.pi_e = 0.5;
  a.pi_0 = 0.25;
  a.reward = 1.5;
  b.pi_e = b.pi_0 = 1;
  b.reward = 100;
  t.steps = {a, b};
  EXPECT_DOUBLE_EQ(crm_return(t), 3.0);
}

TEST(CrmReturn, RatioIsClipped) {
  Trajectory t;
  TrajectoryStep a;
  a.pi_e = 1.0;
  a.pi_0 = 0.01;
  a.reward = 1;
  t.steps = {a};
  EXPECT_DOUBLE_EQ(crm_return(t), kDefaultClip);
  EXPECT_DOUBLE_EQ(crm_return(t, 1000), 100.0);
}

TEST(CrmReturn, ZeroLoggingPropensityIsError) {
  Trajectory t;
  TrajectoryStep a;
  a.pi_e = 0.5;
  a.pi_0 = 0.0;
  t.steps = {a};
  try {
    crm_return(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPropensity);
  }
}

TEST(CrmReturn, TwoActionMonteCarloMatchesExactExpectation) {
  const double pi_e[2] = {0.8, 0.2}, reward[2] = {1.0, 3.0};
  const double exact = pi_e[0] * reward[0] + pi_e[1] * reward[1];
  std::mt19937_64 rng(19);
  std::bernoulli_distribution coin(0.5);
  const int n = 100000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const int a = coin(rng);
    Trajectory t;
    TrajectoryStep s;
    s.pi_e = pi_e[a];
    s.pi_0 = 0.5;
    s.reward = reward[a];
    t.steps = {s};
    const double v = crm_return(t);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_LT(std::abs(mean - exact), 3 * se);
}

TEST(PolicyGradient, MatchesFiniteDifferences) {
  for (bool end_to_end : {true, false}) {
    auto cfg = small_policy(2, 3);
    cfg.end_to_end = end_to_end;
    auto p = PolicyParams::init(cfg, 20);
    std::mt19937_64 rng(21);
    p.head = ts::random_matrix(4, 3, rng);
    const auto batch = toy_batch(p, 3, rng);
    const auto g = policy_gradient(p, batch);

    std::vector<double*> params;
    std::vector<double> analytic;
    for (Eigen::Index i = 0; i < p.head.size(); ++i) {
      params.push_back(p.head.data() + i);
      analytic.push_back(g.head.data()[i]);
    }
    if (end_to_end) {
      const auto gp = gru_pointers(p.gru);
      params.insert(params.end(), gp.begin(), gp.end());
      const auto gv = gru_values(g.gru);
      analytic.insert(analytic.end(), gv.begin(), gv.end());
    } else {
      EXPECT_EQ(g.gru.W[0], RowMatrix::Zero(4, 6));
    }
    const auto numeric = oracle::numeric_gradient(params, [&] { return policy_objective(p, batch); });
    EXPECT_LT(oracle::relative_error(analytic, numeric), 1e-4) << "end_to_end=" << end_to_end;
  }
}

TEST(ReinforceStep, ZeroRewardsLeaveParametersUnchanged) {
  auto p = PolicyParams::init(small_policy(2, 3), 22);
  std::mt19937_64 rng(22);
  p.head = ts::random_matrix(4, 3, rng);
  auto batch = toy_batch(p, 3, rng);
  for (auto& t : batch)
    for (auto& s : t.steps) s.reward = 0;
  EXPECT_TRUE(same_policy(reinforce_step(p, batch, 0.5), p));
}

TEST(ReinforceStep, SingleCandidateLeavesParametersUnchanged) {
  auto p = PolicyParams::init(small_policy(2, 3), 23);
  std::mt19937_64 rng(23);
  p.head = ts::random_matrix(4, 3, rng);
  const auto batch = toy_batch(p, 1, rng);
  const auto q = reinforce_step(p, batch, 0.5);
  EXPECT_LT((q.head - p.head).norm(), 1e-15);
  const auto a = gru_values(p.gru), b = gru_values(q.gru);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST(ReinforceStep, NonFiniteGradientIsTrainingError) {
  auto p = PolicyParams::init(small_policy(2, 3), 24);
  std::mt19937_64 rng(24);
  p.head = ts::random_matrix(4, 3, rng);
  auto batch = toy_batch(p, 3, rng);
  batch[0].steps[0].reward = std::nan("");
  try {
    reinforce_step(p, batch, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTraining);
  }
}

TEST(ReinforceStep, EmptyBatchRejected) {
  const auto p = PolicyParams::init(small_policy(2, 3), 25);
  EXPECT_THROW(reinforce_step(p, {}, 0.1), Error);
}

TEST(ReinforceStep, AscendsTheSurrogate) {
  auto p = PolicyParams::init(small_policy(2, 3), 26);
  std::mt19937_64 rng(26);
  p.head = ts::random_matrix(4, 3, rng, 0.1);
  const auto batch = toy_batch(p, 3, rng);
  const auto q = reinforce_step(p, batch, 1e-2);
  EXPECT_GT(policy_objective(q, batch), policy_objective(p, batch));
}

// ---- environment, training, extraction ------------------------------------

class ExplainerWorld : public ::testing::Test {
 protected:
  ExplainerWorld() : w(ts::random_world(8, 24, 3, 6, 4, 27, 0.35)) {}

  ExplanationEnvironment env(double epsilon) const {
    DisparityConfig cfg;
    cfg.epsilon = epsilon;
    return ExplanationEnvironment(w.hin, w.factors, w.embeddings, w.groups, w.toy.log, 4, cfg);
  }

  ts::World w;
};

TEST_F(ExplainerWorld, EpisodeRewardAgreesWithPureFusion) {
  const auto e = env(0.2);
  for (Index u = 0; u < 8; ++u) {
    auto ep = e.begin(u);
    LatentFactors pure = w.factors;
    RecList list = ep.original();
    EXPECT_EQ(list.items, top_k(w.factors, u, 4, e.excluded(u)).items);
    for (int t = 0; t < 3; ++t) {
      const auto cands = ep.candidates();
      if (cands.empty()) break;
      const NodeRef a = cands[static_cast<std::size_t>(t) % cands.size()];
      const auto r = ep.deploy(a);
      pure = fuse(pure, u, list, w.embeddings.vector(a), fusion_side(a.kind));
      const RecList next = top_k(pure, u, 4, e.excluded(u));
      EXPECT_EQ(r.list.items, next.items);
      const double drop = e.list_disparity(ep.original()) - e.list_disparity(next);
      EXPECT_NEAR(r.drop, drop, 1e-12);
      // drop is measured from the original list, proximity from the pristine factors
      double item_sim = 0;
      for (Index v : list.items) item_sim += cosine_similarity(w.factors.item.row(v).transpose(), pure.item.row(v).transpose());
      item_sim /= static_cast<double>(list.items.size());
      const double user_sim = cosine_similarity(w.factors.user.row(u).transpose(), pure.user.row(u).transpose());
      EXPECT_NEAR(r.reward, (drop >= 0.2 ? 1.0 : 0.0) + user_sim + item_sim, 1e-12);
      list = next;
      const auto after = ep.candidates();
      EXPECT_EQ(std::count(after.begin(), after.end(), a), 0);
    }
  }
}

TEST_F(ExplainerWorld, InfiniteEpsilonNeverPaysBonus) {
  const auto e = env(std::numeric_limits<double>::infinity());
  std::mt19937_64 rng(28);
  for (Index u = 0; u < 8; ++u) {
    auto ep = e.begin(u);
    for (int t = 0; t < 5; ++t) {
      const auto c = ep.candidates();
      if (c.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, c.size() - 1);
      EXPECT_LE(ep.deploy(c[pick(rng)]).reward, 2.0);
    }
  }
  ExplainerConfig cfg;
  cfg.episodes = 10;
  ExplainerDiagnostics diag;
  train_explainer(e, PolicyParams::init(small_policy(4, 4), 1), cfg, &diag);
  for (double r : diag.episode_return) EXPECT_LE(r, 2.0 * kDefaultClip * cfg.horizon);
}

TEST_F(ExplainerWorld, ZeroEpisodesReturnsInitialPolicy) {
  const auto e = env(0.0);
  const auto p0 = PolicyParams::init(small_policy(4, 4), 2);
  ExplainerConfig cfg;
  cfg.episodes = 0;
  EXPECT_TRUE(same_policy(train_explainer(e, p0, cfg), p0));
}

TEST_F(ExplainerWorld, TrainingIsSeededAndChangesTheHead) {
  const auto e = env(0.5);
  const auto p0 = PolicyParams::init(small_policy(4, 4), 3);
  ExplainerConfig cfg;
  cfg.episodes = 30;
  cfg.batch_size = 4;
  ExplainerDiagnostics d1;
  const auto a = train_explainer(e, p0, cfg, &d1);
  const auto b = train_explainer(e, p0, cfg);
  EXPECT_TRUE(same_policy(a, b));
  EXPECT_GT((a.head - p0.head).norm(), 0.0);
  EXPECT_EQ(d1.episode_return.size() + d1.skipped_users, 30u);
}

TEST_F(ExplainerWorld, MismatchedPolicyShapeRejected) {
  const auto e = env(0.0);
  try {
    train_explainer(e, PolicyParams::init(small_policy(5, 4), 1), ExplainerConfig{});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kShape);
  }
}

TEST_F(ExplainerWorld, ZeroBudgetGivesEmptyInvalidSet) {
  const auto e = env(0.0);
  const auto s = extract_explanations(PolicyParams::init(small_policy(4, 4), 1), e, 0, 0);
  EXPECT_TRUE(s.attributes.empty());
  EXPECT_FALSE(s.valid);
}

TEST_F(ExplainerWorld, ValidSetsAreShortestValidPrefix) {
  for (double eps : {0.0, 0.5, 2.0, 1e9}) {
    const auto e = env(eps);
    const auto p = PolicyParams::init(small_policy(4, 4), 4);
    for (Index u = 0; u < 8; ++u) {
      const auto s = extract_explanations(p, e, u, 5);
      const auto ranked = rank_attributes(p, e, u, 5);
      if (!s.valid) {
        EXPECT_TRUE(s.attributes.empty());
        continue;
      }
      ASSERT_LE(s.attributes.size(), ranked.size());
      for (std::size_t i = 0; i < s.attributes.size(); ++i) {
        EXPECT_EQ(s.attributes[i].attribute, ranked[i]);
        if (i + 1 < s.attributes.size()) EXPECT_LT(s.attributes[i].disparity_drop, eps);
      }
      EXPECT_GE(s.attributes.back().disparity_drop, eps);
    }
  }
}

TEST(Extraction, NeutralDeploymentWithZeroEpsilonIsSingleton) {
  auto w = ts::random_world(5, 12, 2, 4, 3, 29);
  w.embeddings.values().setOnes();
  DisparityConfig cfg;
  cfg.epsilon = 0.0;
  const ExplanationEnvironment env(w.hin, w.factors, w.embeddings, w.groups, w.toy.log, 3, cfg);
  const auto p = PolicyParams::init(small_policy(3, 3), 5);
  std::size_t checked = 0;
  for (Index u = 0; u < 5; ++u) {
    if (env.begin(u).candidates().empty()) continue;
    const auto s = extract_explanations(p, env, u, 5);
    EXPECT_TRUE(s.valid);
    EXPECT_EQ(s.attributes.size(), 1u);
    ++checked;
  }
  EXPECT_GT(checked, 0u);
}

// ---- persistence ----------------------------------------------------------

TEST(Explanations, JsonLinesRoundTrip) {
  std::vector<ExplanationSet> sets(2);
  sets[0].user = 3;
  sets[0].valid = true;
  sets[0].attributes = {{{NodeKind::kItemAttribute, 4}, 0.125}, {{NodeKind::kUserAttribute, 1}, 2.5}};
  sets[1].user = 7;
  std::stringstream buf;
  write_explanations(buf, sets);
  const std::string text = buf.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_NE(text.find("\"user_id\":3"), std::string::npos);
  const auto back = read_explanations(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].user, 3u);
  EXPECT_TRUE(back[0].valid);
  ASSERT_EQ(back[0].attributes.size(), 2u);
  EXPECT_EQ(back[0].attributes[1].attribute, (NodeRef{NodeKind::kUserAttribute, 1}));
  EXPECT_EQ(back[0].attributes[0].disparity_drop, 0.125);
  EXPECT_FALSE(back[1].valid);
}

TEST(Explanations, MalformedLineIsParseError) {
  std::stringstream buf("{\"user_id\":1,\"attributes\":[],\"valid\":true}\nnot json\n");
  try {
    read_explanations(buf);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(PolicyCheckpoint, RoundTripBothFormats) {
  auto p = PolicyParams::init(small_policy(3, 5), 30);
  std::mt19937_64 rng(30);
  p.head = ts::random_matrix(4, 5, rng);
  p.config.end_to_end = false;
  for (auto fmt : {CheckpointFormat::kText, CheckpointFormat::kBinary}) {
    std::stringstream buf;
    write_checkpoint(buf, policy_to_checkpoint(p), fmt);
    const auto q = policy_from_checkpoint(read_checkpoint(buf));
    EXPECT_TRUE(same_policy(p, q));
    EXPECT_FALSE(q.config.end_to_end);
    EXPECT_EQ(q.config.candidate_size, 4u);
  }
}

TEST(PolicyCheckpoint, WrongKindRejected) {
  Checkpoint ck;
  ck.kind = "factors";
  EXPECT_THROW(policy_from_checkpoint(ck), Error);
}
