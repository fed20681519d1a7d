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

#include <algorithm>
#include <cmath>

#include "fairex/cfe.hpp"
#include "fairex/error.hpp"

namespace fairex {
namespace {

constexpr std::uint64_t kPolicyStream = 0x3001;

RowMatrix as_column(const Vector& v) {
  RowMatrix m(v.size(), 1);
  m.col(0) = v;
  return m;
}

Vector from_column(const RowMatrix& m) {
  if (m.cols() != 1) throw Error(ErrorCode::kFormat, "expected a column block");
  return m.col(0);
}

double log_sum_exp(const Vector& x) {
  const double mx = x.maxCoeff();
  return mx + std::log((x.array() - mx).exp().sum());
}

}  // namespace

void PolicyConfig::validate() const {
  if (list_length == 0 || embed_dim == 0 || state_dim == 0 || attention_dim == 0) {
    throw Error(ErrorCode::kConfig, "policy dimensions must be positive");
  }
  if (candidate_size == 0) throw Error(ErrorCode::kConfig, "candidate size must be at least 1");
}

PolicyParams PolicyParams::init(const PolicyConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, kPolicyStream));
  PolicyParams p;
  p.config = config;
  p.gru = GruParams::init(config.list_length * config.embed_dim, config.state_dim, rng);
  p.attention = AttentionParams::init(config.attention_dim, config.state_dim,
                                      config.embed_dim, rng);
  // A zero head starts the target policy uniform over the candidates.
  p.head = RowMatrix::Zero(static_cast<Eigen::Index>(config.state_dim),
                           static_cast<Eigen::Index>(config.embed_dim));
  return p;
}

RowMatrix gather_embeddings(const EmbeddingTable& embeddings, std::span<const NodeRef> nodes) {
  RowMatrix m(static_cast<Eigen::Index>(nodes.size()),
              static_cast<Eigen::Index>(embeddings.dim()));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = embeddings.row(nodes[i]);
  }
  return m;
}

Vector policy_distribution(const Vector& s, const RowMatrix& action_embeddings,
                           const RowMatrix& head) {
  if (action_embeddings.rows() == 0) {
    throw Error(ErrorCode::kEmptyCandidate, "policy has no candidate actions");
  }
  if (head.rows() != s.size() || head.cols() != action_embeddings.cols()) {
    throw Error(ErrorCode::kShape, "policy head does not match state or embedding width");
  }
  const Vector logits = action_embeddings * (head.transpose() * s);
  return softmax(logits);
}

Vector policy_distribution(const CfeState& state, const CandidateSet& candidates,
                           const EmbeddingTable& embeddings, const PolicyParams& params) {
  return policy_distribution(state.s, gather_embeddings(embeddings, candidates.actions),
                             params.head);
}

double cosine_similarity(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double reward_from_parts(double disparity_drop, double epsilon, double user_similarity,
                         double item_similarity) {
  const double bonus = disparity_drop >= epsilon ? 1.0 : 0.0;
  return bonus + user_similarity + item_similarity;
}

double counterfactual_reward(const LatentFactors& before, const LatentFactors& after,
                             Index user, const RecList& list_before,
                             const RecList& list_after, const GroupSplit& groups,
                             const DisparityConfig& config) {
  const double drop =
      disparity(list_before, groups, config) - disparity(list_after, groups, config);
  const double user_sim = cosine_similarity(before.user.row(user).transpose(),
                                            after.user.row(user).transpose());
  double item_sim = 0.0;
  if (!list_before.items.empty()) {
    for (Index v : list_before.items) {
      item_sim += cosine_similarity(before.item.row(v).transpose(), after.item.row(v).transpose());
    }
    item_sim /= static_cast<double>(list_before.items.size());
  }
  return reward_from_parts(drop, config.epsilon, user_sim, item_sim);
}

double propensity_weight(double pi_e, double pi_0, double clip) {
  if (!(pi_0 > 0.0)) {
    throw Error(ErrorCode::kPropensity,
                fmt::format("logging propensity {} is not positive", pi_0));
  }
  return std::clamp(pi_e / pi_0, 0.0, clip);
}

double crm_return(const Trajectory& traj, double clip) {
  double total = 0.0;
  double discount = 1.0;
  for (const auto& step : traj.steps) {
    total += discount * propensity_weight(step.pi_e, step.pi_0, clip) * step.reward;
    discount *= traj.gamma;
  }
  return total;
}

PolicyGradient PolicyGradient::zeros_like(const PolicyParams& params) {
  PolicyGradient g;
  g.gru = GruParams::zeros(params.gru.input_dim(), params.gru.state_dim());
  g.head = RowMatrix::Zero(params.head.rows(), params.head.cols());
  return g;
}

double PolicyGradient::squared_norm() const {
  double n = head.squaredNorm();
  for (int k = 0; k < 3; ++k) {
    n += gru.W[k].squaredNorm() + gru.U[k].squaredNorm() + gru.b[k].squaredNorm();
  }
  return n;
}

namespace {

// Shared pass for the surrogate objective and its gradient.
double policy_pass(const PolicyParams& params, std::span<const Trajectory> batch, double clip,
                   PolicyGradient* grad) {
  if (batch.empty()) throw Error(ErrorCode::kConfig, "policy update needs trajectories");
  double objective = 0.0;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const auto h = static_cast<Eigen::Index>(params.gru.state_dim());

  for (const auto& traj : batch) {
    const std::size_t T = traj.steps.size();
    if (T == 0) continue;
    std::vector<GruCache> caches(T);
    std::vector<Vector> direct(T, Vector::Zero(h));
    Vector s = Vector::Zero(h);
    double discount = 1.0;
    for (std::size_t t = 0; t < T; ++t) {
      const auto& step = traj.steps[t];
      s = gru_step(params.gru, step.input, s, &caches[t]);
      const double w = propensity_weight(step.pi_e, step.pi_0, clip);
      const double coef = discount * w * step.reward * inv_batch / static_cast<double>(T);
      discount *= traj.gamma;
      if (step.action_index == TrajectoryStep::npos || coef == 0.0) continue;

      const RowMatrix& E = step.action_embeddings;
      const Vector projected = params.head.transpose() * s;
      const Vector logits = E * projected;
      const auto a = static_cast<Eigen::Index>(step.action_index);
      objective += coef * (logits[a] - log_sum_exp(logits));
      if (!grad) continue;
      const Vector probs = softmax(logits);
      // d log pi(a) / d logits = onehot(a) - probs; logits = E W_p^T s.
      const Vector centered = E.row(a).transpose() - E.transpose() * probs;
      grad->head.noalias() += coef * s * centered.transpose();
      direct[t] = coef * (params.head * centered);
    }
    if (grad && params.config.end_to_end) {
      Vector carried = Vector::Zero(h);
      for (std::size_t step = 0; step < T; ++step) {
        const std::size_t t = T - 1 - step;
        carried = gru_backward(params.gru, caches[t], direct[t] + carried, grad->gru);
      }
    }
  }
  return objective;
}

}  // namespace

double policy_objective(const PolicyParams& params, std::span<const Trajectory> batch,
                        double clip) {
  return policy_pass(params, batch, clip, nullptr);
}

PolicyGradient policy_gradient(const PolicyParams& params, std::span<const Trajectory> batch,
                               double clip) {
  PolicyGradient g = PolicyGradient::zeros_like(params);
  policy_pass(params, batch, clip, &g);
  return g;
}

PolicyParams reinforce_step(const PolicyParams& params, std::span<const Trajectory> batch,
                            double learning_rate, double clip) {
  const PolicyGradient g = policy_gradient(params, batch, clip);
  if (!std::isfinite(g.squared_norm())) {
    throw Error(ErrorCode::kTraining, "policy gradient is not finite");
  }
  PolicyParams out = params;
  out.head += learning_rate * g.head;
  if (params.config.end_to_end) {
    for (int k = 0; k < 3; ++k) {
      out.gru.W[k] += learning_rate * g.gru.W[k];
      out.gru.U[k] += learning_rate * g.gru.U[k];
      out.gru.b[k] += learning_rate * g.gru.b[k];
    }
  }
  return out;
}

Checkpoint policy_to_checkpoint(const PolicyParams& p) {
  Checkpoint ck;
  ck.kind = "policy";
  const auto& c = p.config;
  ck.set_meta("list_length", std::to_string(c.list_length));
  ck.set_meta("embed_dim", std::to_string(c.embed_dim));
  ck.set_meta("state_dim", std::to_string(c.state_dim));
  ck.set_meta("attention_dim", std::to_string(c.attention_dim));
  ck.set_meta("candidate_size", std::to_string(c.candidate_size));
  ck.set_meta("end_to_end", c.end_to_end ? "1" : "0");
  for (int k = 0; k < 3; ++k) {
    ck.add_block(fmt::format("gru.W{}", k), p.gru.W[k]);
    ck.add_block(fmt::format("gru.U{}", k), p.gru.U[k]);
    ck.add_block(fmt::format("gru.b{}", k), as_column(p.gru.b[k]));
  }
  ck.add_block("attention.Ws", p.attention.Ws);
  ck.add_block("attention.Wh", p.attention.Wh);
  ck.add_block("attention.b", as_column(p.attention.b));
  ck.add_block("head", p.head);
  return ck;
}

PolicyParams policy_from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != "policy") {
    throw Error(ErrorCode::kFormat, fmt::format("expected a policy checkpoint, got '{}'", ck.kind));
  }
  PolicyParams p;
  auto& c = p.config;
  c.list_length = std::stoull(ck.meta_value("list_length"));
  c.embed_dim = std::stoull(ck.meta_value("embed_dim"));
  c.state_dim = std::stoull(ck.meta_value("state_dim"));
  c.attention_dim = std::stoull(ck.meta_value("attention_dim"));
  c.candidate_size = std::stoull(ck.meta_value("candidate_size"));
  c.end_to_end = ck.meta_value("end_to_end") == "1";
  for (int k = 0; k < 3; ++k) {
    p.gru.W[k] = ck.block(fmt::format("gru.W{}", k));
    p.gru.U[k] = ck.block(fmt::format("gru.U{}", k));
    p.gru.b[k] = from_column(ck.block(fmt::format("gru.b{}", k)));
  }
  p.attention.Ws = ck.block("attention.Ws");
  p.attention.Wh = ck.block("attention.Wh");
  p.attention.b = from_column(ck.block("attention.b"));
  p.head = ck.block("head");
  if (p.gru.input_dim() != c.list_length * c.embed_dim || p.gru.state_dim() != c.state_dim ||
      static_cast<std::size_t>(p.head.cols()) != c.embed_dim) {
    throw Error(ErrorCode::kFormat, "policy blocks disagree with the header");
  }
  return p;
}

}  // namespace fairex
