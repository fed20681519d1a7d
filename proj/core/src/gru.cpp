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
#include <numeric>

#include "fairex/cfe.hpp"
#include "fairex/error.hpp"

namespace fairex {
namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

RowMatrix uniform_matrix(std::size_t rows, std::size_t cols, double a, Rng& rng) {
  std::uniform_real_distribution<double> dist(-a, a);
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace

GruParams GruParams::zeros(std::size_t input_dim, std::size_t state_dim) {
  GruParams p;
  const auto h = static_cast<Eigen::Index>(state_dim);
  for (int g = 0; g < 3; ++g) {
    p.W[g] = RowMatrix::Zero(h, static_cast<Eigen::Index>(input_dim));
    p.U[g] = RowMatrix::Zero(h, h);
    p.b[g] = Vector::Zero(h);
  }
  return p;
}

GruParams GruParams::init(std::size_t input_dim, std::size_t state_dim, Rng& rng) {
  // Same scale as the usual recurrent-layer default, 1/sqrt(state).
  const double a = 1.0 / std::sqrt(static_cast<double>(state_dim));
  GruParams p = zeros(input_dim, state_dim);
  for (int g = 0; g < 3; ++g) {
    p.W[g] = uniform_matrix(state_dim, input_dim, a, rng);
    p.U[g] = uniform_matrix(state_dim, state_dim, a, rng);
  }
  return p;
}

Vector gru_step(const GruParams& p, const Vector& x, const Vector& s_prev, GruCache* cache) {
  if (static_cast<std::size_t>(x.size()) != p.input_dim() ||
      static_cast<std::size_t>(s_prev.size()) != p.state_dim()) {
    throw Error(ErrorCode::kShape,
                fmt::format("GRU expects input {} and state {}, got {} and {}", p.input_dim(),
                            p.state_dim(), x.size(), s_prev.size()));
  }
  Vector u = (p.W[0] * x + p.U[0] * s_prev + p.b[0]).unaryExpr(&sigmoid);
  Vector r = (p.W[1] * x + p.U[1] * s_prev + p.b[1]).unaryExpr(&sigmoid);
  Vector reset = r.cwiseProduct(s_prev);
  Vector s_hat = (p.W[2] * x + p.U[2] * reset + p.b[2]).array().tanh().matrix();
  Vector s = (1.0 - u.array()) * s_prev.array() + u.array() * s_hat.array();
  if (cache) {
    cache->x = x;
    cache->s_prev = s_prev;
    cache->u = std::move(u);
    cache->r = std::move(r);
    cache->s_hat = std::move(s_hat);
  }
  return s;
}

Vector gru_backward(const GruParams& p, const GruCache& c, const Vector& ds, GruParams& grad) {
  Vector ds_prev = ds.cwiseProduct((1.0 - c.u.array()).matrix());
  const Vector du = ds.cwiseProduct(c.s_hat - c.s_prev);
  const Vector dhat = ds.cwiseProduct(c.u);

  const Vector da3 = dhat.cwiseProduct((1.0 - c.s_hat.array().square()).matrix());
  const Vector reset = c.r.cwiseProduct(c.s_prev);
  grad.W[2].noalias() += da3 * c.x.transpose();
  grad.U[2].noalias() += da3 * reset.transpose();
  grad.b[2] += da3;
  const Vector dreset = p.U[2].transpose() * da3;
  const Vector dr = dreset.cwiseProduct(c.s_prev);
  ds_prev += dreset.cwiseProduct(c.r);

  const Vector da1 = du.cwiseProduct((c.u.array() * (1.0 - c.u.array())).matrix());
  grad.W[0].noalias() += da1 * c.x.transpose();
  grad.U[0].noalias() += da1 * c.s_prev.transpose();
  grad.b[0] += da1;
  ds_prev.noalias() += p.U[0].transpose() * da1;

  const Vector da2 = dr.cwiseProduct((c.r.array() * (1.0 - c.r.array())).matrix());
  grad.W[1].noalias() += da2 * c.x.transpose();
  grad.U[1].noalias() += da2 * c.s_prev.transpose();
  grad.b[1] += da2;
  ds_prev.noalias() += p.U[1].transpose() * da2;
  return ds_prev;
}

CfeState initial_state(Index user, const RecList& list, std::size_t state_dim) {
  CfeState s;
  s.user = user;
  s.list = list;
  s.s = Vector::Zero(static_cast<Eigen::Index>(state_dim));
  s.t = 0;
  return s;
}

Vector encode_list(const EmbeddingTable& embeddings, const RecList& list) {
  const auto d = static_cast<Eigen::Index>(embeddings.dim());
  Vector x(d * static_cast<Eigen::Index>(list.items.size()));
  for (std::size_t k = 0; k < list.items.size(); ++k) {
    x.segment(static_cast<Eigen::Index>(k) * d, d) =
        embeddings.row(NodeRef{NodeKind::kItem, list.items[k]}).transpose();
  }
  return x;
}

CfeState encode_state(const CfeState& prev, const RecList& list,
                      const EmbeddingTable& embeddings, const GruParams& params) {
  CfeState next;
  next.user = prev.user;
  next.list = list;
  next.s = gru_step(params, encode_list(embeddings, list), prev.s);
  next.t = prev.t + 1;
  return next;
}

std::vector<NodeRef> candidate_attributes(const Hin& hin, Index user, const RecList& list) {
  std::vector<NodeRef> out = hin.attributes_of(NodeRef{NodeKind::kUser, user});
  for (Index v : list.items) {
    auto attrs = hin.attributes_of(NodeRef{NodeKind::kItem, v});
    out.insert(out.end(), attrs.begin(), attrs.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

AttentionParams AttentionParams::init(std::size_t attention_dim, std::size_t state_dim,
                                      std::size_t embed_dim, Rng& rng) {
  AttentionParams p;
  p.Ws = uniform_matrix(attention_dim, state_dim,
                        std::sqrt(6.0 / static_cast<double>(attention_dim + state_dim)), rng);
  p.Wh = uniform_matrix(attention_dim, embed_dim,
                        std::sqrt(6.0 / static_cast<double>(attention_dim + embed_dim)), rng);
  p.b = Vector::Zero(static_cast<Eigen::Index>(attention_dim));
  return p;
}

double attention_logit(const AttentionParams& p, const Vector& s, const Vector& e) {
  if (s.size() != p.Ws.cols() || e.size() != p.Wh.cols()) {
    throw Error(ErrorCode::kShape, "attention input dimensions do not match");
  }
  return (p.Ws * s + p.Wh * e + p.b).cwiseMax(0.0).sum();
}

Vector softmax(const Vector& logits) {
  if (logits.size() == 0) return logits;
  const double mx = logits.maxCoeff();
  Vector w = (logits.array() - mx).exp().matrix();
  return w / w.sum();
}

Vector attention_scores(const Vector& s, std::span<const NodeRef> attributes,
                        const EmbeddingTable& embeddings, const AttentionParams& params) {
  if (attributes.empty()) throw Error(ErrorCode::kEmptyCandidate, "no candidate attributes");
  Vector logits(static_cast<Eigen::Index>(attributes.size()));
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    logits[static_cast<Eigen::Index>(i)] =
        attention_logit(params, s, embeddings.vector(attributes[i]));
  }
  return softmax(logits);
}

CandidateSet prune_actions(std::span<const NodeRef> attributes, const Vector& weights,
                           std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kConfig, "candidate size must be at least 1");
  if (static_cast<std::size_t>(weights.size()) != attributes.size()) {
    throw Error(ErrorCode::kShape, "one weight per attribute expected");
  }
  std::vector<std::size_t> order(attributes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double wa = weights[static_cast<Eigen::Index>(a)];
    const double wb = weights[static_cast<Eigen::Index>(b)];
    if (wa != wb) return wa > wb;
    return attributes[a] < attributes[b];
  });
  CandidateSet c;
  c.size_limit = n;
  for (std::size_t i = 0; i < std::min(n, order.size()); ++i) {
    c.actions.push_back(attributes[order[i]]);
    c.weights.push_back(weights[static_cast<Eigen::Index>(order[i])]);
  }
  return c;
}

}  // namespace fairex
