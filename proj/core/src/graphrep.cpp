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

#include "fairex/graphrep.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairex/error.hpp"

namespace fairex {
namespace {

constexpr std::uint64_t kBucketStream = 0x2001;
constexpr std::uint64_t kParamStream = 0x2002;
constexpr std::uint64_t kSampleStream = 0x2003;
constexpr std::uint64_t kDropoutStream = 0x2004;

std::array<std::size_t, kNumNodeKinds> counts_of(const Hin& hin) {
  std::array<std::size_t, kNumNodeKinds> c{};
  for (NodeKind k : kAllNodeKinds) c[kind_index(k)] = hin.num_nodes(k);
  return c;
}

RowMatrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-a, a);
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void append_pointers(RowMatrix& m, std::vector<double*>& out) {
  for (Eigen::Index i = 0; i < m.size(); ++i) out.push_back(m.data() + i);
}

void append_pointers(Vector& v, std::vector<double*>& out) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v.data() + i);
}

void append_layer_pointers(LayerParams& p, std::vector<double*>& out) {
  for (auto& w : p.node_weight) append_pointers(w, out);
  for (auto& w : p.relation_weight) append_pointers(w, out);
  append_pointers(p.bias, out);
}

LayerParams zero_layer_like(const LayerParams& p) {
  LayerParams z;
  z.in_dim = p.in_dim;
  z.out_dim = p.out_dim;
  z.dropout = p.dropout;
  for (std::size_t k = 0; k < kNumNodeKinds; ++k) {
    z.node_weight[k] = RowMatrix::Zero(p.node_weight[k].rows(), p.node_weight[k].cols());
  }
  for (const auto& w : p.relation_weight) {
    z.relation_weight.push_back(RowMatrix::Zero(w.rows(), w.cols()));
  }
  z.bias = Vector::Zero(p.bias.size());
  return z;
}

}  // namespace

EmbeddingTable::EmbeddingTable(const std::array<std::size_t, kNumNodeKinds>& counts,
                               std::size_t dim) {
  offsets_[0] = 0;
  for (std::size_t k = 0; k < kNumNodeKinds; ++k) offsets_[k + 1] = offsets_[k] + counts[k];
  values_ = RowMatrix::Zero(static_cast<Eigen::Index>(offsets_[kNumNodeKinds]),
                            static_cast<Eigen::Index>(dim));
}

EmbeddingTable EmbeddingTable::zeros_like(const Hin& hin, std::size_t dim) {
  return EmbeddingTable(counts_of(hin), dim);
}

Eigen::Index EmbeddingTable::checked_row(NodeRef node) const {
  if (!contains(node)) {
    throw Error(ErrorCode::kReference,
                fmt::format("no embedding for {} {}", to_string(node.kind), node.id));
  }
  return static_cast<Eigen::Index>(offset(node.kind) + node.id);
}

Vector EmbeddingTable::vector(NodeRef node) const {
  return values_.row(checked_row(node)).transpose();
}

RowMatrix EmbeddingTable::block(NodeKind kind) const {
  return values_.middleRows(static_cast<Eigen::Index>(offset(kind)),
                            static_cast<Eigen::Index>(count(kind)));
}

bool EmbeddingTable::operator==(const EmbeddingTable& other) const {
  return offsets_ == other.offsets_ && values_.rows() == other.values_.rows() &&
         values_.cols() == other.values_.cols() && values_ == other.values_;
}

std::size_t bucket_of(NodeRef node, std::size_t buckets, std::uint64_t seed) {
  const auto s = derive_seed(derive_seed(seed, kBucketStream + kind_index(node.kind)), node.id);
  return static_cast<std::size_t>(s % buckets);
}

EmbeddingTable init_node_embeddings(const Hin& hin, std::size_t d0, std::uint64_t seed) {
  std::vector<NodeKind> present;
  for (NodeKind k : kAllNodeKinds) {
    if (hin.num_nodes(k) > 0) present.push_back(k);
  }
  if (d0 < present.size() + 1) {
    throw Error(ErrorCode::kCapacity,
                fmt::format("input dimension {} cannot hold {} kind slots and a bucket block",
                            d0, present.size()));
  }
  const std::size_t buckets = d0 - present.size();
  EmbeddingTable table = EmbeddingTable::zeros_like(hin, d0);
  for (std::size_t slot = 0; slot < present.size(); ++slot) {
    const NodeKind kind = present[slot];
    for (Index id = 0; id < hin.num_nodes(kind); ++id) {
      auto row = table.row(NodeRef{kind, id});
      row[static_cast<Eigen::Index>(slot)] = 1.0;
      row[static_cast<Eigen::Index>(present.size() + bucket_of({kind, id}, buckets, seed))] =
          1.0;
    }
  }
  return table;
}

void LayerParams::validate() const {
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(ErrorCode::kConfig, fmt::format("dropout {} outside [0, 1)", dropout));
  }
  auto check = [&](const RowMatrix& m, std::size_t rows, const char* what) {
    if (static_cast<std::size_t>(m.rows()) != rows ||
        static_cast<std::size_t>(m.cols()) != in_dim) {
      throw Error(ErrorCode::kShape,
                  fmt::format("{} weight is {}x{}, expected {}x{}", what, m.rows(), m.cols(),
                              rows, in_dim));
    }
  };
  for (const auto& w : node_weight) check(w, self_dim(), "node-kind");
  for (const auto& w : relation_weight) check(w, neighbor_dim(), "relation");
  if (static_cast<std::size_t>(bias.size()) != out_dim) {
    throw Error(ErrorCode::kShape, "bias length differs from the output dimension");
  }
}

LayerParams init_layer(std::size_t in_dim, std::size_t out_dim, std::size_t num_relations,
                       double dropout, Rng& rng) {
  if (out_dim < 2) throw Error(ErrorCode::kConfig, "layer width must be at least 2");
  LayerParams p;
  p.in_dim = in_dim;
  p.out_dim = out_dim;
  p.dropout = dropout;
  for (auto& w : p.node_weight) w = glorot(p.self_dim(), in_dim, rng);
  for (std::size_t r = 0; r < num_relations; ++r) {
    p.relation_weight.push_back(glorot(p.neighbor_dim(), in_dim, rng));
  }
  p.bias = Vector::Zero(static_cast<Eigen::Index>(out_dim));
  return p;
}

std::size_t GraphOperators::offset(NodeKind kind) const {
  std::size_t off = 0;
  for (std::size_t k = 0; k < kind_index(kind); ++k) off += counts[k];
  return off;
}

GraphOperators GraphOperators::from_edges(
    const std::array<std::size_t, kNumNodeKinds>& counts, std::span<const TypedEdge> edges,
    std::size_t num_relations) {
  GraphOperators ops;
  ops.counts = counts;
  std::array<std::size_t, kNumNodeKinds> offsets{};
  std::size_t total = 0;
  for (std::size_t k = 0; k < kNumNodeKinds; ++k) {
    offsets[k] = total;
    total += counts[k];
    for (std::size_t i = 0; i < counts[k]; ++i) ops.row_kind.push_back(kAllNodeKinds[k]);
  }
  auto global = [&](NodeRef n) { return offsets[kind_index(n.kind)] + n.id; };

  std::vector<std::vector<Eigen::Triplet<double>>> triplets(num_relations);
  std::vector<std::vector<double>> degree(num_relations, std::vector<double>(total, 0.0));
  for (const TypedEdge& e : edges) {
    if (e.relation >= num_relations) {
      throw Error(ErrorCode::kReference, fmt::format("relation {} unregistered", e.relation));
    }
    const auto a = global(e.src);
    const auto b = global(e.dst);
    degree[e.relation][a] += 1.0;
    degree[e.relation][b] += 1.0;
  }
  for (const TypedEdge& e : edges) {
    const auto a = global(e.src);
    const auto b = global(e.dst);
    triplets[e.relation].emplace_back(static_cast<int>(a), static_cast<int>(b),
                                      1.0 / degree[e.relation][a]);
    triplets[e.relation].emplace_back(static_cast<int>(b), static_cast<int>(a),
                                      1.0 / degree[e.relation][b]);
  }
  for (std::size_t r = 0; r < num_relations; ++r) {
    Eigen::SparseMatrix<double, Eigen::RowMajor> m(static_cast<Eigen::Index>(total),
                                                   static_cast<Eigen::Index>(total));
    m.setFromTriplets(triplets[r].begin(), triplets[r].end());  // duplicates are summed
    ops.mean_adjacency.push_back(std::move(m));
  }
  return ops;
}

GraphOperators GraphOperators::from(const Hin& hin) {
  return from_edges(counts_of(hin), hin.edges(), hin.relations().size());
}

RowMatrix layer_forward(const GraphOperators& ops, const RowMatrix& input,
                        const LayerParams& params, bool train, Rng* rng, LayerCache* cache) {
  params.validate();
  if (static_cast<std::size_t>(input.cols()) != params.in_dim ||
      static_cast<std::size_t>(input.rows()) != ops.size()) {
    throw Error(ErrorCode::kShape,
                fmt::format("layer input is {}x{}, expected {}x{}", input.rows(),
                            input.cols(), ops.size(), params.in_dim));
  }
  if (params.relation_weight.size() != ops.mean_adjacency.size()) {
    throw Error(ErrorCode::kShape, "relation weight count differs from the graph's relations");
  }
  LayerCache local;
  LayerCache& c = cache ? *cache : local;
  if (train && rng && params.dropout > 0.0) {
    std::bernoulli_distribution keep(1.0 - params.dropout);
    const double scale = 1.0 / (1.0 - params.dropout);
    c.mask.resize(input.rows(), input.cols());
    for (Eigen::Index i = 0; i < c.mask.size(); ++i) {
      c.mask.data()[i] = keep(*rng) ? scale : 0.0;
    }
    c.dropped = input.cwiseProduct(c.mask);
  } else {
    c.mask.resize(0, 0);
    c.dropped = input;
  }

  const auto self = static_cast<Eigen::Index>(params.self_dim());
  const auto nb = static_cast<Eigen::Index>(params.neighbor_dim());
  c.pre.resize(input.rows(), static_cast<Eigen::Index>(params.out_dim));
  for (NodeKind k : kAllNodeKinds) {
    const auto off = static_cast<Eigen::Index>(ops.offset(k));
    const auto n = static_cast<Eigen::Index>(ops.counts[kind_index(k)]);
    if (n == 0) continue;
    c.pre.block(off, 0, n, self).noalias() =
        c.dropped.middleRows(off, n) * params.node_weight[kind_index(k)].transpose();
  }
  auto neighbor = c.pre.rightCols(nb);
  neighbor.setZero();
  for (std::size_t r = 0; r < ops.mean_adjacency.size(); ++r) {
    if (ops.mean_adjacency[r].nonZeros() == 0) continue;
    RowMatrix mean = ops.mean_adjacency[r] * c.dropped;
    neighbor.noalias() += mean * params.relation_weight[r].transpose();
  }
  c.pre.rowwise() += params.bias.transpose();
  return c.pre.unaryExpr([](double x) { return x > 0 ? x : kLeakySlope * x; });
}

EmbeddingTable layer_forward(const Hin& hin, const EmbeddingTable& input,
                             const LayerParams& params, bool train, Rng* rng) {
  const auto ops = GraphOperators::from(hin);
  EmbeddingTable out = EmbeddingTable::zeros_like(hin, params.out_dim);
  out.values() = layer_forward(ops, input.values(), params, train, rng, nullptr);
  return out;
}

EmbeddingTable aggregate_layers(const std::vector<EmbeddingTable>& layers) {
  if (layers.empty()) throw Error(ErrorCode::kShape, "no layers to aggregate");
  EmbeddingTable out = layers.front();
  for (std::size_t l = 1; l < layers.size(); ++l) {
    const auto& t = layers[l];
    if (t.size() != out.size() || t.dim() != out.dim()) {
      throw Error(ErrorCode::kShape,
                  fmt::format("layer {} is {}x{}, layer 0 is {}x{}", l, t.size(), t.dim(),
                              out.size(), out.dim()));
    }
    for (NodeKind k : kAllNodeKinds) {
      if (t.count(k) != out.count(k)) throw Error(ErrorCode::kShape, "layer node counts differ");
    }
    out.values() += t.values();
  }
  return out;
}

void GraphConfig::validate() const {
  if (input_dim == 0 || output_dim == 0) {
    throw Error(ErrorCode::kConfig, "graph dimensions must be positive");
  }
  if (layer_dims.empty()) throw Error(ErrorCode::kConfig, "graph needs at least one layer");
  for (auto d : layer_dims) {
    if (d < 2) throw Error(ErrorCode::kConfig, "graph layer width must be at least 2");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(ErrorCode::kConfig, fmt::format("dropout {} outside [0, 1)", dropout));
  }
}

GraphModel GraphModel::init(const GraphConfig& config, std::size_t num_relations,
                            std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, kParamStream));
  GraphModel m;
  m.config = config;
  std::size_t in = config.input_dim;
  for (auto d : config.layer_dims) {
    m.layers.push_back(init_layer(in, d, num_relations, config.dropout, rng));
    m.projections.push_back(d == config.output_dim ? RowMatrix()
                                                   : glorot(config.output_dim, d, rng));
    in = d;
  }
  return m;
}

RowMatrix GraphModel::forward(const GraphOperators& ops, const RowMatrix& input, bool train,
                              Rng* rng, std::vector<LayerCache>* caches,
                              std::vector<RowMatrix>* outputs) const {
  if (caches) caches->assign(layers.size(), LayerCache{});
  if (outputs) outputs->clear();
  RowMatrix h = input;
  RowMatrix sum = RowMatrix::Zero(input.rows(), static_cast<Eigen::Index>(config.output_dim));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = layer_forward(ops, h, layers[l], train, rng, caches ? &(*caches)[l] : nullptr);
    if (outputs) outputs->push_back(h);
    if (projections[l].size() == 0) {
      sum += h;
    } else {
      sum.noalias() += h * projections[l].transpose();
    }
  }
  return sum;
}

EmbeddingTable GraphModel::embed(const Hin& hin, const EmbeddingTable& input) const {
  const auto ops = GraphOperators::from(hin);
  EmbeddingTable out = EmbeddingTable::zeros_like(hin, config.output_dim);
  out.values() = forward(ops, input.values(), false, nullptr);
  return out;
}

std::size_t GraphModel::num_parameters() const {
  std::size_t n = 0;
  for (const auto& p : layers) {
    for (const auto& w : p.node_weight) n += static_cast<std::size_t>(w.size());
    for (const auto& w : p.relation_weight) n += static_cast<std::size_t>(w.size());
    n += static_cast<std::size_t>(p.bias.size());
  }
  for (const auto& p : projections) n += static_cast<std::size_t>(p.size());
  return n;
}

std::vector<double*> GraphModel::parameter_pointers() {
  std::vector<double*> out;
  for (auto& p : layers) append_layer_pointers(p, out);
  for (auto& p : projections) append_pointers(p, out);
  return out;
}

GraphGradient GraphGradient::zeros_like(const GraphModel& model) {
  GraphGradient g;
  for (const auto& p : model.layers) g.layers.push_back(zero_layer_like(p));
  for (const auto& p : model.projections) g.projections.push_back(RowMatrix::Zero(p.rows(), p.cols()));
  return g;
}

std::vector<double*> GraphGradient::parameter_pointers() {
  std::vector<double*> out;
  for (auto& p : layers) append_layer_pointers(p, out);
  for (auto& p : projections) append_pointers(p, out);
  return out;
}

void graph_backward(const GraphModel& model, const GraphOperators& ops,
                    const std::vector<LayerCache>& caches,
                    const std::vector<RowMatrix>& outputs, const RowMatrix& grad_output,
                    GraphGradient& grad) {
  const std::size_t L = model.layers.size();
  // Gradient reaching each layer's output from the sum and from above.
  RowMatrix upstream;
  for (std::size_t step = 0; step < L; ++step) {
    const std::size_t l = L - 1 - step;
    const LayerParams& p = model.layers[l];
    const LayerCache& c = caches[l];
    RowMatrix g;
    if (model.projections[l].size() == 0) {
      g = grad_output;
    } else {
      grad.projections[l].noalias() += grad_output.transpose() * outputs[l];
      g = grad_output * model.projections[l];
    }
    if (upstream.size() != 0) g += upstream;

    RowMatrix dpre = g.cwiseProduct(
        c.pre.unaryExpr([](double x) { return x > 0 ? 1.0 : kLeakySlope; }));
    LayerParams& gp = grad.layers[l];
    gp.bias += dpre.colwise().sum().transpose();

    const auto self = static_cast<Eigen::Index>(p.self_dim());
    const auto nb = static_cast<Eigen::Index>(p.neighbor_dim());
    RowMatrix ddrop = RowMatrix::Zero(c.dropped.rows(), c.dropped.cols());
    for (NodeKind k : kAllNodeKinds) {
      const auto off = static_cast<Eigen::Index>(ops.offset(k));
      const auto n = static_cast<Eigen::Index>(ops.counts[kind_index(k)]);
      if (n == 0) continue;
      const auto dself = dpre.block(off, 0, n, self);
      gp.node_weight[kind_index(k)].noalias() += dself.transpose() * c.dropped.middleRows(off, n);
      ddrop.middleRows(off, n).noalias() += dself * p.node_weight[kind_index(k)];
    }
    const RowMatrix dnb = dpre.rightCols(nb);
    for (std::size_t r = 0; r < ops.mean_adjacency.size(); ++r) {
      const auto& A = ops.mean_adjacency[r];
      if (A.nonZeros() == 0) continue;
      RowMatrix mean = A * c.dropped;
      gp.relation_weight[r].noalias() += dnb.transpose() * mean;
      RowMatrix dmean = dnb * p.relation_weight[r];
      ddrop.noalias() += A.transpose() * dmean;
    }
    if (l == 0) break;
    upstream = c.mask.size() == 0 ? ddrop : RowMatrix(ddrop.cwiseProduct(c.mask));
  }
}

std::vector<EdgeSample> sample_reconstruction_pairs(const Hin& hin, std::size_t negatives,
                                                    Rng& rng) {
  std::vector<EdgeSample> out;
  out.reserve(hin.edges().size() * (1 + negatives));
  for (const TypedEdge& e : hin.edges()) {
    const auto a = hin.global_index(e.src);
    out.push_back({a, hin.global_index(e.dst), 1.0});
    const auto n = hin.num_nodes(e.dst.kind);
    std::uniform_int_distribution<Index> pick(0, static_cast<Index>(n - 1));
    std::vector<Index> free;  // filled lazily for dense rows
    bool scanned = false;
    for (std::size_t s = 0; s < negatives; ++s) {
      bool found = false;
      for (int attempt = 0; attempt < 8 && !found; ++attempt) {
        NodeRef b{e.dst.kind, pick(rng)};
        if (hin.adjacent(e.src, b)) continue;
        out.push_back({a, hin.global_index(b), 0.0});
        found = true;
      }
      if (found) continue;
      if (!scanned) {
        for (Index id = 0; id < n; ++id) {
          if (!hin.adjacent(e.src, NodeRef{e.dst.kind, id})) free.push_back(id);
        }
        scanned = true;
      }
      if (free.empty()) break;
      std::uniform_int_distribution<std::size_t> pick_free(0, free.size() - 1);
      out.push_back({a, hin.global_index(NodeRef{e.dst.kind, free[pick_free(rng)]}), 0.0});
    }
  }
  return out;
}

double reconstruction_loss(const RowMatrix& h, std::span<const EdgeSample> samples) {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : samples) {
    const double x = h.row(static_cast<Eigen::Index>(s.a)).dot(h.row(static_cast<Eigen::Index>(s.b)));
    total += s.label * softplus(-x) + (1.0 - s.label) * softplus(x);
  }
  return total / static_cast<double>(samples.size());
}

RowMatrix reconstruction_gradient(const RowMatrix& h, std::span<const EdgeSample> samples) {
  RowMatrix g = RowMatrix::Zero(h.rows(), h.cols());
  if (samples.empty()) return g;
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples) {
    const auto a = static_cast<Eigen::Index>(s.a);
    const auto b = static_cast<Eigen::Index>(s.b);
    const double coef = (sigmoid(h.row(a).dot(h.row(b))) - s.label) * inv;
    g.row(a) += coef * h.row(b);
    g.row(b) += coef * h.row(a);
  }
  return g;
}

double graph_loss_and_gradient(const GraphModel& model, const GraphOperators& ops,
                               const RowMatrix& input, std::span<const EdgeSample> samples,
                               GraphGradient* grad) {
  std::vector<LayerCache> caches;
  std::vector<RowMatrix> outputs;
  const RowMatrix h = model.forward(ops, input, false, nullptr, &caches, &outputs);
  const double loss = reconstruction_loss(h, samples);
  if (grad) {
    *grad = GraphGradient::zeros_like(model);
    graph_backward(model, ops, caches, outputs, reconstruction_gradient(h, samples), *grad);
  }
  return loss;
}

void GraphTrainConfig::validate() const {
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kConfig, "graph learning rate must be positive");
  }
}

GraphTrainResult train_graphrep(const Hin& hin, const GraphConfig& config,
                                const GraphTrainConfig& train) {
  config.validate();
  train.validate();
  GraphTrainResult result;
  result.model = GraphModel::init(config, hin.relations().size(), train.seed);
  result.input = init_node_embeddings(hin, config.input_dim, train.seed);
  const auto ops = GraphOperators::from(hin);
  const RowMatrix& x = result.input.values();

  if (train.epochs > 0) {
    Rng sample_rng(derive_seed(train.seed, kSampleStream));
    Rng dropout_rng(derive_seed(train.seed, kDropoutStream));
    auto params = result.model.parameter_pointers();
    std::vector<double> m1(params.size(), 0.0), m2(params.size(), 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double b1t = 1.0, b2t = 1.0;
    std::vector<LayerCache> caches;
    std::vector<RowMatrix> outputs;

    for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
      const auto samples = sample_reconstruction_pairs(hin, train.negatives, sample_rng);
      const RowMatrix h = result.model.forward(ops, x, true, &dropout_rng, &caches, &outputs);
      const double loss = reconstruction_loss(h, samples);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kTraining,
                    fmt::format("graph reconstruction loss non-finite at epoch {}", epoch + 1));
      }
      result.epoch_loss.push_back(loss);
      auto grad = GraphGradient::zeros_like(result.model);
      graph_backward(result.model, ops, caches, outputs, reconstruction_gradient(h, samples),
                     grad);
      auto g = grad.parameter_pointers();
      b1t *= beta1;
      b2t *= beta2;
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double gi = *g[i];
        m1[i] = beta1 * m1[i] + (1 - beta1) * gi;
        m2[i] = beta2 * m2[i] + (1 - beta2) * gi * gi;
        const double mhat = m1[i] / (1 - b1t);
        const double vhat = m2[i] / (1 - b2t);
        *params[i] -= train.learning_rate * mhat / (std::sqrt(vhat) + eps);
      }
      spdlog::debug("graph epoch {} loss {:.6f}", epoch + 1, loss);
    }
  }
  result.embeddings = EmbeddingTable::zeros_like(hin, config.output_dim);
  result.embeddings.values() = result.model.forward(ops, x, false, nullptr);
  if (!result.embeddings.values().allFinite()) {
    throw Error(ErrorCode::kTraining, "graph embeddings are not finite");
  }
  return result;
}

Checkpoint embeddings_to_checkpoint(const EmbeddingTable& table) {
  Checkpoint ck;
  ck.kind = "embeddings";
  ck.set_meta("d", std::to_string(table.dim()));
  for (NodeKind k : kAllNodeKinds) {
    ck.set_meta(fmt::format("count.{}", to_string(k)), std::to_string(table.count(k)));
  }
  for (NodeKind k : kAllNodeKinds) ck.add_block(std::string(to_string(k)), table.block(k));
  return ck;
}

EmbeddingTable embeddings_from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != "embeddings") {
    throw Error(ErrorCode::kFormat,
                fmt::format("expected an embeddings checkpoint, got '{}'", ck.kind));
  }
  const auto d = std::stoull(ck.meta_value("d"));
  std::array<std::size_t, kNumNodeKinds> counts{};
  for (NodeKind k : kAllNodeKinds) {
    counts[kind_index(k)] = std::stoull(ck.meta_value(fmt::format("count.{}", to_string(k))));
  }
  EmbeddingTable table(counts, d);
  for (NodeKind k : kAllNodeKinds) {
    const auto& b = ck.block(std::string(to_string(k)));
    if (static_cast<std::size_t>(b.rows()) != counts[kind_index(k)] ||
        (b.rows() > 0 && static_cast<std::size_t>(b.cols()) != d)) {
      throw Error(ErrorCode::kFormat, "embedding block disagrees with the header");
    }
    if (b.rows() > 0) {
      table.values().middleRows(static_cast<Eigen::Index>(table.offset(k)), b.rows()) = b;
    }
  }
  return table;
}

}  // namespace fairex
