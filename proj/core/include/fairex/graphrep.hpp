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

#include <Eigen/SparseCore>
#include <array>
#include <span>
#include <vector>

#include "fairex/checkpoint.hpp"
#include "fairex/hin.hpp"
#include "fairex/types.hpp"

namespace fairex {

// One dense vector per HIN node, stored as a single matrix in the graph's
// global node order (users, items, user attributes, item attributes).
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(const std::array<std::size_t, kNumNodeKinds>& counts, std::size_t dim);
  static EmbeddingTable zeros_like(const Hin& hin, std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(values_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t count(NodeKind kind) const {
    return offsets_[kind_index(kind) + 1] - offsets_[kind_index(kind)];
  }
  std::size_t offset(NodeKind kind) const { return offsets_[kind_index(kind)]; }

  bool contains(NodeRef node) const { return node.id < count(node.kind); }
  // Throws kReference for a node outside the table.
  Vector vector(NodeRef node) const;
  auto row(NodeRef node) { return values_.row(checked_row(node)); }
  auto row(NodeRef node) const { return values_.row(checked_row(node)); }

  RowMatrix block(NodeKind kind) const;
  const RowMatrix& values() const { return values_; }
  RowMatrix& values() { return values_; }

  bool operator==(const EmbeddingTable& other) const;

 private:
  Eigen::Index checked_row(NodeRef node) const;

  std::array<std::size_t, kNumNodeKinds + 1> offsets_{};
  RowMatrix values_;
};

// Layer-0 vectors: a one-hot block over the node kinds present in the graph
// followed by a one-hot block over d0 - kinds hash buckets of the node id.
// Throws kCapacity when d0 leaves no room for at least one bucket.
EmbeddingTable init_node_embeddings(const Hin& hin, std::size_t d0, std::uint64_t seed);
std::size_t bucket_of(NodeRef node, std::size_t buckets, std::uint64_t seed);

// Parameters of one relation-aware convolution. The output is the
// concatenation of a self block (node-kind weights) and a neighbor block
// (sum over relations of the relation weight applied to the mean of the
// neighbors under that relation), plus bias, through LeakyReLU.
struct LayerParams {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  double dropout = 0.0;
  std::array<RowMatrix, kNumNodeKinds> node_weight;  // self_dim x in_dim
  std::vector<RowMatrix> relation_weight;           // (out - self) x in_dim
  Vector bias;                                      // out_dim

  std::size_t self_dim() const { return out_dim / 2; }
  std::size_t neighbor_dim() const { return out_dim - out_dim / 2; }
  void validate() const;
};

LayerParams init_layer(std::size_t in_dim, std::size_t out_dim, std::size_t num_relations,
                       double dropout, Rng& rng);

inline constexpr double kLeakySlope = 0.01;

// Row-normalized adjacency per relation plus each row's node kind.
struct GraphOperators {
  std::vector<Eigen::SparseMatrix<double, Eigen::RowMajor>> mean_adjacency;
  std::vector<NodeKind> row_kind;
  std::array<std::size_t, kNumNodeKinds> counts{};

  static GraphOperators from(const Hin& hin);
  // Edges may repeat; each copy counts toward the neighbor mean.
  static GraphOperators from_edges(const std::array<std::size_t, kNumNodeKinds>& counts,
                                   std::span<const TypedEdge> edges,
                                   std::size_t num_relations);

  std::size_t offset(NodeKind kind) const;
  std::size_t size() const { return row_kind.size(); }
};

struct LayerCache {
  RowMatrix dropped;   // input after dropout
  RowMatrix mask;      // dropout scale per coordinate (empty when off)
  RowMatrix pre;       // pre-activation
};

// Dropout is applied only when `train` is set and `rng` is given.
EmbeddingTable layer_forward(const Hin& hin, const EmbeddingTable& input,
                             const LayerParams& params, bool train, Rng* rng = nullptr);
RowMatrix layer_forward(const GraphOperators& ops, const RowMatrix& input,
                        const LayerParams& params, bool train, Rng* rng,
                        LayerCache* cache);

// Element-wise sum of the layers. Throws kShape on differing shapes.
EmbeddingTable aggregate_layers(const std::vector<EmbeddingTable>& layers);

struct GraphConfig {
  std::size_t input_dim = 64;
  std::vector<std::size_t> layer_dims{64, 128};
  std::size_t output_dim = 128;
  double dropout = 0.1;

  void validate() const;
};

// Stacked layers plus a projection to output_dim for every layer whose
// width differs from it (identity otherwise), summed into the output.
struct GraphModel {
  GraphConfig config;
  std::vector<LayerParams> layers;
  std::vector<RowMatrix> projections;  // output_dim x layer dim, empty = identity

  static GraphModel init(const GraphConfig& config, std::size_t num_relations,
                         std::uint64_t seed);

  RowMatrix forward(const GraphOperators& ops, const RowMatrix& input, bool train,
                    Rng* rng, std::vector<LayerCache>* caches = nullptr,
                    std::vector<RowMatrix>* outputs = nullptr) const;
  EmbeddingTable embed(const Hin& hin, const EmbeddingTable& input) const;

  // Flat parameter access for optimizers and gradient checks.
  std::size_t num_parameters() const;
  std::vector<double*> parameter_pointers();
};

// Gradient buffers shaped like a GraphModel.
struct GraphGradient {
  std::vector<LayerParams> layers;
  std::vector<RowMatrix> projections;

  static GraphGradient zeros_like(const GraphModel& model);
  std::vector<double*> parameter_pointers();
};

// Backpropagates dL/d(output) through a forward pass recorded in caches.
void graph_backward(const GraphModel& model, const GraphOperators& ops,
                    const std::vector<LayerCache>& caches,
                    const std::vector<RowMatrix>& outputs, const RowMatrix& grad_output,
                    GraphGradient& grad);

struct EdgeSample {
  std::size_t a = 0;  // global node index
  std::size_t b = 0;
  double label = 0.0;
};

// Observed edges with label 1 plus `negatives` same-kind non-edges each
// with label 0, drawn uniformly.
std::vector<EdgeSample> sample_reconstruction_pairs(const Hin& hin, std::size_t negatives,
                                                    Rng& rng);

// Mean logistic cross-entropy of sigma(h_a . h_b) against the labels.
double reconstruction_loss(const RowMatrix& embeddings, std::span<const EdgeSample> samples);
RowMatrix reconstruction_gradient(const RowMatrix& embeddings,
                                  std::span<const EdgeSample> samples);

// Loss and parameter gradient of the model on fixed samples, dropout off.
double graph_loss_and_gradient(const GraphModel& model, const GraphOperators& ops,
                               const RowMatrix& input, std::span<const EdgeSample> samples,
                               GraphGradient* grad);

struct GraphTrainConfig {
  std::size_t epochs = 60;
  double learning_rate = 0.01;
  std::size_t negatives = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GraphTrainResult {
  GraphModel model;
  EmbeddingTable input;
  EmbeddingTable embeddings;
  std::vector<double> epoch_loss;
};

// Adam on the full-batch reconstruction objective with fresh negatives per
// epoch. Final embeddings are computed with dropout off. Throws kTraining on
// a non-finite loss.
GraphTrainResult train_graphrep(const Hin& hin, const GraphConfig& config,
                                const GraphTrainConfig& train);

Checkpoint embeddings_to_checkpoint(const EmbeddingTable& table);
EmbeddingTable embeddings_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace fairex
