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

#include <benchmark/benchmark.h>

#include <random>

#include "fairex/cfe.hpp"
#include "fairex/graphrep.hpp"
#include "fairex/harness.hpp"
#include "fairex/recsys.hpp"

using namespace fairex;

namespace {

RowMatrix gaussian(std::size_t r, std::size_t c, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  RowMatrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

SyntheticData benchmark_data() {
  SyntheticConfig sc;
  sc.seed = 3;
  return generate_synthetic(sc);
}

// Default-sized synthetic set with random factors and near-one embeddings.
struct Workload {
  DatasetBundle bundle;
  Hin hin;
  GroupSplit groups;
  LatentFactors factors;
  EmbeddingTable embeddings;

  explicit Workload(std::size_t dim)
      : bundle(synthetic_bundle(benchmark_data())),
        hin(bundle.build_hin()),
        groups(split_groups(bundle.split.train)),
        embeddings(EmbeddingTable::zeros_like(hin, dim)) {
    Rng rng(4);
    factors.user = gaussian(hin.num_nodes(NodeKind::kUser), dim, rng);
    factors.item = gaussian(hin.num_nodes(NodeKind::kItem), dim, rng);
    embeddings.values() = gaussian(embeddings.size(), dim, rng) * 0.1;
    embeddings.values().array() += 1.0;
  }
};

}  // namespace

static void BM_TopK(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Vector scores = gaussian(n, 1, rng).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(top_k_from_scores(0, scores, 20, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TopK)->Arg(1000)->Arg(10000)->Arg(100000);

static void BM_GruStep(benchmark::State& state) {
  Rng rng(2);
  const auto h = static_cast<std::size_t>(state.range(0));
  const GruParams p = GruParams::init(20 * h, h, rng);
  const Vector x = gaussian(20 * h, 1, rng).col(0);
  Vector s = Vector::Zero(static_cast<Eigen::Index>(h));
  for (auto _ : state) {
    s = gru_step(p, x, s);
    benchmark::DoNotOptimize(s.data());
  }
}
BENCHMARK(BM_GruStep)->Arg(16)->Arg(64)->Arg(128);

static void BM_LayerForward(benchmark::State& state) {
  const Workload w(32);
  const auto ops = GraphOperators::from(w.hin);
  Rng rng(5);
  const auto d = static_cast<std::size_t>(state.range(0));
  const LayerParams layer = init_layer(d, d, w.hin.relations().size(), 0.0, rng);
  const RowMatrix x = gaussian(ops.size(), d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(layer_forward(ops, x, layer, false, nullptr, nullptr));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ops.size()));
}
BENCHMARK(BM_LayerForward)->Arg(32)->Arg(128);

static void BM_Erasure(benchmark::State& state) {
  const Workload w(32);
  const auto ctx = EvaluationContext::make(w.hin, w.factors, w.embeddings, w.groups,
                                           w.bundle.split.train, w.bundle.split.test, 20, {});
  const auto attrs = all_attributes(w.hin);
  const auto sets = baseline_rdexp(attrs, ctx.users, 10, 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(erase_and_evaluate(ctx, sets, 10, static_cast<std::size_t>(state.range(0)), "rdexp"));
}
BENCHMARK(BM_Erasure)->Arg(0)->Arg(50)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
