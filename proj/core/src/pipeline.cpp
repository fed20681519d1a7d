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

#include "fairex/pipeline.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <map>
#include <sstream>

#include "fairex/error.hpp"

namespace fairex {
namespace {

void echo_config(const RunConfig& config) {
  const ArtifactPaths paths{config.out};
  std::filesystem::create_directories(paths.root);
  std::ofstream out(paths.resolved_config(), std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write the resolved config");
  out << config.resolved();
}

void require(const std::filesystem::path& p, const char* producer) {
  if (!std::filesystem::exists(p)) {
    throw Error(ErrorCode::kIo,
                fmt::format("missing artifact '{}'; run '{}' first", p.string(), producer));
  }
}

std::vector<AttributeEdgeRecord> to_records(const AttributeTable& table,
                                            const InteractionLog& log,
                                            const RelationRegistry& relations) {
  const auto& owner_labels =
      table.kind == NodeKind::kUserAttribute ? log.user_labels() : log.item_labels();
  std::vector<AttributeEdgeRecord> out;
  out.reserve(table.edges.size());
  for (const auto& e : table.edges) {
    out.push_back({owner_labels[e.src.id], table.labels[e.dst.id], relations.name(e.relation)});
  }
  return out;
}

// Everything downstream commands share.
struct Workspace {
  Workspace(DatasetBundle b, double head_fraction)
      : bundle(std::move(b)),
        hin(bundle.build_hin()),
        groups(split_groups(bundle.split.train, head_fraction)) {}

  DatasetBundle bundle;
  Hin hin;
  GroupSplit groups;
};

Workspace load_workspace(const RunConfig& config) {
  const ArtifactPaths paths{config.out};
  require(paths.bundle(), "prepare");
  return Workspace(read_bundle(paths.bundle()), config.head_fraction);
}

CheckpointFormat checkpoint_format(const RunConfig& config) {
  return parse_checkpoint_format(config.checkpoint_format);
}

PolicyConfig policy_config(const RunConfig& config) {
  PolicyConfig pc = config.policy;
  pc.list_length = config.top_k;
  pc.embed_dim = config.rec.dim;
  return pc;
}

std::vector<Index> validation_users(const Workspace& ws) {
  std::vector<Index> users;
  const auto truth = ground_truth(ws.bundle.split.validation);
  for (Index u = 0; u < truth.size(); ++u) {
    if (!truth[u].empty()) users.push_back(u);
  }
  if (users.empty()) {
    for (Index u = 0; u < ws.bundle.split.train.num_users(); ++u) users.push_back(u);
  }
  return users;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read '{}'", path.string()));
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace

std::uint64_t component_seed(const RunConfig& config, SeedStream stream) {
  return derive_seed(config.seed, static_cast<std::uint64_t>(stream));
}

DatasetBundle prepare_bundle(const RunConfig& config) {
  InteractionLog raw;
  std::vector<AttributeEdgeRecord> user_records, item_records;
  if (config.source == "synthetic") {
    SyntheticConfig sc = config.synthetic;
    sc.seed = component_seed(config, SeedStream::kSynthetic);
    const SyntheticData data = generate_synthetic(sc);
    raw = data.log;
    user_records = to_records(data.user_attributes, data.log, data.relations);
    item_records = to_records(data.item_attributes, data.log, data.relations);
  } else {
    LoadOptions opts;
    opts.delimiter = config.delimiter;
    raw = load_interactions(config.interactions, opts);
    user_records = load_attribute_edges(config.user_attributes, config.delimiter);
    item_records = load_attribute_edges(config.item_attributes, config.delimiter);
  }
  InteractionLog log = binarize(raw, config.rating_threshold);
  if (config.k_core > 0) log = apply_k_core(log, config.k_core);
  log = compact(log);

  DatasetBundle bundle;
  bundle.split = chronological_split(log, config.split);
  const auto users = resolve_attribute_edges(user_records, NodeKind::kUserAttribute,
                                             log.user_labels(), bundle.relations);
  const auto items = resolve_attribute_edges(item_records, NodeKind::kItemAttribute,
                                             log.item_labels(), bundle.relations);
  bundle.user_attributes = users.table;
  bundle.item_attributes = items.table;
  spdlog::info("prepared {} users, {} items, {} train records; {} user and {} item attributes",
               log.num_users(), log.num_items(), bundle.split.train.size(),
               bundle.user_attributes.size(), bundle.item_attributes.size());
  if (users.dropped + items.dropped > 0) {
    spdlog::info("dropped {} attribute edges whose owner left the core",
                 users.dropped + items.dropped);
  }
  return bundle;
}

void cmd_prepare(const RunConfig& config) {
  config.validate();
  echo_config(config);
  const DatasetBundle bundle = prepare_bundle(config);
  // Fails early on a graph that cannot be built.
  (void)bundle.build_hin();
  write_bundle(ArtifactPaths{config.out}.bundle(), bundle);
}

void cmd_train_rec(const RunConfig& config) {
  config.validate();
  echo_config(config);
  const ArtifactPaths paths{config.out};
  require(paths.bundle(), "prepare");
  const DatasetBundle bundle = read_bundle(paths.bundle());
  TrainConfig tc = config.rec;
  tc.seed = component_seed(config, SeedStream::kRecommender);
  TrainReport report;
  const LatentFactors factors = train_mf(bundle.split.train, tc, &report);
  if (!report.epoch_loss.empty()) {
    spdlog::info("recommender trained, final epoch loss {:.6f}", report.epoch_loss.back());
  }
  write_checkpoint(paths.factors(), factors_to_checkpoint(factors), checkpoint_format(config));
}

void cmd_train_graph(const RunConfig& config) {
  config.validate();
  echo_config(config);
  const ArtifactPaths paths{config.out};
  const Workspace ws = load_workspace(config);
  GraphTrainConfig gt = config.graph_train;
  gt.seed = component_seed(config, SeedStream::kGraph);
  const GraphTrainResult result = train_graphrep(ws.hin, config.graph, gt);
  if (!result.epoch_loss.empty()) {
    spdlog::info("graph embedder trained, final epoch loss {:.6f}", result.epoch_loss.back());
  }
  write_checkpoint(paths.embeddings(), embeddings_to_checkpoint(result.embeddings),
                   checkpoint_format(config));
}

void cmd_explain(const RunConfig& config) {
  config.validate();
  echo_config(config);
  const ArtifactPaths paths{config.out};
  const Workspace ws = load_workspace(config);
  require(paths.factors(), "train-rec");
  require(paths.embeddings(), "train-graph");
  const LatentFactors factors = factors_from_checkpoint(read_checkpoint(paths.factors()));
  const EmbeddingTable embeddings =
      embeddings_from_checkpoint(read_checkpoint(paths.embeddings()));
  const auto& train = ws.bundle.split.train;
  const auto val_users = validation_users(ws);

  DisparityConfig base = config.disparity;
  base.epsilon = 0.0;
  double delta0 = 0.0;
  {
    const ExplanationEnvironment env(ws.hin, factors, embeddings, ws.groups, train,
                                     config.top_k, base);
    for (Index u : val_users) delta0 += env.list_disparity(env.original_list(u));
    delta0 /= static_cast<double>(val_users.size());
  }
  std::vector<double> grid;
  if (config.epsilon) {
    grid = {*config.epsilon};
  } else {
    for (double f : {0.0, 0.01, 0.05, 0.1}) grid.push_back(f * delta0);
  }

  ExplainerConfig ec = config.explainer;
  ec.seed = component_seed(config, SeedStream::kExplainer);
  const PolicyParams initial =
      PolicyParams::init(policy_config(config), component_seed(config, SeedStream::kPolicy));

  std::ostringstream meta;
  meta << fmt::format("delta0={}\n", delta0);
  std::size_t best = 0;
  double best_score = -1.0;
  std::vector<PolicyParams> policies;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    DisparityConfig dc = base;
    dc.epsilon = grid[g];
    const ExplanationEnvironment env(ws.hin, factors, embeddings, ws.groups, train,
                                     config.top_k, dc);
    ExplainerDiagnostics diag;
    policies.push_back(train_explainer(env, initial, ec, &diag));
    // Mean disparity drop delivered by the extracted sets; invalid sets count 0.
    double score = 0.0;
    for (Index u : val_users) {
      const auto set = extract_explanations(policies.back(), env, u, config.explanation_budget);
      if (set.valid) score += set.attributes.back().disparity_drop;
    }
    score /= static_cast<double>(val_users.size());
    spdlog::info("epsilon {:.6g}: validation score {:.6g}, {} users skipped", grid[g], score,
                 diag.skipped_users);
    meta << fmt::format("grid.{}.epsilon={}\ngrid.{}.score={}\n", g, grid[g], g, score);
    if (score > best_score) {
      best_score = score;
      best = g;
    }
  }
  meta << fmt::format("epsilon={}\n", grid[best]);

  DisparityConfig chosen = base;
  chosen.epsilon = grid[best];
  const ExplanationEnvironment env(ws.hin, factors, embeddings, ws.groups, train, config.top_k,
                                   chosen);
  std::vector<ExplanationSet> sets;
  for (Index u = 0; u < env.num_users(); ++u) {
    sets.push_back(extract_explanations(policies[best], env, u, config.explanation_budget));
  }
  write_checkpoint(paths.policy(), policy_to_checkpoint(policies[best]), checkpoint_format(config));
  {
    std::ofstream out(paths.explain_meta(), std::ios::binary);
    out << meta.str();
  }
  std::ofstream out(paths.explanations(), std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write explanations");
  write_explanations(out, sets);
}

void cmd_evaluate(const RunConfig& config) {
  config.validate();
  echo_config(config);
  const ArtifactPaths paths{config.out};
  const Workspace ws = load_workspace(config);
  require(paths.factors(), "train-rec");
  require(paths.embeddings(), "train-graph");
  const LatentFactors factors = factors_from_checkpoint(read_checkpoint(paths.factors()));
  const EmbeddingTable embeddings =
      embeddings_from_checkpoint(read_checkpoint(paths.embeddings()));

  DisparityConfig dc = config.disparity;
  dc.epsilon = config.epsilon.value_or(0.0);
  if (std::filesystem::exists(paths.explain_meta())) {
    const auto kv = read_key_values(paths.explain_meta());
    if (auto it = kv.find("epsilon"); it != kv.end()) dc.epsilon = std::stod(it->second);
  }
  const auto& train = ws.bundle.split.train;
  const EvaluationContext ctx = EvaluationContext::make(
      ws.hin, factors, embeddings, ws.groups, train, ws.bundle.split.test, config.top_k, dc);
  const std::size_t E = config.erasure_length;

  for (const auto& method : config.methods) {
    std::vector<ExplanationSet> lists;
    if (method == "cfairer") {
      require(paths.policy(), "explain");
      const PolicyParams policy = policy_from_checkpoint(read_checkpoint(paths.policy()));
      const ExplanationEnvironment env(ws.hin, factors, embeddings, ws.groups, train,
                                       config.top_k, dc);
      lists = policy_explanation_lists(policy, env, ctx.users, E);
    } else if (method == "rdexp") {
      const auto space = all_attributes(ws.hin);
      lists = baseline_rdexp(space, ctx.users, E, component_seed(config, SeedStream::kBaselines));
    } else if (method == "pop_user") {
      lists = baseline_pop(PopSide::kUser, ws.hin, train, ctx.users, E);
    } else {
      lists = baseline_pop(PopSide::kItem, ws.hin, train, ctx.users, E);
    }
    const ErasureCurve curve =
        erase_and_evaluate(ctx, lists, E, config.erasure_batch, method);
    spdlog::info("{}: HT@{} {:.4f} -> {:.4f} over {} points", method, config.top_k,
                 curve.points.front().report.ht, curve.points.back().report.ht,
                 curve.points.size());
    export_report(std::span<const ErasureCurve>(&curve, 1), paths.curve(method),
                  ReportFormat::kCsv);
  }
}

void cmd_report(const RunConfig& config) {
  config.validate();
  echo_config(config);
  const ArtifactPaths paths{config.out};
  std::vector<ErasureCurve> curves;
  for (const auto& method : config.methods) {
    require(paths.curve(method), "evaluate");
    std::ifstream in(paths.curve(method));
    for (auto& c : read_report_csv(in)) {
      c.erasure_length = config.erasure_length;
      curves.push_back(std::move(c));
    }
  }
  export_report(curves, paths.report(config.report_format),
                parse_report_format(config.report_format));
}

void cmd_run(const RunConfig& config) {
  cmd_prepare(config);
  cmd_train_rec(config);
  cmd_train_graph(config);
  cmd_explain(config);
  cmd_evaluate(config);
  cmd_report(config);
}

}  // namespace fairex
