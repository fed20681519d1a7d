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
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <json.hpp>
#include <ostream>

#include "fairex/cfe.hpp"
#include "fairex/error.hpp"

namespace fairex {
namespace {

constexpr std::uint64_t kEpisodeStream = 0x4001;

struct Decision {
  Vector input;
  RowMatrix action_embeddings;
  CandidateSet candidates;
  Vector probabilities;
};

// Encodes the current list into the state and scores the pruned actions.
Decision decide(const PolicyParams& policy, const EmbeddingTable& embeddings,
                const RecList& list, std::span<const NodeRef> attributes, Vector& s) {
  Decision d;
  d.input = encode_list(embeddings, list);
  s = gru_step(policy.gru, d.input, s);
  const Vector weights = attention_scores(s, attributes, embeddings, policy.attention);
  d.candidates = prune_actions(attributes, weights, policy.config.candidate_size);
  d.action_embeddings = gather_embeddings(embeddings, d.candidates.actions);
  d.probabilities = policy_distribution(s, d.action_embeddings, policy.head);
  return d;
}

std::size_t argmax(const Vector& p) {
  Eigen::Index best = 0;
  p.maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

void check_policy(const PolicyParams& policy, const ExplanationEnvironment& env) {
  if (policy.config.list_length != env.top_k() ||
      policy.config.embed_dim != env.embeddings().dim()) {
    throw Error(ErrorCode::kShape,
                fmt::format("policy expects K={} and d={}, environment has K={} and d={}",
                            policy.config.list_length, policy.config.embed_dim, env.top_k(),
                            env.embeddings().dim()));
  }
}

std::vector<NodeRef> greedy_rollout(const PolicyParams& policy, const ExplanationEnvironment& env,
                                    Index user, std::size_t length, bool stop_when_valid,
                                    std::vector<double>* drops) {
  check_policy(policy, env);
  auto episode = env.begin(user);
  Vector s = Vector::Zero(static_cast<Eigen::Index>(policy.config.state_dim));
  std::vector<NodeRef> out;
  const double eps = env.disparity_config().epsilon;
  for (std::size_t t = 0; t < length; ++t) {
    const auto attributes = episode.candidates();
    if (attributes.empty()) break;
    const Decision d = decide(policy, env.embeddings(), episode.current(), attributes, s);
    const NodeRef a = d.candidates.actions[argmax(d.probabilities)];
    const auto result = episode.deploy(a);
    out.push_back(a);
    if (drops) drops->push_back(result.drop);
    if (stop_when_valid && result.drop >= eps) break;
  }
  return out;
}

}  // namespace

ExplanationEnvironment::ExplanationEnvironment(const Hin& hin, const LatentFactors& factors,
                                               const EmbeddingTable& embeddings,
                                               const GroupSplit& groups,
                                               const InteractionLog& train, std::size_t top_k,
                                               DisparityConfig disparity)
    : hin_(&hin),
      factors_(&factors),
      embeddings_(&embeddings),
      groups_(&groups),
      top_k_(top_k),
      disparity_(disparity) {
  disparity_.validate();
  if (embeddings.dim() != factors.dim()) {
    throw Error(ErrorCode::kShape,
                fmt::format("embedding width {} differs from the factor width {}",
                            embeddings.dim(), factors.dim()));
  }
  if (hin.num_nodes(NodeKind::kUser) != factors.num_users() ||
      hin.num_nodes(NodeKind::kItem) != factors.num_items() ||
      groups.num_items() != factors.num_items() ||
      embeddings.count(NodeKind::kItem) != factors.num_items()) {
    throw Error(ErrorCode::kShape, "graph, factors, embeddings and groups disagree on counts");
  }
  seen_ = items_by_user(train, false);
  for (const auto& r : train.records()) {
    if (r.rating > 0.5) positives_.emplace_back(r.user, r.item);
  }
}

RecList ExplanationEnvironment::original_list(Index user) const {
  return fairex::top_k(*factors_, user, top_k_, seen_[user]);
}

double ExplanationEnvironment::list_disparity(const RecList& list) const {
  return disparity(list, *groups_, disparity_);
}

ExplanationEnvironment::Episode::Episode(const ExplanationEnvironment& env, Index user)
    : env_(&env), fused_(env.factors(), user) {
  original_ = env.original_list(user);
  original_disparity_ = env.list_disparity(original_);
  current_ = original_;
}

bool ExplanationEnvironment::Episode::is_deployed(NodeRef a) const {
  return std::find(deployed_.begin(), deployed_.end(), a) != deployed_.end();
}

std::vector<NodeRef> ExplanationEnvironment::Episode::candidates() const {
  auto all = candidate_attributes(env_->hin(), fused_.user(), current_);
  std::erase_if(all, [&](NodeRef a) { return is_deployed(a); });
  return all;
}

ExplanationEnvironment::StepResult ExplanationEnvironment::Episode::deploy(NodeRef attribute) {
  const RecList before = current_;
  fused_.fuse(before, env_->embeddings().vector(attribute), fusion_side(attribute.kind));
  deployed_.push_back(attribute);

  StepResult r;
  r.list = fused_.top_k(env_->top_k(), env_->excluded(fused_.user()));
  r.disparity = env_->list_disparity(r.list);
  r.drop = original_disparity_ - r.disparity;

  const auto& base = env_->factors();
  const double user_sim =
      cosine_similarity(base.user.row(fused_.user()).transpose(), fused_.user_row());
  double item_sim = 0.0;
  for (Index v : before.items) {
    item_sim += cosine_similarity(base.item.row(v).transpose(), fused_.item_row(v));
  }
  if (!before.items.empty()) item_sim /= static_cast<double>(before.items.size());
  r.reward = reward_from_parts(r.drop, env_->disparity_config().epsilon, user_sim, item_sim);
  current_ = r.list;
  return r;
}

void ExplainerConfig::validate() const {
  if (horizon == 0) throw Error(ErrorCode::kConfig, "episode horizon must be at least 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::kConfig, "gamma must lie in (0, 1]");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kConfig, "policy learning rate must be positive");
  if (batch_size == 0) throw Error(ErrorCode::kConfig, "batch size must be at least 1");
  if (!(clip > 0.0)) throw Error(ErrorCode::kConfig, "propensity clip must be positive");
}

PolicyParams train_explainer(const ExplanationEnvironment& env, const PolicyParams& initial,
                             const ExplainerConfig& config, ExplainerDiagnostics* diagnostics) {
  config.validate();
  check_policy(initial, env);
  PolicyParams policy = initial;
  if (config.episodes == 0) return policy;
  const auto& starts = env.positives();
  if (starts.empty()) throw Error(ErrorCode::kEmptyInput, "no training positives to start from");

  Rng rng(derive_seed(config.seed, kEpisodeStream));
  std::uniform_int_distribution<std::size_t> pick_start(0, starts.size() - 1);
  std::vector<Trajectory> batch;
  const auto h = static_cast<Eigen::Index>(policy.config.state_dim);

  for (std::size_t episode_index = 0; episode_index < config.episodes; ++episode_index) {
    const auto [user, anchor] = starts[pick_start(rng)];
    auto episode = env.begin(user);
    Trajectory traj;
    traj.user = user;
    traj.anchor = anchor;
    traj.gamma = config.gamma;
    Vector s = Vector::Zero(h);
    for (std::size_t t = 0; t < config.horizon; ++t) {
      const auto attributes = episode.candidates();
      if (attributes.empty()) break;
      Decision d = decide(policy, env.embeddings(), episode.current(), attributes, s);
      std::uniform_int_distribution<std::size_t> pick(0, attributes.size() - 1);
      const NodeRef a = attributes[pick(rng)];

      TrajectoryStep step;
      step.input = std::move(d.input);
      step.action_embeddings = std::move(d.action_embeddings);
      step.actions = d.candidates.actions;
      step.action = a;
      step.pi_0 = 1.0 / static_cast<double>(attributes.size());
      const auto it = std::find(step.actions.begin(), step.actions.end(), a);
      if (it != step.actions.end()) {
        step.action_index = static_cast<std::size_t>(it - step.actions.begin());
        step.pi_e = d.probabilities[static_cast<Eigen::Index>(step.action_index)];
      }
      step.reward = episode.deploy(a).reward;
      traj.steps.push_back(std::move(step));
    }
    if (traj.steps.empty()) {
      if (diagnostics) ++diagnostics->skipped_users;
      spdlog::debug("user {} has no candidate attributes; skipped", user);
      continue;
    }
    if (diagnostics) diagnostics->episode_return.push_back(crm_return(traj, config.clip));
    batch.push_back(std::move(traj));
    if (batch.size() == config.batch_size) {
      policy = reinforce_step(policy, batch, config.learning_rate, config.clip);
      batch.clear();
    }
  }
  if (!batch.empty()) policy = reinforce_step(policy, batch, config.learning_rate, config.clip);
  return policy;
}

ExplanationSet extract_explanations(const PolicyParams& policy,
                                    const ExplanationEnvironment& env, Index user,
                                    std::size_t budget) {
  ExplanationSet out;
  out.user = user;
  if (budget == 0) return out;
  std::vector<double> drops;
  const auto deployed = greedy_rollout(policy, env, user, budget, true, &drops);
  const double eps = env.disparity_config().epsilon;
  // Shortest prefix whose cumulative drop reaches epsilon.
  for (std::size_t i = 0; i < deployed.size(); ++i) {
    if (drops[i] >= eps) {
      for (std::size_t j = 0; j <= i; ++j) out.attributes.push_back({deployed[j], drops[j]});
      out.valid = true;
      break;
    }
  }
  return out;
}

std::vector<NodeRef> rank_attributes(const PolicyParams& policy,
                                     const ExplanationEnvironment& env, Index user,
                                     std::size_t length) {
  return greedy_rollout(policy, env, user, length, false, nullptr);
}

void write_explanations(std::ostream& out, std::span<const ExplanationSet> sets) {
  for (const auto& set : sets) {
    nlohmann::ordered_json j;
    j["user_id"] = set.user;
    auto attrs = nlohmann::ordered_json::array();
    for (const auto& a : set.attributes) {
      nlohmann::ordered_json item;
      item["id"] = a.attribute.id;
      item["kind"] = std::string(to_string(a.attribute.kind));
      item["disparity_drop"] = a.disparity_drop;
      attrs.push_back(std::move(item));
    }
    j["attributes"] = std::move(attrs);
    j["valid"] = set.valid;
    out << j.dump() << '\n';
  }
}

std::vector<ExplanationSet> read_explanations(std::istream& in) {
  std::vector<ExplanationSet> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ExplanationSet set;
      set.user = j.at("user_id").get<Index>();
      set.valid = j.at("valid").get<bool>();
      for (const auto& a : j.at("attributes")) {
        ExplainedAttribute ea;
        ea.attribute.kind = parse_node_kind(a.at("kind").get<std::string>());
        ea.attribute.id = a.at("id").get<Index>();
        ea.disparity_drop = a.at("disparity_drop").get<double>();
        set.attributes.push_back(ea);
      }
      out.push_back(std::move(set));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, fmt::format("explanations line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

}  // namespace fairex
