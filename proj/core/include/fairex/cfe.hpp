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

#include <array>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fairex/checkpoint.hpp"
#include "fairex/fairness.hpp"
#include "fairex/graphrep.hpp"
#include "fairex/hin.hpp"
#include "fairex/recsys.hpp"

namespace fairex {

// ---- state encoder --------------------------------------------------------

// GRU cell: gate 0 is the update gate, 1 the reset gate, 2 the candidate.
struct GruParams {
  std::array<RowMatrix, 3> W;  // state x input
  std::array<RowMatrix, 3> U;  // state x state
  std::array<Vector, 3> b;

  std::size_t input_dim() const { return static_cast<std::size_t>(W[0].cols()); }
  std::size_t state_dim() const { return static_cast<std::size_t>(W[0].rows()); }

  static GruParams zeros(std::size_t input_dim, std::size_t state_dim);
  static GruParams init(std::size_t input_dim, std::size_t state_dim, Rng& rng);
};

struct GruCache {
  Vector x;
  Vector s_prev;
  Vector u;
  Vector r;
  Vector s_hat;
};

// One recurrent step; throws kShape on mismatched dimensions.
Vector gru_step(const GruParams& params, const Vector& x, const Vector& s_prev,
                GruCache* cache = nullptr);
// Accumulates parameter gradients into `grad` and returns dL/ds_prev.
Vector gru_backward(const GruParams& params, const GruCache& cache, const Vector& grad_s,
                    GruParams& grad);

struct CfeState {
  Index user = 0;
  RecList list;
  Vector s;  // encoded state
  std::size_t t = 0;
};

CfeState initial_state(Index user, const RecList& list, std::size_t state_dim);

// Concatenated embeddings of the list items, in list order.
Vector encode_list(const EmbeddingTable& embeddings, const RecList& list);

// Advances the state over the given list: s_t = GRU(x(list), s_{t-1}).
CfeState encode_state(const CfeState& prev, const RecList& list,
                      const EmbeddingTable& embeddings, const GruParams& params);

// ---- action space ---------------------------------------------------------

// Attribute neighbors of the user and of every listed item, ascending and
// without duplicates.
std::vector<NodeRef> candidate_attributes(const Hin& hin, Index user, const RecList& list);

struct AttentionParams {
  RowMatrix Ws;  // a x state
  RowMatrix Wh;  // a x embedding
  Vector b;      // a

  static AttentionParams init(std::size_t attention_dim, std::size_t state_dim,
                              std::size_t embed_dim, Rng& rng);
};

// Unnormalized score: sum of the coordinates of ReLU(Ws s + Wh e + b).
double attention_logit(const AttentionParams& params, const Vector& s, const Vector& e);
// Softmax of the logits over the attributes. Throws kEmptyCandidate.
Vector attention_scores(const Vector& s, std::span<const NodeRef> attributes,
                        const EmbeddingTable& embeddings, const AttentionParams& params);
Vector softmax(const Vector& logits);

struct CandidateSet {
  std::vector<NodeRef> actions;  // A_t
  std::vector<double> weights;   // normalized attention of each action over V_t
  std::size_t size_limit = 0;    // n
};

// Top-n attributes by weight, ascending attribute on ties.
CandidateSet prune_actions(std::span<const NodeRef> attributes, const Vector& weights,
                           std::size_t n);

// ---- explanation policy ---------------------------------------------------

struct PolicyConfig {
  std::size_t list_length = 20;      // K
  std::size_t embed_dim = 128;       // graph embedding width
  std::size_t state_dim = 128;
  std::size_t attention_dim = 64;
  std::size_t candidate_size = 20;   // n
  bool end_to_end = true;            // train the GRU through the policy gradient

  void validate() const;
};

struct PolicyParams {
  PolicyConfig config;
  GruParams gru;
  AttentionParams attention;
  RowMatrix head;  // W_p, state x embedding

  static PolicyParams init(const PolicyConfig& config, std::uint64_t seed);
};

// pi_E over the candidates: softmax of s^T W_p e_a. Throws kEmptyCandidate.
Vector policy_distribution(const Vector& s, const RowMatrix& action_embeddings,
                           const RowMatrix& head);
Vector policy_distribution(const CfeState& state, const CandidateSet& candidates,
                           const EmbeddingTable& embeddings, const PolicyParams& params);

RowMatrix gather_embeddings(const EmbeddingTable& embeddings, std::span<const NodeRef> nodes);

// ---- reward ---------------------------------------------------------------

// Zero when either operand is the zero vector.
double cosine_similarity(const Vector& a, const Vector& b);

// Bonus 1 when drop >= epsilon, plus the two proximity terms.
double reward_from_parts(double disparity_drop, double epsilon, double user_similarity,
                         double item_similarity);

// Reward of one deployment. The item term averages the cosine over the
// items of `list_before`. Disparity is that of the single lists.
double counterfactual_reward(const LatentFactors& before, const LatentFactors& after,
                             Index user, const RecList& list_before,
                             const RecList& list_after, const GroupSplit& groups,
                             const DisparityConfig& config);

// ---- off-policy optimization ----------------------------------------------

struct TrajectoryStep {
  Vector input;                 // GRU input at this step
  RowMatrix action_embeddings;  // rows of A_t
  std::vector<NodeRef> actions;
  NodeRef action;
  // Position of the action in A_t, or npos when pruning excluded it.
  std::size_t action_index = npos;
  double pi_e = 0.0;
  double pi_0 = 0.0;
  double reward = 0.0;

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
};

struct Trajectory {
  Index user = 0;
  Index anchor = 0;  // interacted item the episode started from
  double gamma = 0.9;
  std::vector<TrajectoryStep> steps;
};

inline constexpr double kDefaultClip = 10.0;

double propensity_weight(double pi_e, double pi_0, double clip);
// Discounted, clipped importance-weighted return. Throws kPropensity when a
// logging propensity is not positive.
double crm_return(const Trajectory& trajectory, double clip = kDefaultClip);

// Gradient buffers for the trainable policy parameters.
struct PolicyGradient {
  GruParams gru;
  RowMatrix head;

  static PolicyGradient zeros_like(const PolicyParams& params);
  double squared_norm() const;
};

// Surrogate (1/|B|) sum_traj (1/T) sum_t gamma^t w_t r_t log pi_E(a_t|s_t)
// with the logged weights held fixed; its gradient is the policy gradient.
double policy_objective(const PolicyParams& params, std::span<const Trajectory> batch,
                        double clip = kDefaultClip);
PolicyGradient policy_gradient(const PolicyParams& params, std::span<const Trajectory> batch,
                               double clip = kDefaultClip);
// One ascent step. Throws kTraining on a non-finite gradient.
PolicyParams reinforce_step(const PolicyParams& params, std::span<const Trajectory> batch,
                            double learning_rate, double clip = kDefaultClip);

Checkpoint policy_to_checkpoint(const PolicyParams& params);
PolicyParams policy_from_checkpoint(const Checkpoint& checkpoint);

// ---- environment ----------------------------------------------------------

// Counterfactual world of one user: the recommender factors with the
// deployed attribute embeddings fused in.
class ExplanationEnvironment {
 public:
  ExplanationEnvironment(const Hin& hin, const LatentFactors& factors,
                         const EmbeddingTable& embeddings, const GroupSplit& groups,
                         const InteractionLog& train, std::size_t top_k,
                         DisparityConfig disparity);

  const Hin& hin() const { return *hin_; }
  const LatentFactors& factors() const { return *factors_; }
  const EmbeddingTable& embeddings() const { return *embeddings_; }
  const GroupSplit& groups() const { return *groups_; }
  const DisparityConfig& disparity_config() const { return disparity_; }
  std::size_t top_k() const { return top_k_; }
  std::span<const Index> excluded(Index user) const { return seen_[user]; }
  std::size_t num_users() const { return factors_->num_users(); }
  // Training positives (user, item), the episode start distribution.
  const std::vector<std::pair<Index, Index>>& positives() const { return positives_; }

  RecList original_list(Index user) const;
  double list_disparity(const RecList& list) const;

  struct StepResult {
    RecList list;          // re-ranked list after the deployment
    double disparity = 0;  // of the new list
    double drop = 0;       // original disparity minus the new one
    double reward = 0;
  };

  class Episode {
   public:
    Episode(const ExplanationEnvironment& env, Index user);

    Index user() const { return fused_.user(); }
    const RecList& original() const { return original_; }
    double original_disparity() const { return original_disparity_; }
    const RecList& current() const { return current_; }
    const std::vector<NodeRef>& deployed() const { return deployed_; }
    bool is_deployed(NodeRef a) const;
    // Attributes of the user and the current list not yet deployed.
    std::vector<NodeRef> candidates() const;

    StepResult deploy(NodeRef attribute);

   private:
    const ExplanationEnvironment* env_;
    FusedFactors fused_;
    RecList original_;
    double original_disparity_ = 0;
    RecList current_;
    std::vector<NodeRef> deployed_;
  };

  Episode begin(Index user) const { return Episode(*this, user); }

 private:
  const Hin* hin_;
  const LatentFactors* factors_;
  const EmbeddingTable* embeddings_;
  const GroupSplit* groups_;
  std::size_t top_k_;
  DisparityConfig disparity_;
  std::vector<std::vector<Index>> seen_;
  std::vector<std::pair<Index, Index>> positives_;
};

// ---- training and extraction ----------------------------------------------

struct ExplainerConfig {
  std::size_t episodes = 300;
  std::size_t horizon = 5;   // T_ep
  double gamma = 0.9;
  double learning_rate = 0.05;
  std::size_t batch_size = 1;
  double clip = kDefaultClip;
  std::uint64_t seed = 1;

  void validate() const;
};

struct ExplainerDiagnostics {
  std::vector<double> episode_return;  // crm_return per episode
  std::size_t skipped_users = 0;
};

// Samples a (user, item) training positive per episode, rolls out the
// horizon with actions from the uniform logging policy over V_t, and applies
// a reinforce step every batch_size trajectories.
PolicyParams train_explainer(const ExplanationEnvironment& env, const PolicyParams& initial,
                             const ExplainerConfig& config,
                             ExplainerDiagnostics* diagnostics = nullptr);

struct ExplainedAttribute {
  NodeRef attribute;
  double disparity_drop = 0.0;  // cumulative drop after deploying it
};

struct ExplanationSet {
  Index user = 0;
  std::vector<ExplainedAttribute> attributes;
  bool valid = false;
};

// Greedy argmax rollout, stopping at the first deployment whose cumulative
// drop reaches epsilon or at the budget. The result is the shortest valid
// prefix; without one it is empty and flagged invalid.
ExplanationSet extract_explanations(const PolicyParams& policy,
                                    const ExplanationEnvironment& env, Index user,
                                    std::size_t budget);

// Greedy argmax ordering of up to `length` attributes with no early stop.
std::vector<NodeRef> rank_attributes(const PolicyParams& policy,
                                     const ExplanationEnvironment& env, Index user,
                                     std::size_t length);

// One JSON object per line:
// {"user_id":..,"attributes":[{"id":..,"kind":..,"disparity_drop":..}],"valid":..}
void write_explanations(std::ostream& out, std::span<const ExplanationSet> sets);
std::vector<ExplanationSet> read_explanations(std::istream& in);

}  // namespace fairex
