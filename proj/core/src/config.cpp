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

#include "fairex/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "fairex/error.hpp"

namespace fairex {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::kConfig, fmt::format("invalid value '{}' for {}", value, key));
}

template <typename T>
T parse_int(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double d = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value);
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  bad_value(key, value);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + xs[i];
  return out;
}

struct Binding {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define FX_SIZE(name, field)                                                             \
  Binding {                                                                              \
    name, [](RunConfig& c, const std::string& v) { c.field = parse_int<std::size_t>(name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }                       \
  }
#define FX_U64(name, field)                                                                \
  Binding {                                                                                \
    name, [](RunConfig& c, const std::string& v) { c.field = parse_int<std::uint64_t>(name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }                         \
  }
#define FX_REAL(name, field)                                                    \
  Binding {                                                                     \
    name, [](RunConfig& c, const std::string& v) { c.field = parse_real(name, v); }, \
        [](const RunConfig& c) { return fmt::format("{}", c.field); }           \
  }
#define FX_FLAG(name, field)                                                    \
  Binding {                                                                     \
    name, [](RunConfig& c, const std::string& v) { c.field = parse_flag(name, v); }, \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); } \
  }
#define FX_TEXT(name, field)                                             \
  Binding {                                                              \
    name, [](RunConfig& c, const std::string& v) { c.field = v; },       \
        [](const RunConfig& c) { return std::string(c.field); }          \
  }

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = {
      FX_U64("seed", seed),
      Binding{"out", [](RunConfig& c, const std::string& v) { c.out = v; },
              [](const RunConfig& c) { return c.out.string(); }},
      FX_TEXT("checkpoint_format", checkpoint_format),

      FX_TEXT("data.source", source),
      Binding{"data.interactions", [](RunConfig& c, const std::string& v) { c.interactions = v; },
              [](const RunConfig& c) { return c.interactions.string(); }},
      Binding{"data.user_attributes",
              [](RunConfig& c, const std::string& v) { c.user_attributes = v; },
              [](const RunConfig& c) { return c.user_attributes.string(); }},
      Binding{"data.item_attributes",
              [](RunConfig& c, const std::string& v) { c.item_attributes = v; },
              [](const RunConfig& c) { return c.item_attributes.string(); }},
      Binding{"data.delimiter",
              [](RunConfig& c, const std::string& v) {
                if (v == "tab") c.delimiter = '\t';
                else if (v == "comma") c.delimiter = ',';
                else if (v == "space") c.delimiter = ' ';
                else bad_value("data.delimiter", v);
              },
              [](const RunConfig& c) {
                return std::string(c.delimiter == '\t' ? "tab" : c.delimiter == ',' ? "comma" : "space");
              }},
      FX_REAL("data.rating_threshold", rating_threshold),
      FX_SIZE("data.k_core", k_core),
      FX_REAL("data.split_train", split.train),
      FX_REAL("data.split_validation", split.validation),
      FX_REAL("data.split_test", split.test),

      FX_SIZE("synthetic.users", synthetic.num_users),
      FX_SIZE("synthetic.items", synthetic.num_items),
      FX_SIZE("synthetic.user_attributes", synthetic.num_user_attributes),
      FX_SIZE("synthetic.item_attributes", synthetic.num_item_attributes),
      FX_SIZE("synthetic.interactions_per_user", synthetic.interactions_per_user),
      FX_REAL("synthetic.skew", synthetic.skew),
      FX_SIZE("synthetic.clusters", synthetic.num_clusters),
      FX_REAL("synthetic.cluster_boost", synthetic.cluster_boost),
      FX_SIZE("synthetic.planted", synthetic.planted_attributes),
      FX_REAL("synthetic.planted_head_rate", synthetic.planted_head_rate),
      FX_REAL("synthetic.planted_tail_rate", synthetic.planted_tail_rate),
      FX_SIZE("synthetic.attributes_per_item", synthetic.attributes_per_item),
      FX_SIZE("synthetic.attributes_per_user", synthetic.attributes_per_user),
      FX_REAL("synthetic.negative_rate", synthetic.negative_rate),

      FX_SIZE("rec.dim", rec.dim),
      FX_REAL("rec.lr", rec.learning_rate),
      FX_REAL("rec.l2", rec.l2),
      FX_SIZE("rec.epochs", rec.epochs),
      FX_SIZE("rec.negatives", rec.negative_ratio),

      FX_SIZE("graph.input_dim", graph.input_dim),
      Binding{"graph.layers",
              [](RunConfig& c, const std::string& v) {
                c.graph.layer_dims.clear();
                for (const auto& x : split_list(v)) {
                  c.graph.layer_dims.push_back(parse_int<std::size_t>("graph.layers", x));
                }
              },
              [](const RunConfig& c) {
                std::vector<std::string> xs;
                for (auto d : c.graph.layer_dims) xs.push_back(std::to_string(d));
                return join(xs);
              }},
      FX_SIZE("graph.output_dim", graph.output_dim),
      FX_REAL("graph.dropout", graph.dropout),
      FX_SIZE("graph.epochs", graph_train.epochs),
      FX_REAL("graph.lr", graph_train.learning_rate),
      FX_SIZE("graph.negatives", graph_train.negatives),

      FX_REAL("fairness.head_fraction", head_fraction),
      FX_REAL("fairness.lambda", disparity.lambda),
      Binding{"fairness.alpha",
              [](RunConfig& c, const std::string& v) {
                if (v == "auto") c.disparity.alpha.reset();
                else c.disparity.alpha = parse_real("fairness.alpha", v);
              },
              [](const RunConfig& c) {
                return c.disparity.alpha ? fmt::format("{}", *c.disparity.alpha) : std::string("auto");
              }},
      Binding{"fairness.epsilon",
              [](RunConfig& c, const std::string& v) {
                if (v == "auto") c.epsilon.reset();
                else c.epsilon = parse_real("fairness.epsilon", v);
              },
              [](const RunConfig& c) {
                return c.epsilon ? fmt::format("{}", *c.epsilon) : std::string("auto");
              }},

      FX_SIZE("cfe.state_dim", policy.state_dim),
      FX_SIZE("cfe.attention_dim", policy.attention_dim),
      FX_SIZE("cfe.candidate_size", policy.candidate_size),
      FX_FLAG("cfe.end_to_end", policy.end_to_end),
      FX_SIZE("cfe.episodes", explainer.episodes),
      FX_SIZE("cfe.horizon", explainer.horizon),
      FX_REAL("cfe.gamma", explainer.gamma),
      FX_REAL("cfe.lr", explainer.learning_rate),
      FX_SIZE("cfe.batch", explainer.batch_size),
      FX_REAL("cfe.clip", explainer.clip),
      FX_SIZE("cfe.budget", explanation_budget),

      FX_SIZE("eval.top_k", top_k),
      FX_SIZE("eval.erasure_length", erasure_length),
      FX_SIZE("eval.batch", erasure_batch),
      FX_TEXT("eval.format", report_format),
      Binding{"eval.methods",
              [](RunConfig& c, const std::string& v) { c.methods = split_list(v); },
              [](const RunConfig& c) { return join(c.methods); }},
  };
  return table;
}

#undef FX_SIZE
#undef FX_U64
#undef FX_REAL
#undef FX_FLAG
#undef FX_TEXT

bool known_method(const std::string& m) {
  return m == "cfairer" || m == "rdexp" || m == "pop_user" || m == "pop_item";
}

}  // namespace

std::vector<std::string> run_config_keys() {
  std::vector<std::string> keys;
  for (const auto& b : bindings()) keys.push_back(b.key);
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& b : bindings()) {
    if (b.key == key) {
      b.set(*this, trim(value));
      return;
    }
  }
  throw Error(ErrorCode::kConfig, fmt::format("unknown config key '{}'", key));
}

void RunConfig::validate() const {
  parse_checkpoint_format(checkpoint_format);
  parse_report_format(report_format);
  if (source == "synthetic") {
    synthetic.validate();
  } else if (source == "files") {
    for (const auto* p : {&interactions, &user_attributes, &item_attributes}) {
      if (p->empty() || !std::filesystem::exists(*p)) {
        throw Error(ErrorCode::kConfig,
                    fmt::format("data file '{}' does not exist", p->string()));
      }
    }
  } else {
    throw Error(ErrorCode::kConfig, fmt::format("data.source must be synthetic or files, got '{}'", source));
  }
  const double total = split.train + split.validation + split.test;
  if (!(split.train > 0 && split.validation >= 0 && split.test > 0) ||
      std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kConfig, "split fractions must be positive and sum to 1");
  }
  rec.validate();
  graph.validate();
  graph_train.validate();
  if (graph.output_dim != rec.dim) {
    throw Error(ErrorCode::kConfig,
                fmt::format("graph.output_dim ({}) must equal rec.dim ({}) for fusion",
                            graph.output_dim, rec.dim));
  }
  if (!(head_fraction > 0.0 && head_fraction < 1.0)) {
    throw Error(ErrorCode::kConfig, "fairness.head_fraction must lie in (0, 1)");
  }
  disparity.validate();
  if (epsilon && !(*epsilon >= 0.0)) throw Error(ErrorCode::kConfig, "epsilon must be >= 0");
  PolicyConfig pc = policy;
  pc.list_length = top_k;
  pc.embed_dim = rec.dim;
  pc.validate();
  explainer.validate();
  if (top_k == 0) throw Error(ErrorCode::kConfig, "eval.top_k must be at least 1");
  for (const auto& m : methods) {
    if (!known_method(m)) throw Error(ErrorCode::kConfig, fmt::format("unknown method '{}'", m));
  }
}

std::string RunConfig::resolved() const {
  std::string out;
  for (const auto& b : bindings()) out += b.key + "=" + b.get(*this) + "\n";
  return out;
}

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir) {
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfig, fmt::format("config line {}: expected key=value", line_no));
    }
    config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  if (!base_dir.empty()) {
    for (auto* p : {&config.interactions, &config.user_attributes, &config.item_attributes}) {
      if (!p->empty() && p->is_relative()) *p = base_dir / *p;
    }
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, fmt::format("cannot open config '{}'", path.string()));
  return parse_run_config(in, path.parent_path());
}

}  // namespace fairex
