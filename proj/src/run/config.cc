// Copyright 2026 The lmloop Authors.
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

#include "lmloop/run/config.h"

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lmloop/error.h"

namespace lmloop::run {
namespace {

using nlohmann::json;

constexpr std::pair<RunMode, std::string_view> kModes[] = {
    {RunMode::kFull, "full"},
    {RunMode::kFrozenLm, "frozen_lm"},
    {RunMode::kLmPolicyFrozen, "lm_policy_frozen"},
    {RunMode::kLmPolicyInLoop, "lm_policy_inloop"},
    {RunMode::kTransfer, "transfer"},
};

struct Field {
  std::string key;
  std::function<void(json&, const RunConfig&)> put;
  std::function<void(const json&, RunConfig&)> get;
};

template <typename T, typename Access>
Field plain(std::string key, Access access) {
  return {key,
          [key, access](json& j, const RunConfig& c) {
            j[key] = access(const_cast<RunConfig&>(c));
          },
          [access](const json& j, RunConfig& c) { access(c) = j.get<T>(); }};
}

template <typename Access>
Field path(std::string key, Access access) {
  return {key,
          [key, access](json& j, const RunConfig& c) {
            j[key] = access(const_cast<RunConfig&>(c)).generic_string();
          },
          [access](const json& j, RunConfig& c) {
            access(c) = std::filesystem::path(j.get<std::string>());
          }};
}

template <typename E, typename Access>
Field named(std::string key, Access access, std::string_view (*name)(E),
            E (*parse)(std::string_view)) {
  return {key,
          [key, access, name](json& j, const RunConfig& c) {
            j[key] = std::string(name(access(const_cast<RunConfig&>(c))));
          },
          [access, parse](const json& j, RunConfig& c) {
            access(c) = parse(j.get<std::string>());
          }};
}

std::string_view trigger_name(FinetuneTrigger t) {
  return t == FinetuneTrigger::kEnvSteps ? "env_steps" : "episodes";
}
FinetuneTrigger parse_trigger(std::string_view s) {
  if (s == "env_steps") return FinetuneTrigger::kEnvSteps;
  if (s == "episodes") return FinetuneTrigger::kEpisodes;
  throw ValidationError("unknown finetune_trigger: " + std::string(s));
}
std::string_view advantage_mode_name(curation::AdvantageMode m) {
  return m == curation::AdvantageMode::kRecompute ? "recompute" : "cached";
}
curation::AdvantageMode parse_advantage_mode(std::string_view s) {
  if (s == "recompute") return curation::AdvantageMode::kRecompute;
  if (s == "cached") return curation::AdvantageMode::kCached;
  throw ValidationError("unknown advantage_mode: " + std::string(s));
}

#define LMLOOP_ACCESS(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      named<RunMode>("mode", LMLOOP_ACCESS(mode), run_mode_name, parse_run_mode),
      plain<std::string>("game", LMLOOP_ACCESS(game)),
      path("games_dir", LMLOOP_ACCESS(games_dir)),
      plain<uint64_t>("seed", LMLOOP_ACCESS(seed)),
      plain<int64_t>("total_env_steps", LMLOOP_ACCESS(total_env_steps)),
      plain<int>("n_envs", LMLOOP_ACCESS(n_envs)),
      named<FinetuneTrigger>("finetune_trigger", LMLOOP_ACCESS(finetune_trigger),
                             trigger_name, parse_trigger),
      plain<int64_t>("k", LMLOOP_ACCESS(k)),
      plain<int64_t>("n_rl_episodes", LMLOOP_ACCESS(n_rl_episodes)),
      plain<int>("lm_grad_steps", LMLOOP_ACCESS(lm_grad_steps)),
      plain<int>("lm_batch_size", LMLOOP_ACCESS(lm_batch_size)),
      plain<double>("lm_lr", LMLOOP_ACCESS(lm_lr)),
      plain<double>("lm_warmup", LMLOOP_ACCESS(lm_warmup)),
      plain<double>("lm_clip_norm", LMLOOP_ACCESS(lm_clip_norm)),
      plain<double>("lm_weight_decay", LMLOOP_ACCESS(lm_weight_decay)),
      plain<double>("lm_adam_eps", LMLOOP_ACCESS(lm_adam_eps)),
      named<curation::Strategy>("strategy", LMLOOP_ACCESS(curation.strategy),
                                curation::strategy_name, curation::parse_strategy),
      named<curation::WeightScheme>("weight_scheme", LMLOOP_ACCESS(curation.scheme),
                                    curation::weight_scheme_name,
                                    curation::parse_weight_scheme),
      plain<double>("beta", LMLOOP_ACCESS(curation.beta)),
      plain<double>("p_plus", LMLOOP_ACCESS(curation.p_plus)),
      plain<size_t>("d_lm", LMLOOP_ACCESS(curation.d_lm)),
      plain<size_t>("buffer_capacity", LMLOOP_ACCESS(curation.capacity)),
      named<curation::AdvantageMode>("advantage_mode",
                                     LMLOOP_ACCESS(curation.advantage_mode),
                                     advantage_mode_name, parse_advantage_mode),
      path("corpus", LMLOOP_ACCESS(corpus)),
      plain<double>("corpus_fraction", LMLOOP_ACCESS(corpus_fraction)),
      plain<int>("adapt_epochs", LMLOOP_ACCESS(adapt_epochs)),
      plain<int>("adapt_batch_size", LMLOOP_ACCESS(adapt_batch_size)),
      plain<double>("adapt_lr", LMLOOP_ACCESS(adapt_lr)),
      path("lm_checkpoint", LMLOOP_ACCESS(lm_checkpoint)),
      plain<int>("lm_hidden", LMLOOP_ACCESS(lm.hidden)),
      plain<int>("lm_layers", LMLOOP_ACCESS(lm.layers)),
      plain<int>("lm_max_len", LMLOOP_ACCESS(lm.max_len)),
      plain<double>("temperature", LMLOOP_ACCESS(lm.temperature)),
      plain<int>("top_k", LMLOOP_ACCESS(lm.top_k)),
      plain<int>("n_candidates", LMLOOP_ACCESS(lm.n_candidates)),
      plain<int>("max_action_tokens", LMLOOP_ACCESS(lm.max_action_tokens)),
      plain<int>("q_embedding", LMLOOP_ACCESS(q.embedding)),
      plain<int>("q_hidden", LMLOOP_ACCESS(q.hidden)),
      plain<int>("q_max_obs_tokens", LMLOOP_ACCESS(q.max_obs_tokens)),
      plain<double>("rl_lr", LMLOOP_ACCESS(rl_lr)),
      plain<int>("rl_batch_size", LMLOOP_ACCESS(rl_batch_size)),
      plain<double>("gamma", LMLOOP_ACCESS(gamma)),
      plain<double>("priority_fraction", LMLOOP_ACCESS(priority_fraction)),
      plain<size_t>("replay_capacity", LMLOOP_ACCESS(replay_capacity)),
      plain<double>("rl_clip_norm", LMLOOP_ACCESS(rl_clip_norm)),
      path("source_run", LMLOOP_ACCESS(source_run)),
      plain<bool>("checkpoint_each_phase", LMLOOP_ACCESS(checkpoint_each_phase)),
  };
  return kFields;
}

#undef LMLOOP_ACCESS

}  // namespace

std::string_view run_mode_name(RunMode m) {
  for (const auto& [mode, name] : kModes) {
    if (mode == m) return name;
  }
  throw Error("unknown run mode");
}

RunMode parse_run_mode(std::string_view s) {
  for (const auto& [mode, name] : kModes) {
    if (name == s) return mode;
  }
  throw ValidationError("unknown mode: " + std::string(s));
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError("invalid run config: " + what);
  };
  require(!game.empty(), "game must be set");
  require(total_env_steps > 0, "total_env_steps must be positive");
  require(n_envs >= 1, "n_envs must be at least 1");
  require(total_env_steps % n_envs == 0,
          "total_env_steps must be a multiple of n_envs");
  require(k >= 1 && k <= total_env_steps, "k must lie in [1, total_env_steps]");
  require(k % n_envs == 0, "k must be a multiple of n_envs");
  require(finetune_trigger != FinetuneTrigger::kEpisodes || n_rl_episodes >= 1,
          "n_rl_episodes must be positive with the episodes trigger");
  require(lm_grad_steps >= 0, "lm_grad_steps must be non-negative");
  require(lm_batch_size >= 1, "lm_batch_size must be positive");
  require(curation.p_plus >= 0.0 && curation.p_plus <= 1.0, "p_plus must lie in [0,1]");
  require(curation.d_lm >= 1, "d_lm must be positive");
  require(curation.capacity >= 1, "buffer_capacity must be positive");
  require(curation.scheme == curation::WeightScheme::kUniform || curation.beta > 0.0,
          "beta must be positive for advantage weights");
  require(corpus_fraction > 0.0 && corpus_fraction <= 1.0,
          "corpus_fraction must lie in (0,1]");
  require(lm.n_candidates >= 1, "n_candidates must be positive");
  require(lm.max_action_tokens >= 1 && lm.max_action_tokens <= 8,
          "max_action_tokens must lie in [1,8]");
  require(rl_batch_size >= 1, "rl_batch_size must be positive");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0,1]");
  require(priority_fraction >= 0.0 && priority_fraction <= 1.0,
          "priority_fraction must lie in [0,1]");
  require(replay_capacity >= 1, "replay_capacity must be positive");
  require(mode != RunMode::kTransfer || !source_run.empty(),
          "transfer needs source_run");
}

std::string to_json(const RunConfig& c) {
  json j = json::object();
  for (const auto& f : fields()) f.put(j, c);
  return j.dump(2) + "\n";
}

RunConfig config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("config", 0, e.what());
  }
  if (!j.is_object()) throw ParseError("config", 0, "expected a JSON object");
  std::set<std::string> known;
  RunConfig c;
  for (const auto& f : fields()) {
    known.insert(f.key);
    if (!j.contains(f.key)) continue;
    try {
      f.get(j.at(f.key), c);
    } catch (const json::exception& e) {
      throw ValidationError("config key " + f.key + ": " + e.what());
    }
  }
  for (const auto& [key, value] : j.items()) {
    if (known.count(key) == 0) throw ValidationError("unknown config key: " + key);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

RunConfig with_overrides(const RunConfig& c, const std::vector<std::string>& sets) {
  json j = json::parse(to_json(c));
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError("override must be key=value: " + s);
    }
    const std::string key = s.substr(0, eq);
    const std::string value = s.substr(eq + 1);
    json v = json::parse(value, nullptr, false);
    j[key] = v.is_discarded() ? json(value) : v;
  }
  return config_from_json(j.dump());
}

std::string method_label(const RunConfig& c) {
  std::string label;
  switch (c.mode) {
    case RunMode::kFrozenLm:
      label = "frozen";
      break;
    case RunMode::kFull:
      label = curation::strategy_name(c.curation.strategy);
      if (c.curation.scheme == curation::WeightScheme::kExpAdvantage) label += "_ea";
      if (c.curation.scheme == curation::WeightScheme::kLinearAdvantage) label += "_la";
      break;
    default:
      label = run_mode_name(c.mode);
  }
  if (c.corpus_fraction < 1.0) {
    label += "@" + std::to_string(static_cast<int>(std::lround(100 * c.corpus_fraction)));
  }
  return label;
}

void save_config(const std::filesystem::path& path, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(c);
}

}  // namespace lmloop::run
