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

#ifndef LMLOOP_RUN_CONFIG_H_
#define LMLOOP_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lmloop/curation/curation.h"
#include "lmloop/drrn/drrn.h"
#include "lmloop/lm/action_lm.h"

namespace lmloop::run {

enum class RunMode { kFull, kFrozenLm, kLmPolicyFrozen, kLmPolicyInLoop, kTransfer };
enum class FinetuneTrigger { kEnvSteps, kEpisodes };

std::string_view run_mode_name(RunMode m);
RunMode parse_run_mode(std::string_view s);

// Every knob of a run. Serialized as JSON with one key per field (see
// README.md for the key list); unknown keys are rejected.
struct RunConfig {
  RunMode mode = RunMode::kFull;
  std::string game;  // the game this run plays
  std::filesystem::path games_dir;
  uint64_t seed = 0;

  int64_t total_env_steps = 20000;
  int n_envs = 8;

  // In-loop LM fine-tuning.
  FinetuneTrigger finetune_trigger = FinetuneTrigger::kEnvSteps;
  int64_t k = 1000;              // env steps between fine-tune phases
  int64_t n_rl_episodes = 0;     // episodes between phases (episode trigger)
  int lm_grad_steps = 200;
  int lm_batch_size = 16;
  double lm_lr = 2e-4;
  double lm_warmup = 0.1;
  double lm_clip_norm = 1.0;
  double lm_weight_decay = 0.01;
  double lm_adam_eps = 1e-9;

  curation::CurationConfig curation;

  // Adaptation.
  std::filesystem::path corpus;
  double corpus_fraction = 1.0;
  int adapt_epochs = 3;
  int adapt_batch_size = 16;
  double adapt_lr = 2e-3;
  std::filesystem::path lm_checkpoint;  // adapted LM the run starts from

  lm::LmConfig lm;

  // DRRN.
  drrn::QNetConfig q;
  double rl_lr = 1e-4;
  int rl_batch_size = 32;
  double gamma = 0.9;
  double priority_fraction = 0.5;
  size_t replay_capacity = 10000;
  double rl_clip_norm = 5.0;

  // Transfer: the run directory whose final LM checkpoint seeds this run.
  std::filesystem::path source_run;

  // Write θ/Φ checkpoints at every fine-tune boundary (final ones always).
  bool checkpoint_each_phase = true;

  // Throws ValidationError naming the offending key.
  void validate() const;
};

std::string to_json(const RunConfig& c);
RunConfig config_from_json(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

// Applies "key=value" overrides to a config's JSON form. The value is read as
// JSON when it parses as JSON and as a string otherwise.
RunConfig with_overrides(const RunConfig& c, const std::vector<std::string>& sets);

// Short method label used in reports: "frozen", "oc", "ut", "ut_ea",
// "ut_la", "rt", "lm_policy_frozen", "lm_policy_inloop", "transfer"; a
// corpus fraction below 1 appends "@<percent>".
std::string method_label(const RunConfig& c);
void save_config(const std::filesystem::path& path, const RunConfig& c);

}  // namespace lmloop::run

#endif  // LMLOOP_RUN_CONFIG_H_
