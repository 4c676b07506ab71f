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

#ifndef LMLOOP_RUN_ORCHESTRATOR_H_
#define LMLOOP_RUN_ORCHESTRATOR_H_

#include <filesystem>
#include <string>
#include <vector>

#include "lmloop/game/spec.h"
#include "lmloop/lm/action_lm.h"
#include "lmloop/metrics/metrics.h"
#include "lmloop/run/config.h"

namespace lmloop::run {

// Files of a run directory. Checkpoint names are stems (see
// nn/checkpoint.h).
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kScoreLogFile = "scores.csv";
inline constexpr const char* kEventLogFile = "events.log";
inline constexpr const char* kAdaptedLmFile = "lm_adapted";
inline constexpr const char* kAdaptationReportFile = "adaptation.csv";
inline constexpr const char* kFinalLmFile = "lm_final";
inline constexpr const char* kFinalQFile = "q_final";
inline constexpr const char* kBuffersFile = "buffers.tsv";
inline constexpr const char* kTransferFile = "transfer.csv";
inline constexpr const char* kCheckpointDir = "checkpoints";

struct RunArtifacts {
  std::filesystem::path dir;
  metrics::ScoreSeries scores;  // one point per finished episode
  int finetune_phases = 0;
  int64_t env_steps = 0;
};

// The games directory's suite and its shared vocabulary.
struct Suite {
  std::vector<game::GameSpec> specs;
  std::shared_ptr<const text::Vocabulary> vocab;

  const game::GameSpec& get(const std::string& game_id) const;
};
Suite load_suite_with_vocab(const std::filesystem::path& games_dir);

// Adapts a freshly initialized LM on config.corpus (honoring
// corpus_fraction) and writes the checkpoint, the adaptation report, the
// vocabulary and the config into out_dir. Throws Error on a missing corpus.
lm::AdaptationReport run_adaptation(const RunConfig& config,
                                    const std::filesystem::path& out_dir);

// DRRN training with LM candidates in lockstep rounds of n_envs steps and,
// unless the mode is frozen_lm, an LM fine-tune phase on curated transitions
// every k env steps. Starts from config.lm_checkpoint.
RunArtifacts run_training(const RunConfig& config,
                          const std::filesystem::path& run_dir);

// The LM plays its greedy action; no DRRN. lm_policy_inloop still fine-tunes
// on curated transitions, with uniform weights.
RunArtifacts run_lm_policy(const RunConfig& config,
                           const std::filesystem::path& run_dir);

// run_training on config.game starting from the final LM of
// config.source_run with a fresh DRRN; also writes transfer.csv with the
// action-set similarity of source and target. Throws Error if the source
// checkpoint is missing.
RunArtifacts run_transfer(const RunConfig& config,
                          const std::filesystem::path& run_dir);

// Dispatches on config.mode.
RunArtifacts run(const RunConfig& config, const std::filesystem::path& run_dir);

// Admissible actions met along the walkthrough, sorted; the action set used
// for transfer similarity.
std::vector<std::string> game_action_set(const game::GameSpec& spec,
                                         const std::vector<std::string>& walkthrough);

std::filesystem::path walkthrough_path(const std::filesystem::path& games_dir,
                                       const std::string& game_id);

}  // namespace lmloop::run

#endif  // LMLOOP_RUN_ORCHESTRATOR_H_
