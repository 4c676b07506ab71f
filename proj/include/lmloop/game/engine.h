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

#ifndef LMLOOP_GAME_ENGINE_H_
#define LMLOOP_GAME_ENGINE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lmloop/game/spec.h"

namespace lmloop::game {

enum class ResponseClass { kEffect, kNoEffect, kUnrecognized };

const char* response_class_name(ResponseClass c);

struct WorldState {
  int location = 0;
  std::vector<int> object_location;  // per object: room, kInventory, kNowhere
  std::vector<bool> fired;           // per trigger
  int step_count = 0;
  int cumulative_score = 0;
  bool done = false;
  bool won = false;

  std::set<std::string> inventory(const GameSpec& spec) const;
  bool operator==(const WorldState&) const = default;
};

struct StepResult {
  std::string observation;
  int reward = 0;
  bool done = false;
  int location_id = 0;  // room index after the step
  ResponseClass response_class = ResponseClass::kUnrecognized;

  bool operator==(const StepResult&) const = default;
};

// Observation: room name and description, visible objects, exits, inventory.
std::string describe(const GameSpec& spec, const WorldState& state);

// Initial state and observation. The games are deterministic, so the seed
// only exists to keep the interface uniform; equal inputs give equal outputs.
std::pair<WorldState, std::string> reset(const GameSpec& spec, uint64_t seed);

// Advances one step. Throws ContractViolation if the episode is done.
std::pair<WorldState, StepResult> step(const GameSpec& spec,
                                       const WorldState& state,
                                       std::string_view action);

// Response class `step` would report, without building the observation.
ResponseClass classify(const GameSpec& spec, const WorldState& state,
                       std::string_view action);

// Exactly the actions whose response class is kEffect (empty once done).
// Derived from the rules, not by trial stepping.
std::set<std::string> admissible_actions(const GameSpec& spec,
                                         const WorldState& state);

// Every string of the closed grammar: each verb alone and with each noun.
std::vector<std::string> grammar_actions(const GameSpec& spec);

// Breadth-first search over admissible actions for a shortest winning
// sequence of at most max_depth actions. Returns nullopt if none is found
// within the depth or state budget. Without allow_drop the search skips
// "drop" actions, which keeps it small; any plan found is still valid.
std::optional<std::vector<std::string>> solve(const GameSpec& spec,
                                              int max_depth = kEpisodeCap,
                                              size_t max_states = 500000,
                                              bool allow_drop = false);

// A running episode over a shared spec.
class Environment {
 public:
  explicit Environment(std::shared_ptr<const GameSpec> spec);

  const std::string& reset(uint64_t seed);
  StepResult step(std::string_view action);

  const GameSpec& spec() const { return *spec_; }
  std::shared_ptr<const GameSpec> spec_ptr() const { return spec_; }
  const WorldState& state() const { return state_; }
  const std::string& observation() const { return observation_; }
  bool done() const { return state_.done; }

 private:
  std::shared_ptr<const GameSpec> spec_;
  WorldState state_;
  std::string observation_;
};

}  // namespace lmloop::game

#endif  // LMLOOP_GAME_ENGINE_H_
