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

#ifndef LMLOOP_RUN_CORPUS_H_
#define LMLOOP_RUN_CORPUS_H_

#include <cstdint>
#include <vector>

#include "lmloop/game/spec.h"
#include "lmloop/text/codec.h"

namespace lmloop::run {

struct ScriptedGame {
  game::GameSpec spec;
  std::vector<std::string> walkthrough;
};

// Replays each walkthrough episodes_per_game times. At every step the scripted
// action is replaced, with probability `noise`, by an action drawn uniformly
// from the admissible set. One sample per step; an episode that ends early is
// restarted so the corpus has exactly sum(walkthrough length) *
// episodes_per_game samples. Throws Error if noise is outside [0,1].
std::vector<text::ContextSample> gen_corpus(
    const std::vector<ScriptedGame>& games, int episodes_per_game, double noise,
    uint64_t seed);

}  // namespace lmloop::run

#endif  // LMLOOP_RUN_CORPUS_H_
