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

#include "lmloop/run/corpus.h"

#include "lmloop/error.h"
#include "lmloop/game/engine.h"
#include "lmloop/rng.h"

namespace lmloop::run {

std::vector<text::ContextSample> gen_corpus(
    const std::vector<ScriptedGame>& games, int episodes_per_game, double noise,
    uint64_t seed) {
  if (!(noise >= 0.0 && noise <= 1.0)) {
    throw Error("corpus noise must lie in [0,1]");
  }
  std::vector<text::ContextSample> out;
  for (const auto& g : games) {
    Rng rng(derive_seed(seed, hash_string(g.spec.game_id)));
    for (int ep = 0; ep < episodes_per_game; ++ep) {
      auto [state, obs] = game::reset(g.spec, 0);
      std::string prev_obs;
      std::string prev_action;
      for (const auto& scripted : g.walkthrough) {
        if (state.done) {
          std::tie(state, obs) = game::reset(g.spec, 0);
          prev_obs.clear();
          prev_action.clear();
        }
        std::string action = scripted;
        if (rng.bernoulli(noise)) {
          const auto adm = game::admissible_actions(g.spec, state);
          if (!adm.empty()) {
            auto it = adm.begin();
            std::advance(it, rng.index(adm.size()));
            action = *it;
          }
        }
        out.push_back({prev_obs, prev_action, obs, action});
        auto [next, result] = game::step(g.spec, state, action);
        prev_obs = std::move(obs);
        prev_action = action;
        obs = result.observation;
        state = std::move(next);
      }
    }
  }
  return out;
}

}  // namespace lmloop::run
