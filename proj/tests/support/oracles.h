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

#ifndef LMLOOP_TESTS_SUPPORT_ORACLES_H_
#define LMLOOP_TESTS_SUPPORT_ORACLES_H_

#include <array>
#include <string>
#include <vector>

#include "lmloop/drrn/drrn.h"
#include "lmloop/rng.h"

namespace lmloop::testing {

// Brute-force sentence BLEU-2: n-grams are compared position by position with
// no hashing or maps. Same conventions as the library: orders limited to the
// hypothesis length, zero clipped counts become 1e-9, brevity penalty against
// the closest reference length with ties to the shorter.
double brute_force_bleu2(const std::vector<std::string>& hypothesis,
                         const std::vector<std::vector<std::string>>& references);

// Mean of brute_force_bleu2 over source actions against all target actions.
double brute_force_similarity(const std::vector<std::string>& source,
                              const std::vector<std::string>& target);

// A random set of distinct short actions over a small word pool.
std::vector<std::string> random_action_set(Rng& rng, size_t max_size);

// A published results table: per-game cell values for six method columns,
// the per-game maximum scores, the bottom normalized-score row, and the
// per-game relative-improvement column.
struct PublishedTable {
  static constexpr int kMethods = 6;
  std::array<std::string, kMethods> methods;
  std::vector<std::string> games;
  std::vector<double> max_scores;
  std::vector<std::array<double, kMethods>> cells;
  std::array<double, kMethods> norm_row;
  std::vector<double> delta_column;
  double delta_mean = 0.0;  // as reported, from unrounded inputs
};

const PublishedTable& published_table();

// A deterministic corridor of `rooms` rooms: "go east" advances, "wait"
// stays, and leaving the last room ends the episode with reward 1. `optimal`
// holds the value-iteration Q of each transition.
struct ChainFixture {
  std::vector<drrn::Transition> transitions;
  std::vector<double> optimal;
};
ChainFixture value_iteration_chain(int rooms, double gamma);

// Vocabulary covering the chain's words.
std::shared_ptr<const text::Vocabulary> chain_vocab();

// Fits a small Q network to the chain by full-batch TD updates and returns
// the largest |Q - Q*| over its transitions.
double chain_fit_error(int rooms, uint64_t seed);

}  // namespace lmloop::testing

#endif  // LMLOOP_TESTS_SUPPORT_ORACLES_H_
