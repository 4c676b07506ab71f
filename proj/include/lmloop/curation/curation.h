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

#ifndef LMLOOP_CURATION_CURATION_H_
#define LMLOOP_CURATION_CURATION_H_

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmloop/drrn/drrn.h"
#include "lmloop/lm/action_lm.h"

namespace lmloop::curation {

enum class Strategy { kUT, kOC, kRT };
enum class WeightScheme { kUniform, kExpAdvantage, kLinearAdvantage };
enum class AdvantageMode { kRecompute, kCached };
enum class Label { kPositive, kNegative };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view s);
std::string_view weight_scheme_name(WeightScheme w);
WeightScheme parse_weight_scheme(std::string_view s);

// One environment step (o_t, a_t, o_{t+1}, r_{t+1}) with the features the
// categorization rules and the LM context need.
struct TransitionRecord {
  std::string prev_observation;  // empty at episode start
  std::string prev_action;       // empty at episode start
  std::string observation;
  std::string action;
  std::string next_observation;
  int reward = 0;
  int location = 0;
  int next_location = 0;
  int64_t episode = 0;
  int step = 0;
  std::vector<std::string> candidates;  // offered at o_t; contains action
  std::optional<double> cached_advantage;

  bool operator==(const TransitionRecord&) const = default;
};

// Positive iff the reward increased or the location changed.
Label categorize_oc(const TransitionRecord& record);

// Per-record labels for one episode. Every positive reward labels itself and
// all records back to (not including) the previous non-zero reward, or to the
// episode start. Throws ContractViolation unless the records share an episode
// id and have strictly increasing steps.
std::vector<Label> categorize_rt(std::span<const TransitionRecord> episode);

struct CurationConfig {
  Strategy strategy = Strategy::kOC;
  size_t capacity = 10000;  // per buffer
  double p_plus = 0.5;
  size_t d_lm = 512;
  WeightScheme scheme = WeightScheme::kUniform;
  double beta = 1.0;
  AdvantageMode advantage_mode = AdvantageMode::kRecompute;
};

// The D+ / D- FIFO pair. UT routes everything to D+; OC routes each record as
// it arrives; RT holds an episode until end_episode() and then routes it.
class CurationBuffers {
 public:
  explicit CurationBuffers(CurationConfig config);

  const CurationConfig& config() const { return config_; }

  void insert(TransitionRecord record);
  // Routes the pending episode (RT); a no-op for UT and OC.
  void end_episode();
  void insert_episode(std::span<const TransitionRecord> episode);

  size_t positive_size() const { return positive_.size(); }
  size_t negative_size() const { return negative_.size(); }
  size_t pending_size() const { return pending_.size(); }
  const std::deque<TransitionRecord>& positive() const { return positive_; }
  const std::deque<TransitionRecord>& negative() const { return negative_; }

  // n draws: D+ with probability p_plus (D- otherwise), falling through to
  // the other buffer when the chosen one is empty, then a uniform element
  // with replacement. from_positive, if given, receives the buffer of each
  // draw. Throws ContractViolation when both buffers are empty.
  std::vector<const TransitionRecord*> sample(
      size_t n, uint64_t seed, std::vector<bool>* from_positive = nullptr) const;

  // Tab-separated, one record per line; see games/FORMAT.md. Pending RT
  // records are not written.
  void dump(const std::filesystem::path& path) const;
  void restore(const std::filesystem::path& path);

 private:
  void route(TransitionRecord record, Label label);

  CurationConfig config_;
  std::deque<TransitionRecord> positive_;
  std::deque<TransitionRecord> negative_;
  std::vector<TransitionRecord> pending_;
};

// Uniform -> 1; ExpAdvantage -> exp(beta * A); LinearAdvantage -> 1 + beta * A.
double compute_h(WeightScheme scheme, double beta, double advantage);

// Advantage of each record's action under `q` (recomputed) or its cached
// value. Throws ContractViolation if a cached value is missing.
std::vector<double> record_advantages(std::span<const TransitionRecord* const> records,
                                      const drrn::QNetwork& q,
                                      AdvantageMode mode);

// ((o_{t-1}, a_{t-1}, o_t), a_t) context samples carrying the given weights.
std::vector<lm::WeightedSample> to_context_samples(
    std::span<const TransitionRecord* const> records,
    std::span<const double> weights);

// Weights per the buffers' scheme; `q` may be null for the uniform scheme.
std::vector<double> curation_weights(
    const CurationConfig& config,
    std::span<const TransitionRecord* const> records, const drrn::QNetwork* q);

}  // namespace lmloop::curation

#endif  // LMLOOP_CURATION_CURATION_H_
