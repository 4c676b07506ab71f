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

#ifndef LMLOOP_DRRN_DRRN_H_
#define LMLOOP_DRRN_DRRN_H_

#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmloop/nn/layers.h"
#include "lmloop/nn/optimizer.h"
#include "lmloop/nn/param_store.h"
#include "lmloop/rng.h"
#include "lmloop/text/codec.h"

namespace lmloop::drrn {

struct QNetConfig {
  int embedding = 128;
  int hidden = 128;
  // Observations keep their last max_obs_tokens tokens.
  int max_obs_tokens = 64;
};

// Q(o, a) = MLP([GRU_o(o); GRU_a(a)]) with separate encoders for observation
// and action text and a shared word embedding.
class QNetwork {
 public:
  // A set of (observation, action) pairs that index into deduplicated
  // observation and action token lists.
  struct Batch {
    std::vector<text::TokenSequence> observations;
    std::vector<text::TokenSequence> actions;
    std::vector<std::pair<int, int>> pairs;
  };

  struct Cache {
    std::vector<std::vector<int>> obs_steps, act_steps;
    nn::GruSequenceCache obs_seq, act_seq;
    nn::Matrix joint;   // (2H x P)
    nn::Matrix hidden;  // tanh activations (H x P)
  };

  QNetwork(std::shared_ptr<const text::Vocabulary> vocab, QNetConfig config,
           uint64_t seed);

  const QNetConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  text::TokenSequence encode_observation(std::string_view text) const;
  text::TokenSequence encode_action(std::string_view text) const;

  // Final encoder state for each sequence; an empty sequence maps to the
  // zero initial state.
  nn::Matrix encode_sequences(const nn::GruCell& cell,
                              std::span<const text::TokenSequence> seqs) const;
  const nn::GruCell& observation_encoder() const { return obs_gru_; }
  const nn::GruCell& action_encoder() const { return act_gru_; }

  std::vector<double> forward(const Batch& batch, Cache* cache) const;
  // Accumulates parameter gradients for dL/dq.
  void backward(const Batch& batch, const Cache& cache,
                std::span<const double> dq);

  double q_value(std::string_view observation, std::string_view action) const;
  std::vector<double> q_values(std::string_view observation,
                               std::span<const std::string> actions) const;

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  nn::Matrix run_encoder(const nn::GruCell& cell,
                         std::span<const text::TokenSequence> seqs,
                         std::vector<std::vector<int>>* steps,
                         nn::GruSequenceCache* cache) const;
  void backward_encoder(const nn::GruCell& cell,
                        const std::vector<std::vector<int>>& steps,
                        const nn::GruSequenceCache& cache,
                        const nn::Matrix& dfinal);

  std::shared_ptr<const text::Vocabulary> vocab_;
  QNetConfig config_;
  nn::ParamStore params_;
  nn::Embedding embed_;
  nn::GruCell obs_gru_;
  nn::GruCell act_gru_;
  nn::Dense hidden_layer_;
  nn::Dense out_layer_;
};

// (o, a, r, o', A', done). A' is the candidate set offered at o'.
struct Transition {
  std::string observation;
  std::string action;
  double reward = 0.0;
  std::string next_observation;
  std::vector<std::string> next_candidates;
  bool done = false;
};

// Two-class replay: transitions with non-zero reward form the priority
// class. Each draw picks the priority class with probability
// priority_fraction (when it is non-empty; otherwise the other class), then a
// uniform member with replacement. At capacity the globally oldest entry is
// evicted.
class PrioritizedReplay {
 public:
  PrioritizedReplay(size_t capacity, double priority_fraction);

  void push(Transition t);
  size_t size() const { return priority_.size() + regular_.size(); }
  size_t priority_size() const { return priority_.size(); }
  size_t regular_size() const { return regular_.size(); }
  size_t capacity() const { return capacity_; }
  bool empty() const { return size() == 0; }

  // Every stored transition, oldest first.
  std::vector<const Transition*> entries() const;

  // Throws ContractViolation when empty.
  std::vector<const Transition*> sample(size_t n, Rng& rng) const;

 private:
  struct Slot {
    uint64_t seq;
    Transition t;
  };
  size_t capacity_;
  double priority_fraction_;
  uint64_t next_seq_ = 0;
  std::deque<Slot> priority_;
  std::deque<Slot> regular_;
};

struct TdOptions {
  double gamma = 0.9;
  nn::AdamOptions adam{.lr = 1e-4, .clip_norm = 5.0};
};

// Squared TD error (r + gamma * max_next_q * [not terminal] - q)^2.
double td_error_sq(double reward, double gamma, double max_next_q, double q,
                   bool terminal);

// Targets r + gamma * max_{a'} Q(o', a'), evaluated with the current
// parameters; terminal entries and entries without next candidates use r.
std::vector<double> td_targets(const QNetwork& q,
                               std::span<const Transition* const> batch,
                               double gamma);

// One gradient step on the mean squared TD error. Targets are computed before
// the step. Returns the loss.
double td_update(QNetwork& q, std::span<const Transition* const> batch,
                 const TdOptions& opts);

enum class SelectMode { kSoft, kGreedy };

struct Selection {
  size_t index = 0;
  std::vector<double> q;
};

// kSoft samples from softmax(Q / temperature); kGreedy takes the first
// maximum. Throws ContractViolation on an empty candidate list.
Selection select_action(const QNetwork& q, std::string_view observation,
                        std::span<const std::string> candidates,
                        SelectMode mode, Rng& rng, double temperature = 1.0);

// Boltzmann-averaged value sum_a softmax(Q/temperature)_a Q_a.
double state_value(std::span<const double> q, double temperature = 1.0);

// Q(o, a) - V(o) over the candidate set. Throws ContractViolation if
// `action` is not a candidate.
double advantage(const QNetwork& q, std::string_view observation,
                 std::string_view action,
                 std::span<const std::string> candidates,
                 double temperature = 1.0);

}  // namespace lmloop::drrn

#endif  // LMLOOP_DRRN_DRRN_H_
