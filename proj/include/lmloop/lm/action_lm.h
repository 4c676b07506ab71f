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

#ifndef LMLOOP_LM_ACTION_LM_H_
#define LMLOOP_LM_ACTION_LM_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmloop/nn/layers.h"
#include "lmloop/nn/optimizer.h"
#include "lmloop/nn/param_store.h"
#include "lmloop/text/codec.h"

namespace lmloop::lm {

struct LmConfig {
  int hidden = 128;  // also the embedding width (tied output projection)
  int layers = 2;
  int max_len = text::kDefaultMaxLen;
  double temperature = 1.0;  // < 1e-6 decodes greedily
  int top_k = 20;
  int n_candidates = 10;
  int max_action_tokens = 8;
  // Sampling attempts per requested candidate before giving up on reaching n
  // distinct actions.
  int attempts_per_candidate = 3;
};

struct Candidate {
  std::string action;
  double log_prob = 0.0;  // under the untempered model, including [EOS]
};

// Distinct actions, highest log-probability first.
struct CandidateSet {
  std::vector<Candidate> items;

  size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  bool contains(const std::string& action) const;
  std::vector<std::string> actions() const;
};

struct WeightedSample {
  text::ContextSample sample;
  double weight = 1.0;
};

// Memo of decoder states keyed by token prefix. Valid for one parameter
// snapshot; clear it whenever the parameters change.
class GenerationCache {
 public:
  struct Node {
    std::vector<nn::Vector> states;  // per layer, after the prefix
    std::vector<int> top_ids;        // top-k admissible next tokens
    std::vector<double> top_logits;
    double log_norm = 0.0;  // log-sum-exp over all admissible next tokens
  };

  explicit GenerationCache(size_t max_nodes = 200000) : max_nodes_(max_nodes) {}
  void clear() { nodes_.clear(); }
  size_t size() const { return nodes_.size(); }

 private:
  friend class ActionLm;
  std::unordered_map<std::string, Node> nodes_;
  size_t max_nodes_;
};

// Causal GRU language model over the shared vocabulary: embedding, a stack of
// GRU layers, and an output projection tied to the embedding table.
class ActionLm {
 public:
  ActionLm(std::shared_ptr<const text::Vocabulary> vocab, LmConfig config,
           uint64_t seed);

  const LmConfig& config() const { return config_; }
  void set_temperature(double t) { config_.temperature = t; }
  void set_top_k(int k) { config_.top_k = k; }
  const text::Vocabulary& vocab() const { return *vocab_; }
  std::shared_ptr<const text::Vocabulary> vocab_ptr() const { return vocab_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // NLL of each loss-masked token (target tokens, then [EOS]).
  std::vector<double> sequence_nll(const text::ContextSample& sample) const;

  // Model distribution over the vocabulary after consuming `prefix`.
  nn::Vector next_token_probs(std::span<const text::TokenId> prefix) const;

  // Adds sum_i scales[i] * NLL_i to the gradients, where NLL_i is the summed
  // masked-token NLL of batch[i]. Returns sum_i scales[i] * NLL_i. If
  // token_stats is non-null it receives (total masked NLL, masked tokens,
  // correctly predicted masked tokens) without scaling.
  double accumulate(std::span<const text::EncodedSample> batch,
                    std::span<const double> scales, bool backward,
                    std::array<double, 3>* token_stats = nullptr,
                    std::vector<double>* position_nll = nullptr);

  // Plain causal-LM step: loss = mean over the batch of sequence NLL.
  double train_step(std::span<const text::ContextSample> batch,
                    const nn::AdamOptions& opts);
  // loss = mean over the batch of weight * sequence NLL. Negative weights
  // ascend that sample's NLL. Throws NonFiniteError on a non-finite weight or
  // loss.
  double weighted_train_step(std::span<const WeightedSample> batch,
                             const nn::AdamOptions& opts);

  // Top-k / temperature sampling of up to n distinct actions, each at most
  // max_action_tokens long and ended by [EOS]. The target field of `context`
  // is ignored. Deterministic for a given seed.
  CandidateSet generate_candidates(const text::ContextSample& context, int n,
                                   uint64_t seed,
                                   GenerationCache* cache = nullptr) const;

  // Greedy decode of the single most probable continuation.
  std::string argmax_action(const text::ContextSample& context,
                            GenerationCache* cache = nullptr) const;

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  using Node = GenerationCache::Node;

  text::TokenSequence prompt(const text::ContextSample& context) const;
  Node make_node(std::vector<nn::Vector> states) const;
  const Node& node_for(const text::TokenSequence& prefix, const Node* parent,
                       GenerationCache* cache, Node* scratch) const;
  Node advance(const Node& from, int token) const;
  Node run_prompt(const text::TokenSequence& prompt) const;
  Candidate decode(const text::TokenSequence& prompt, uint64_t seed,
                   bool greedy, GenerationCache* cache) const;

  std::shared_ptr<const text::Vocabulary> vocab_;
  LmConfig config_;
  nn::ParamStore params_;
  nn::Embedding embed_;
  std::vector<nn::GruCell> cells_;
  nn::Param* out_bias_ = nullptr;
};

struct AdaptOptions {
  double fraction = 1.0;
  int epochs = 3;
  int batch_size = 16;
  double lr = 2e-3;
  double warmup = 0.1;
  double clip_norm = 1.0;
  double weight_decay = 0.01;
  double adam_eps = 1e-9;
  double val_fraction = 0.1;
  uint64_t seed = 0;
};

struct EpochReport {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-token NLL
  double val_loss = 0.0;
  double train_acc = 0.0;  // greedy next-token accuracy on masked tokens
  double val_acc = 0.0;
};

// Row 0 is measured before any update; row e after epoch e.
struct AdaptationReport {
  size_t samples_used = 0;
  size_t train_size = 0;
  size_t val_size = 0;
  std::vector<EpochReport> epochs;

  // Columns: epoch,train_loss,val_loss,train_acc,val_acc
  void write_csv(const std::filesystem::path& path) const;
};

// Causal-LM adaptation on a corpus: selects `fraction` of it, splits 90/10
// into train/validation, and trains for `epochs` passes with AdamW, linear
// warmup and gradient clipping. Throws Error on an empty corpus.
AdaptationReport adapt_on_corpus(ActionLm& lm,
                                 std::span<const text::ContextSample> corpus,
                                 const AdaptOptions& opts);

// Mean per-token NLL and accuracy over `samples` (no parameter change).
std::pair<double, double> evaluate(ActionLm& lm,
                                   std::span<const text::ContextSample> samples,
                                   int batch_size = 32);

}  // namespace lmloop::lm

#endif  // LMLOOP_LM_ACTION_LM_H_
