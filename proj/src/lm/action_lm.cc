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

#include "lmloop/lm/action_lm.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>

#include "lmloop/error.h"
#include "lmloop/nn/checkpoint.h"
#include "lmloop/rng.h"

namespace lmloop::lm {
namespace {

constexpr double kGreedyTemperature = 1e-6;

bool generable(int token) {
  return token == text::kEos || token >= text::kNumSpecial;
}

void append_key(std::string& key, int token) {
  key.append(reinterpret_cast<const char*>(&token), sizeof(token));
}

}  // namespace

bool CandidateSet::contains(const std::string& action) const {
  return std::any_of(items.begin(), items.end(),
                     [&](const Candidate& c) { return c.action == action; });
}

std::vector<std::string> CandidateSet::actions() const {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& c : items) out.push_back(c.action);
  return out;
}

ActionLm::ActionLm(std::shared_ptr<const text::Vocabulary> vocab,
                   LmConfig config, uint64_t seed)
    : vocab_(std::move(vocab)), config_(config) {
  if (!vocab_) throw Error("ActionLm: null vocabulary");
  if (config_.hidden <= 0 || config_.layers <= 0) {
    throw Error("ActionLm: hidden and layers must be positive");
  }
  if (config_.max_action_tokens <= 0 ||
      config_.max_len < config_.max_action_tokens + 4) {
    throw Error("ActionLm: max_len too small for max_action_tokens");
  }
  if (config_.top_k <= 0) throw Error("ActionLm: top_k must be positive");
  Rng rng(seed);
  embed_ = nn::Embedding(params_, "lm.embed", vocab_->size(), config_.hidden,
                         rng);
  for (int l = 0; l < config_.layers; ++l) {
    cells_.emplace_back(params_, "lm.gru" + std::to_string(l), config_.hidden,
                        config_.hidden, rng);
  }
  out_bias_ = &params_.add("lm.out.b", vocab_->size(), 1);
}

double ActionLm::accumulate(std::span<const text::EncodedSample> batch,
                            std::span<const double> scales, bool backward,
                            std::array<double, 3>* token_stats,
                            std::vector<double>* position_nll) {
  if (scales.size() != batch.size()) {
    throw Error("ActionLm::accumulate: scales/batch size mismatch");
  }
  if (token_stats != nullptr) token_stats->fill(0.0);
  if (position_nll != nullptr) position_nll->clear();
  if (batch.empty()) return 0.0;
  const Eigen::Index nb = static_cast<Eigen::Index>(batch.size());
  const int hidden = config_.hidden;

  // Inputs are tokens 0..L-2; the state after token t predicts token t+1.
  std::vector<int> lengths(batch.size());
  size_t steps = 0;
  for (size_t b = 0; b < batch.size(); ++b) {
    const size_t len = batch[b].ids.size();
    if (len < 2) throw Error("ActionLm::accumulate: sample too short");
    lengths[b] = static_cast<int>(len - 1);
    steps = std::max(steps, len - 1);
  }
  std::vector<std::vector<int>> step_ids(steps,
                                         std::vector<int>(batch.size(), text::kPad));
  for (size_t b = 0; b < batch.size(); ++b) {
    for (int t = 0; t < lengths[b]; ++t) step_ids[t][b] = batch[b].ids[t];
  }
  std::vector<nn::Matrix> layer_in(steps);
  for (size_t t = 0; t < steps; ++t) layer_in[t] = embed_.forward(step_ids[t]);

  std::vector<nn::GruSequenceCache> caches(cells_.size());
  const nn::Matrix h0 = nn::Matrix::Zero(hidden, nb);
  for (size_t l = 0; l < cells_.size(); ++l) {
    nn::gru_sequence_forward(cells_[l], layer_in, lengths, h0, &caches[l]);
    if (l + 1 < cells_.size()) layer_in = caches[l].states;
  }
  const auto& top_states = caches.back().states;

  struct Position {
    size_t t;
    Eigen::Index b;
    int target;
  };
  std::vector<Position> positions;
  for (size_t b = 0; b < batch.size(); ++b) {
    const auto& s = batch[b];
    for (size_t t = 0; t + 1 < s.ids.size(); ++t) {
      if (s.loss_mask[t + 1] != 0) {
        positions.push_back({t, static_cast<Eigen::Index>(b), s.ids[t + 1]});
      }
    }
  }
  const Eigen::Index np = static_cast<Eigen::Index>(positions.size());
  nn::Matrix selected(hidden, np);
  for (Eigen::Index p = 0; p < np; ++p) {
    selected.col(p) = top_states[positions[p].t].col(positions[p].b);
  }
  const nn::Matrix& table = embed_.table().value;
  nn::Matrix logits = table * selected;
  logits.colwise() += out_bias_->value.col(0);

  double total = 0.0;
  nn::Matrix dlogits(logits.rows(), np);
  for (Eigen::Index p = 0; p < np; ++p) {
    auto col = logits.col(p);
    Eigen::Index best = 0;
    const double mx = col.maxCoeff(&best);
    const double lse = mx + std::log((col.array() - mx).exp().sum());
    const double nll = lse - col(positions[p].target);
    const double scale = scales[positions[p].b];
    total += scale * nll;
    if (token_stats != nullptr) {
      (*token_stats)[0] += nll;
      (*token_stats)[1] += 1.0;
      if (best == positions[p].target) (*token_stats)[2] += 1.0;
    }
    if (position_nll != nullptr) position_nll->push_back(nll);
    if (backward) {
      dlogits.col(p) = scale * (col.array() - lse).exp().matrix();
      dlogits(positions[p].target, p) -= scale;
    }
  }
  if (!backward) return total;

  embed_.table().grad.noalias() += dlogits * selected.transpose();
  out_bias_->grad.col(0) += dlogits.rowwise().sum();
  const nn::Matrix dselected = table.transpose() * dlogits;
  std::vector<nn::Matrix> dstates(steps, nn::Matrix::Zero(hidden, nb));
  for (Eigen::Index p = 0; p < np; ++p) {
    dstates[positions[p].t].col(positions[p].b) += dselected.col(p);
  }
  for (size_t l = cells_.size(); l-- > 0;) {
    std::vector<nn::Matrix> dinputs;
    nn::gru_sequence_backward(cells_[l], caches[l], dstates, h0, &dinputs);
    dstates = std::move(dinputs);
  }
  for (size_t t = 0; t < steps; ++t) embed_.backward(step_ids[t], dstates[t]);
  return total;
}

std::vector<double> ActionLm::sequence_nll(
    const text::ContextSample& sample) const {
  const text::EncodedSample enc =
      text::encode_context(*vocab_, sample, config_.max_len);
  const double scale = 1.0;
  std::vector<double> out;
  // Forward-only: no gradient is touched.
  const_cast<ActionLm*>(this)->accumulate({&enc, 1}, {&scale, 1}, false,
                                          nullptr, &out);
  return out;
}

nn::Vector ActionLm::next_token_probs(
    std::span<const text::TokenId> prefix) const {
  std::vector<nn::Vector> states(cells_.size(),
                                 nn::Vector::Zero(config_.hidden));
  for (int token : prefix) {
    nn::Matrix x = embed_.forward({&token, 1});
    for (size_t l = 0; l < cells_.size(); ++l) {
      states[l] = cells_[l].forward(x, states[l], nullptr);
      x = states[l];
    }
  }
  nn::Vector logits = embed_.table().value * states.back();
  logits += out_bias_->value.col(0);
  const double mx = logits.maxCoeff();
  nn::Vector e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

double ActionLm::train_step(std::span<const text::ContextSample> batch,
                            const nn::AdamOptions& opts) {
  if (batch.empty()) return 0.0;
  std::vector<text::EncodedSample> enc;
  enc.reserve(batch.size());
  for (const auto& s : batch) {
    enc.push_back(text::encode_context(*vocab_, s, config_.max_len));
  }
  const std::vector<double> scales(batch.size(),
                                   1.0 / static_cast<double>(batch.size()));
  params_.zero_grad();
  const double loss = accumulate(enc, scales, true);
  if (!std::isfinite(loss)) throw NonFiniteError("LM loss is not finite");
  nn::adam_step(params_, opts);
  return loss;
}

double ActionLm::weighted_train_step(std::span<const WeightedSample> batch,
                                     const nn::AdamOptions& opts) {
  if (batch.empty()) return 0.0;
  std::vector<text::EncodedSample> enc;
  std::vector<double> scales;
  enc.reserve(batch.size());
  scales.reserve(batch.size());
  const double n = static_cast<double>(batch.size());
  for (const auto& ws : batch) {
    if (!std::isfinite(ws.weight)) {
      throw NonFiniteError("LM sample weight is not finite");
    }
    enc.push_back(text::encode_context(*vocab_, ws.sample, config_.max_len));
    scales.push_back(ws.weight / n);
  }
  params_.zero_grad();
  const double loss = accumulate(enc, scales, true);
  if (!std::isfinite(loss)) throw NonFiniteError("LM loss is not finite");
  nn::adam_step(params_, opts);
  return loss;
}

text::TokenSequence ActionLm::prompt(const text::ContextSample& context) const {
  return text::encode_prompt(*vocab_, context,
                             config_.max_len - config_.max_action_tokens - 1);
}

ActionLm::Node ActionLm::make_node(std::vector<nn::Vector> states) const {
  Node node;
  nn::Vector logits = embed_.table().value * states.back();
  logits += out_bias_->value.col(0);
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<int> ids;
  ids.reserve(logits.size());
  for (int i = 0; i < logits.size(); ++i) {
    if (!generable(i)) continue;
    ids.push_back(i);
    mx = std::max(mx, logits(i));
  }
  double sum = 0.0;
  for (int i : ids) sum += std::exp(logits(i) - mx);
  node.log_norm = mx + std::log(sum);
  const size_t k = std::min(ids.size(), static_cast<size_t>(config_.top_k));
  std::partial_sort(ids.begin(), ids.begin() + static_cast<long>(k), ids.end(),
                    [&](int a, int b) {
                      return logits(a) != logits(b) ? logits(a) > logits(b)
                                                    : a < b;
                    });
  ids.resize(k);
  node.top_ids = ids;
  node.top_logits.reserve(k);
  for (int i : ids) node.top_logits.push_back(logits(i));
  node.states = std::move(states);
  return node;
}

ActionLm::Node ActionLm::run_prompt(const text::TokenSequence& tokens) const {
  std::vector<nn::Vector> states(cells_.size(),
                                 nn::Vector::Zero(config_.hidden));
  for (int token : tokens) {
    nn::Matrix x = embed_.forward({&token, 1});
    for (size_t l = 0; l < cells_.size(); ++l) {
      states[l] = cells_[l].forward(x, states[l], nullptr);
      x = states[l];
    }
  }
  return make_node(std::move(states));
}

ActionLm::Node ActionLm::advance(const Node& from, int token) const {
  std::vector<nn::Vector> states = from.states;
  nn::Matrix x = embed_.forward({&token, 1});
  for (size_t l = 0; l < cells_.size(); ++l) {
    states[l] = cells_[l].forward(x, states[l], nullptr);
    x = states[l];
  }
  return make_node(std::move(states));
}

Candidate ActionLm::decode(const text::TokenSequence& prompt_ids,
                           uint64_t seed, bool greedy,
                           GenerationCache* cache) const {
  Rng rng(seed);
  std::string key;
  for (int t : prompt_ids) append_key(key, t);
  Node local;
  const Node* node = nullptr;
  auto fetch = [&](const std::function<Node()>& build) {
    if (cache != nullptr) {
      auto it = cache->nodes_.find(key);
      if (it != cache->nodes_.end()) {
        node = &it->second;
        return;
      }
      if (cache->nodes_.size() < cache->max_nodes_) {
        node = &cache->nodes_.emplace(key, build()).first->second;
        return;
      }
    }
    local = build();
    node = &local;
  };
  fetch([&] { return run_prompt(prompt_ids); });

  text::TokenSequence action;
  double log_prob = 0.0;
  std::vector<double> weights;
  for (int step = 0; step < config_.max_action_tokens; ++step) {
    size_t pick = 0;
    if (!greedy) {
      const double temp = config_.temperature;
      const double mx = node->top_logits.front();
      weights.assign(node->top_logits.size(), 0.0);
      for (size_t i = 0; i < weights.size(); ++i) {
        weights[i] = std::exp((node->top_logits[i] - mx) / temp);
      }
      pick = rng.categorical(weights);
    }
    const int token = node->top_ids[pick];
    log_prob += node->top_logits[pick] - node->log_norm;
    if (token == text::kEos) break;
    action.push_back(token);
    if (static_cast<int>(action.size()) == config_.max_action_tokens) break;
    append_key(key, token);
    const Node* parent = node;
    fetch([&] { return advance(*parent, token); });
  }
  return {vocab_->detokenize(action), log_prob};
}

CandidateSet ActionLm::generate_candidates(const text::ContextSample& context,
                                           int n, uint64_t seed,
                                           GenerationCache* cache) const {
  CandidateSet out;
  if (n <= 0) return out;
  const text::TokenSequence prompt_ids = prompt(context);
  const bool greedy = config_.temperature < kGreedyTemperature;
  const int attempts = greedy ? 1 : n * config_.attempts_per_candidate;
  for (int a = 0; a < attempts && static_cast<int>(out.items.size()) < n;
       ++a) {
    Candidate c = decode(prompt_ids, derive_seed(seed, static_cast<uint64_t>(a)),
                         greedy, cache);
    if (c.action.empty() || out.contains(c.action)) continue;
    out.items.push_back(std::move(c));
  }
  std::stable_sort(out.items.begin(), out.items.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.log_prob != b.log_prob ? a.log_prob > b.log_prob
                                                     : a.action < b.action;
                   });
  return out;
}

std::string ActionLm::argmax_action(const text::ContextSample& context,
                                    GenerationCache* cache) const {
  return decode(prompt(context), 0, true, cache).action;
}

void ActionLm::save(const std::filesystem::path& path) const {
  nn::save_checkpoint(path, params_);
}

void ActionLm::load(const std::filesystem::path& path) {
  nn::load_checkpoint(path, params_);
}

void AdaptationReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,train_loss,val_loss,train_acc,val_acc\n";
  out << std::setprecision(9);
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ','
        << e.train_acc << ',' << e.val_acc << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

namespace {

std::pair<double, double> evaluate_encoded(
    ActionLm& lm, std::span<const text::EncodedSample> samples,
    int batch_size) {
  if (samples.empty()) {
    return {std::numeric_limits<double>::quiet_NaN(),
            std::numeric_limits<double>::quiet_NaN()};
  }
  double nll = 0.0, tokens = 0.0, correct = 0.0;
  const size_t bs = static_cast<size_t>(std::max(batch_size, 1));
  for (size_t i = 0; i < samples.size(); i += bs) {
    const size_t n = std::min(bs, samples.size() - i);
    const std::vector<double> scales(n, 0.0);
    std::array<double, 3> stats{};
    lm.accumulate(samples.subspan(i, n), scales, false, &stats);
    nll += stats[0];
    tokens += stats[1];
    correct += stats[2];
  }
  return {nll / tokens, correct / tokens};
}

std::vector<text::EncodedSample> encode_all(
    const ActionLm& lm, std::span<const text::ContextSample> samples) {
  std::vector<text::EncodedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    out.push_back(text::encode_context(lm.vocab(), s, lm.config().max_len));
  }
  return out;
}

}  // namespace

std::pair<double, double> evaluate(ActionLm& lm,
                                   std::span<const text::ContextSample> samples,
                                   int batch_size) {
  const auto enc = encode_all(lm, samples);
  return evaluate_encoded(lm, enc, batch_size);
}

AdaptationReport adapt_on_corpus(ActionLm& lm,
                                 std::span<const text::ContextSample> corpus,
                                 const AdaptOptions& opts) {
  if (corpus.empty()) throw Error("adapt_on_corpus: empty corpus");
  if (opts.batch_size <= 0 || opts.epochs < 0) {
    throw Error("adapt_on_corpus: bad batch_size or epochs");
  }
  const std::vector<text::ContextSample> chosen =
      text::select_fraction(corpus, opts.fraction, derive_seed(opts.seed, 1));
  std::vector<size_t> order(chosen.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(derive_seed(opts.seed, 2));
  shuffle(order, rng);
  size_t n_val = static_cast<size_t>(
      std::llround(opts.val_fraction * static_cast<double>(chosen.size())));
  if (n_val == 0 && chosen.size() >= 2 && opts.val_fraction > 0.0) n_val = 1;
  if (n_val >= chosen.size()) n_val = chosen.size() - 1;

  std::vector<text::ContextSample> train, val;
  for (size_t i = 0; i < order.size(); ++i) {
    (i < n_val ? val : train).push_back(chosen[order[i]]);
  }
  const auto train_enc = encode_all(lm, train);
  const auto val_enc = encode_all(lm, val);

  AdaptationReport report;
  report.samples_used = chosen.size();
  report.train_size = train.size();
  report.val_size = val.size();
  auto measure = [&](int epoch) {
    EpochReport r;
    r.epoch = epoch;
    std::tie(r.train_loss, r.train_acc) = evaluate_encoded(lm, train_enc, 32);
    std::tie(r.val_loss, r.val_acc) = evaluate_encoded(lm, val_enc, 32);
    report.epochs.push_back(r);
  };
  measure(0);

  const size_t bs = static_cast<size_t>(opts.batch_size);
  const int64_t per_epoch =
      static_cast<int64_t>((train_enc.size() + bs - 1) / bs);
  nn::WarmupSchedule schedule(opts.lr, opts.warmup, per_epoch * opts.epochs);
  nn::AdamOptions adam;
  adam.eps = opts.adam_eps;
  adam.weight_decay = opts.weight_decay;
  adam.clip_norm = opts.clip_norm;
  lm.params().reset_optimizer();
  int64_t step = 0;
  std::vector<size_t> perm(train_enc.size());
  std::iota(perm.begin(), perm.end(), size_t{0});
  std::vector<text::EncodedSample> batch;
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    shuffle(perm, rng);
    for (size_t i = 0; i < perm.size(); i += bs) {
      const size_t n = std::min(bs, perm.size() - i);
      batch.clear();
      for (size_t j = 0; j < n; ++j) batch.push_back(train_enc[perm[i + j]]);
      const std::vector<double> scales(n, 1.0 / static_cast<double>(n));
      lm.params().zero_grad();
      const double loss = lm.accumulate(batch, scales, true);
      if (!std::isfinite(loss)) throw NonFiniteError("LM loss is not finite");
      adam.lr = schedule.lr(step++);
      nn::adam_step(lm.params(), adam);
    }
    measure(epoch);
  }
  return report;
}

}  // namespace lmloop::lm
