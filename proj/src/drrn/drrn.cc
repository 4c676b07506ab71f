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

#include "lmloop/drrn/drrn.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "lmloop/error.h"
#include "lmloop/nn/checkpoint.h"

namespace lmloop::drrn {
namespace {

// Assigns each distinct string a dense index in first-seen order.
class Interner {
 public:
  int add(const std::string& s) {
    auto [it, inserted] = index_.emplace(s, static_cast<int>(items_.size()));
    if (inserted) items_.push_back(s);
    return it->second;
  }
  const std::vector<std::string>& items() const { return items_; }

 private:
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> items_;
};

std::vector<double> boltzmann(std::span<const double> q, double temperature) {
  std::vector<double> w(q.size());
  const double mx = *std::max_element(q.begin(), q.end());
  double sum = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    w[i] = std::exp((q[i] - mx) / temperature);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

}  // namespace

QNetwork::QNetwork(std::shared_ptr<const text::Vocabulary> vocab,
                   QNetConfig config, uint64_t seed)
    : vocab_(std::move(vocab)), config_(config) {
  if (!vocab_) throw Error("QNetwork: null vocabulary");
  if (config_.embedding <= 0 || config_.hidden <= 0 ||
      config_.max_obs_tokens <= 0) {
    throw Error("QNetwork: sizes must be positive");
  }
  Rng rng(seed);
  embed_ = nn::Embedding(params_, "q.embed", vocab_->size(), config_.embedding,
                         rng);
  obs_gru_ = nn::GruCell(params_, "q.obs_gru", config_.embedding,
                         config_.hidden, rng);
  act_gru_ = nn::GruCell(params_, "q.act_gru", config_.embedding,
                         config_.hidden, rng);
  hidden_layer_ =
      nn::Dense(params_, "q.hidden", 2 * config_.hidden, config_.hidden, rng);
  out_layer_ = nn::Dense(params_, "q.out", config_.hidden, 1, rng);
}

text::TokenSequence QNetwork::encode_observation(std::string_view s) const {
  text::TokenSequence ids = vocab_->tokenize(s);
  const size_t keep = static_cast<size_t>(config_.max_obs_tokens);
  if (ids.size() > keep) ids.erase(ids.begin(), ids.end() - keep);
  return ids;
}

text::TokenSequence QNetwork::encode_action(std::string_view s) const {
  return vocab_->tokenize(s);
}

nn::Matrix QNetwork::run_encoder(const nn::GruCell& cell,
                                 std::span<const text::TokenSequence> seqs,
                                 std::vector<std::vector<int>>* steps,
                                 nn::GruSequenceCache* cache) const {
  *steps = nn::pack_sequences(seqs, text::kPad);
  std::vector<int> lengths(seqs.size());
  for (size_t i = 0; i < seqs.size(); ++i) {
    lengths[i] = static_cast<int>(seqs[i].size());
  }
  std::vector<nn::Matrix> inputs(steps->size());
  for (size_t t = 0; t < steps->size(); ++t) {
    inputs[t] = embed_.forward((*steps)[t]);
  }
  const nn::Matrix h0 =
      nn::Matrix::Zero(config_.hidden, static_cast<Eigen::Index>(seqs.size()));
  return nn::gru_sequence_forward(cell, inputs, lengths, h0, cache);
}

nn::Matrix QNetwork::encode_sequences(
    const nn::GruCell& cell, std::span<const text::TokenSequence> seqs) const {
  std::vector<std::vector<int>> steps;
  return run_encoder(cell, seqs, &steps, nullptr);
}

std::vector<double> QNetwork::forward(const Batch& batch, Cache* cache) const {
  Cache local;
  Cache& c = cache != nullptr ? *cache : local;
  const nn::Matrix ho = run_encoder(obs_gru_, batch.observations, &c.obs_steps,
                                    cache != nullptr ? &c.obs_seq : nullptr);
  const nn::Matrix ha = run_encoder(act_gru_, batch.actions, &c.act_steps,
                                    cache != nullptr ? &c.act_seq : nullptr);
  const Eigen::Index h = config_.hidden;
  const Eigen::Index np = static_cast<Eigen::Index>(batch.pairs.size());
  c.joint.resize(2 * h, np);
  for (Eigen::Index p = 0; p < np; ++p) {
    const auto [oi, ai] = batch.pairs[p];
    c.joint.col(p).head(h) = ho.col(oi);
    c.joint.col(p).tail(h) = ha.col(ai);
  }
  c.hidden = hidden_layer_.forward(c.joint).array().tanh().matrix();
  const nn::Matrix q = out_layer_.forward(c.hidden);
  return std::vector<double>(q.data(), q.data() + q.size());
}

void QNetwork::backward_encoder(const nn::GruCell& cell,
                                const std::vector<std::vector<int>>& steps,
                                const nn::GruSequenceCache& cache,
                                const nn::Matrix& dfinal) {
  std::vector<nn::Matrix> dinputs;
  nn::gru_sequence_backward(cell, cache, {}, dfinal, &dinputs);
  for (size_t t = 0; t < steps.size(); ++t) {
    embed_.backward(steps[t], dinputs[t]);
  }
}

void QNetwork::backward(const Batch& batch, const Cache& cache,
                        std::span<const double> dq) {
  const Eigen::Index np = static_cast<Eigen::Index>(batch.pairs.size());
  if (static_cast<Eigen::Index>(dq.size()) != np) {
    throw Error("QNetwork::backward: dq size mismatch");
  }
  const nn::Matrix dout =
      Eigen::Map<const Eigen::RowVectorXd>(dq.data(), np);
  nn::Matrix dh = out_layer_.backward(cache.hidden, dout);
  dh.array() *= 1.0 - cache.hidden.array().square();
  const nn::Matrix djoint = hidden_layer_.backward(cache.joint, dh);
  const Eigen::Index h = config_.hidden;
  nn::Matrix dho = nn::Matrix::Zero(
      h, static_cast<Eigen::Index>(batch.observations.size()));
  nn::Matrix dha =
      nn::Matrix::Zero(h, static_cast<Eigen::Index>(batch.actions.size()));
  for (Eigen::Index p = 0; p < np; ++p) {
    const auto [oi, ai] = batch.pairs[p];
    dho.col(oi) += djoint.col(p).head(h);
    dha.col(ai) += djoint.col(p).tail(h);
  }
  backward_encoder(obs_gru_, cache.obs_steps, cache.obs_seq, dho);
  backward_encoder(act_gru_, cache.act_steps, cache.act_seq, dha);
}

double QNetwork::q_value(std::string_view observation,
                         std::string_view action) const {
  Batch b;
  b.observations.push_back(encode_observation(observation));
  b.actions.push_back(encode_action(action));
  b.pairs.emplace_back(0, 0);
  return forward(b, nullptr).front();
}

std::vector<double> QNetwork::q_values(
    std::string_view observation, std::span<const std::string> actions) const {
  if (actions.empty()) return {};
  Batch b;
  b.observations.push_back(encode_observation(observation));
  for (size_t i = 0; i < actions.size(); ++i) {
    b.actions.push_back(encode_action(actions[i]));
    b.pairs.emplace_back(0, static_cast<int>(i));
  }
  return forward(b, nullptr);
}

void QNetwork::save(const std::filesystem::path& path) const {
  nn::save_checkpoint(path, params_);
}

void QNetwork::load(const std::filesystem::path& path) {
  nn::load_checkpoint(path, params_);
}

PrioritizedReplay::PrioritizedReplay(size_t capacity, double priority_fraction)
    : capacity_(capacity), priority_fraction_(priority_fraction) {
  if (capacity == 0) throw Error("PrioritizedReplay: capacity must be > 0");
  if (!(priority_fraction >= 0.0 && priority_fraction <= 1.0)) {
    throw Error("PrioritizedReplay: priority_fraction outside [0, 1]");
  }
}

void PrioritizedReplay::push(Transition t) {
  if (size() == capacity_) {
    const bool drop_priority =
        regular_.empty() ||
        (!priority_.empty() && priority_.front().seq < regular_.front().seq);
    (drop_priority ? priority_ : regular_).pop_front();
  }
  auto& target = t.reward != 0.0 ? priority_ : regular_;
  target.push_back({next_seq_++, std::move(t)});
}

std::vector<const Transition*> PrioritizedReplay::entries() const {
  std::vector<const Transition*> out;
  out.reserve(size());
  auto p = priority_.begin();
  auto r = regular_.begin();
  while (p != priority_.end() || r != regular_.end()) {
    if (r == regular_.end() || (p != priority_.end() && p->seq < r->seq)) {
      out.push_back(&(p++)->t);
    } else {
      out.push_back(&(r++)->t);
    }
  }
  return out;
}

std::vector<const Transition*> PrioritizedReplay::sample(size_t n,
                                                         Rng& rng) const {
  if (empty()) throw ContractViolation("sampling from an empty replay buffer");
  std::vector<const Transition*> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    bool from_priority = rng.bernoulli(priority_fraction_);
    if (from_priority && priority_.empty()) from_priority = false;
    if (!from_priority && regular_.empty()) from_priority = true;
    const auto& pool = from_priority ? priority_ : regular_;
    out.push_back(&pool[rng.index(pool.size())].t);
  }
  return out;
}

double td_error_sq(double reward, double gamma, double max_next_q, double q,
                   bool terminal) {
  const double target = reward + (terminal ? 0.0 : gamma * max_next_q);
  return (target - q) * (target - q);
}

std::vector<double> td_targets(const QNetwork& q,
                               std::span<const Transition* const> batch,
                               double gamma) {
  std::vector<double> targets(batch.size());
  QNetwork::Batch next;
  Interner obs, acts;
  std::vector<std::pair<size_t, size_t>> spans(batch.size(), {0, 0});
  for (size_t i = 0; i < batch.size(); ++i) {
    targets[i] = batch[i]->reward;
    if (batch[i]->done || batch[i]->next_candidates.empty()) continue;
    const int oi = obs.add(batch[i]->next_observation);
    spans[i].first = next.pairs.size();
    for (const auto& a : batch[i]->next_candidates) {
      next.pairs.emplace_back(oi, acts.add(a));
    }
    spans[i].second = next.pairs.size();
  }
  if (next.pairs.empty()) return targets;
  for (const auto& s : obs.items()) {
    next.observations.push_back(q.encode_observation(s));
  }
  for (const auto& a : acts.items()) next.actions.push_back(q.encode_action(a));
  const std::vector<double> qn = q.forward(next, nullptr);
  for (size_t i = 0; i < batch.size(); ++i) {
    if (spans[i].first == spans[i].second) continue;
    const double best = *std::max_element(qn.begin() + spans[i].first,
                                           qn.begin() + spans[i].second);
    targets[i] += gamma * best;
  }
  return targets;
}

double td_update(QNetwork& q, std::span<const Transition* const> batch,
                 const TdOptions& opts) {
  if (batch.empty()) return 0.0;
  const std::vector<double> targets = td_targets(q, batch, opts.gamma);
  QNetwork::Batch cur;
  Interner obs, acts;
  for (const Transition* t : batch) {
    cur.pairs.emplace_back(obs.add(t->observation), acts.add(t->action));
  }
  for (const auto& s : obs.items()) {
    cur.observations.push_back(q.encode_observation(s));
  }
  for (const auto& a : acts.items()) cur.actions.push_back(q.encode_action(a));
  QNetwork::Cache cache;
  const std::vector<double> qv = q.forward(cur, &cache);
  const double n = static_cast<double>(batch.size());
  double loss = 0.0;
  std::vector<double> dq(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    const double diff = qv[i] - targets[i];
    loss += diff * diff / n;
    dq[i] = 2.0 * diff / n;
  }
  if (!std::isfinite(loss)) throw NonFiniteError("TD loss is not finite");
  q.params().zero_grad();
  q.backward(cur, cache, dq);
  nn::adam_step(q.params(), opts.adam);
  return loss;
}

double state_value(std::span<const double> q, double temperature) {
  if (q.empty()) throw ContractViolation("state_value of an empty set");
  const std::vector<double> p = boltzmann(q, temperature);
  double v = 0.0;
  for (size_t i = 0; i < q.size(); ++i) v += p[i] * q[i];
  return v;
}

Selection select_action(const QNetwork& q, std::string_view observation,
                        std::span<const std::string> candidates,
                        SelectMode mode, Rng& rng, double temperature) {
  if (candidates.empty()) {
    throw ContractViolation("select_action with no candidates");
  }
  Selection s;
  s.q = q.q_values(observation, candidates);
  if (mode == SelectMode::kGreedy) {
    s.index = static_cast<size_t>(
        std::max_element(s.q.begin(), s.q.end()) - s.q.begin());
  } else {
    s.index = rng.categorical(boltzmann(s.q, temperature));
  }
  return s;
}

double advantage(const QNetwork& q, std::string_view observation,
                 std::string_view action,
                 std::span<const std::string> candidates, double temperature) {
  const auto it = std::find(candidates.begin(), candidates.end(), action);
  if (it == candidates.end()) {
    throw ContractViolation("advantage: action is not a candidate");
  }
  const std::vector<double> qv = q.q_values(observation, candidates);
  return qv[static_cast<size_t>(it - candidates.begin())] -
         state_value(qv, temperature);
}

}  // namespace lmloop::drrn
