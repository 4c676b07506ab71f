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

#include "gradcheck.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "lmloop/drrn/drrn.h"
#include "lmloop/lm/action_lm.h"
#include "lmloop/nn/layers.h"
#include "lmloop/nn/loss.h"
#include "lmloop/rng.h"

namespace lmloop::testing {
namespace {

constexpr double kEps = 1e-4;

nn::Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng,
                         double scale = 1.0) {
  nn::Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = rng.uniform(-scale, scale);
  }
  return m;
}

int rand_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.index(static_cast<uint64_t>(hi - lo + 1)));
}

std::shared_ptr<const text::Vocabulary> tiny_vocab() {
  const std::vector<std::string> words = {"go",   "north", "take", "lamp",
                                          "room", "dark",  "a",    "."};
  return std::make_shared<const text::Vocabulary>(
      text::Vocabulary::from_words(words));
}

std::string random_text(Rng& rng, int lo, int hi) {
  static const char* kWords[] = {"go", "north", "take", "lamp",
                                 "room", "dark", "a", ".", "zzz"};
  const int n = rand_int(rng, lo, hi);
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i > 0) s += ' ';
    s += kWords[rng.index(9)];
  }
  return s;
}

}  // namespace

// Fourth-order central difference; leaves x unchanged.
double five_point(double& x, const std::function<double()>& loss, double eps) {
  const double saved = x;
  auto at = [&](double offset) {
    x = saved + offset;
    return loss();
  };
  const double d = 8.0 * (at(eps) - at(-eps)) - (at(2.0 * eps) - at(-2.0 * eps));
  x = saved;
  return d / (12.0 * eps);
}

double rel_error(double analytic, double numeric, double floor) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

void compare_param_grads(nn::ParamStore& store,
                         const std::function<double()>& loss, double eps,
                         GradReport* report) {
  for (size_t p = 0; p < store.size(); ++p) {
    nn::Param& param = store[p];
    for (Eigen::Index i = 0; i < param.value.size(); ++i) {
      double& x = param.value.data()[i];
      const double numeric = five_point(x, loss, eps);
      report->max_rel_error = std::max(
          report->max_rel_error, rel_error(param.grad.data()[i], numeric));
      ++report->checked;
    }
  }
}

void compare_input_grad(nn::Matrix& input, const nn::Matrix& analytic,
                        const std::function<double()>& loss, double eps,
                        GradReport* report) {
  for (Eigen::Index i = 0; i < input.size(); ++i) {
    double& x = input.data()[i];
    const double numeric = five_point(x, loss, eps);
    report->max_rel_error = std::max(report->max_rel_error,
                                     rel_error(analytic.data()[i], numeric));
    ++report->checked;
  }
}

GradReport check_dense(int instances, uint64_t seed) {
  GradReport report{"dense"};
  for (int k = 0; k < instances; ++k) {
    Rng rng(derive_seed(seed, k));
    const int in = rand_int(rng, 1, 6), out = rand_int(rng, 1, 5),
              batch = rand_int(rng, 1, 4);
    nn::ParamStore store;
    nn::Dense layer(store, "d", in, out, rng);
    nn::Matrix x = random_matrix(in, batch, rng);
    const nn::Matrix c = random_matrix(out, batch, rng);
    auto loss = [&] { return (layer.forward(x).array() * c.array()).sum(); };
    store.zero_grad();
    const nn::Matrix dx = layer.backward(x, c);
    compare_param_grads(store, loss, kEps, &report);
    compare_input_grad(x, dx, loss, kEps, &report);
    ++report.instances;
  }
  return report;
}

GradReport check_embedding(int instances, uint64_t seed) {
  GradReport report{"embedding"};
  for (int k = 0; k < instances; ++k) {
    Rng rng(derive_seed(seed, k));
    const int vocab = rand_int(rng, 2, 8), dim = rand_int(rng, 1, 5),
              n = rand_int(rng, 1, 6);
    nn::ParamStore store;
    nn::Embedding emb(store, "e", vocab, dim, rng);
    std::vector<int> ids(n);
    for (int& id : ids) id = rand_int(rng, 0, vocab - 1);
    const nn::Matrix c = random_matrix(dim, n, rng);
    auto loss = [&] { return (emb.forward(ids).array() * c.array()).sum(); };
    store.zero_grad();
    emb.backward(ids, c);
    compare_param_grads(store, loss, kEps, &report);
    ++report.instances;
  }
  return report;
}

GradReport check_gru_cell(int instances, uint64_t seed) {
  GradReport report{"gru_cell"};
  for (int k = 0; k < instances; ++k) {
    Rng rng(derive_seed(seed, k));
    const int in = rand_int(rng, 1, 5), hidden = rand_int(rng, 1, 5),
              batch = rand_int(rng, 1, 3);
    nn::ParamStore store;
    nn::GruCell cell(store, "g", in, hidden, rng);
    for (size_t p = 0; p < store.size(); ++p) {
      store[p].value = random_matrix(store[p].rows(), store[p].cols(), rng);
    }
    nn::Matrix x = random_matrix(in, batch, rng);
    nn::Matrix h = random_matrix(hidden, batch, rng);
    const nn::Matrix c = random_matrix(hidden, batch, rng);
    auto loss = [&] {
      return (cell.forward(x, h, nullptr).array() * c.array()).sum();
    };
    nn::GruCache cache;
    cell.forward(x, h, &cache);
    store.zero_grad();
    nn::Matrix dx, dh;
    cell.backward(cache, c, &dx, &dh);
    compare_param_grads(store, loss, kEps, &report);
    compare_input_grad(x, dx, loss, kEps, &report);
    compare_input_grad(h, dh, loss, kEps, &report);
    ++report.instances;
  }
  return report;
}

GradReport check_gru_sequence(int instances, uint64_t seed) {
  GradReport report{"gru_sequence"};
  for (int k = 0; k < instances; ++k) {
    Rng rng(derive_seed(seed, k));
    const int in = rand_int(rng, 1, 4), hidden = rand_int(rng, 1, 4),
              batch = rand_int(rng, 1, 4), steps = rand_int(rng, 1, 5);
    nn::ParamStore store;
    nn::GruCell cell(store, "g", in, hidden, rng);
    std::vector<nn::Matrix> inputs;
    std::vector<nn::Matrix> weights;  // loss weights per step state
    for (int t = 0; t < steps; ++t) {
      inputs.push_back(random_matrix(in, batch, rng));
      weights.push_back(random_matrix(hidden, batch, rng));
    }
    std::vector<int> lengths(batch);
    for (int& l : lengths) l = rand_int(rng, 0, steps);
    nn::Matrix h0 = random_matrix(hidden, batch, rng);
    const nn::Matrix cf = random_matrix(hidden, batch, rng);
    auto loss = [&] {
      nn::GruSequenceCache cache;
      const nn::Matrix hf =
          nn::gru_sequence_forward(cell, inputs, lengths, h0, &cache);
      double total = (hf.array() * cf.array()).sum();
      for (int t = 0; t < steps; ++t) {
        total += (cache.states[t].array() * weights[t].array()).sum();
      }
      return total;
    };
    nn::GruSequenceCache cache;
    nn::gru_sequence_forward(cell, inputs, lengths, h0, &cache);
    store.zero_grad();
    std::vector<nn::Matrix> dinputs;
    const nn::Matrix dh0 =
        nn::gru_sequence_backward(cell, cache, weights, cf, &dinputs);
    compare_param_grads(store, loss, kEps, &report);
    compare_input_grad(h0, dh0, loss, kEps, &report);
    for (int t = 0; t < steps; ++t) {
      compare_input_grad(inputs[t], dinputs[t], loss, kEps, &report);
    }
    ++report.instances;
  }
  return report;
}

GradReport check_softmax_xent(int instances, uint64_t seed) {
  GradReport report{"softmax_xent"};
  for (int k = 0; k < instances; ++k) {
    Rng rng(derive_seed(seed, k));
    const int n = rand_int(rng, 2, 8);
    nn::Matrix logits = random_matrix(n, 1, rng, 3.0);
    const int target = rand_int(rng, 0, n - 1);
    const nn::XentResult r = nn::softmax_xent(logits.col(0), target);
    auto loss = [&] { return nn::softmax_xent(logits.col(0), target).loss; };
    compare_input_grad(logits, r.grad, loss, kEps, &report);
    ++report.instances;
  }
  return report;
}

GradReport check_lm(int instances, uint64_t seed) {
  GradReport report{"lm_forward"};
  const auto vocab = tiny_vocab();
  for (int k = 0; k < instances; ++k) {
    Rng rng(derive_seed(seed, k));
    lm::LmConfig cfg;
    cfg.hidden = rand_int(rng, 2, 4);
    cfg.layers = rand_int(rng, 1, 2);
    cfg.max_len = 16;
    cfg.max_action_tokens = 4;
    lm::ActionLm model(vocab, cfg, derive_seed(seed, k, 1));
    const int batch = rand_int(rng, 1, 3);
    std::vector<text::EncodedSample> enc;
    std::vector<double> scales;
    for (int b = 0; b < batch; ++b) {
      text::ContextSample s{random_text(rng, 0, 4), random_text(rng, 0, 2),
                            random_text(rng, 1, 6), random_text(rng, 1, 3)};
      enc.push_back(text::encode_context(*vocab, s, cfg.max_len));
      scales.push_back(rng.uniform(-1.0, 2.0));
    }
    auto loss = [&] { return model.accumulate(enc, scales, false); };
    model.params().zero_grad();
    model.accumulate(enc, scales, true);
    compare_param_grads(model.params(), loss, kEps, &report);
    ++report.instances;
  }
  return report;
}

GradReport check_qnet(int instances, uint64_t seed) {
  GradReport report{"q_network"};
  const auto vocab = tiny_vocab();
  for (int k = 0; k < instances; ++k) {
    Rng rng(derive_seed(seed, k));
    drrn::QNetConfig cfg;
    cfg.embedding = rand_int(rng, 2, 4);
    cfg.hidden = rand_int(rng, 2, 4);
    cfg.max_obs_tokens = 6;
    drrn::QNetwork q(vocab, cfg, derive_seed(seed, k, 1));
    drrn::QNetwork::Batch batch;
    const int no = rand_int(rng, 1, 3), na = rand_int(rng, 1, 3);
    for (int i = 0; i < no; ++i) {
      batch.observations.push_back(q.encode_observation(random_text(rng, 0, 8)));
    }
    for (int i = 0; i < na; ++i) {
      batch.actions.push_back(q.encode_action(random_text(rng, 0, 3)));
    }
    const int np = rand_int(rng, 1, 5);
    std::vector<double> c;
    for (int p = 0; p < np; ++p) {
      batch.pairs.emplace_back(rand_int(rng, 0, no - 1), rand_int(rng, 0, na - 1));
      c.push_back(rng.uniform(-1.0, 1.0));
    }
    auto loss = [&] {
      const auto qv = q.forward(batch, nullptr);
      double total = 0.0;
      for (int p = 0; p < np; ++p) total += c[p] * qv[p];
      return total;
    };
    drrn::QNetwork::Cache cache;
    q.forward(batch, &cache);
    q.params().zero_grad();
    q.backward(batch, cache, c);
    compare_param_grads(q.params(), loss, kEps, &report);
    ++report.instances;
  }
  return report;
}

}  // namespace lmloop::testing
