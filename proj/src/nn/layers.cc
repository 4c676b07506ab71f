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

#include "lmloop/nn/layers.h"

#include <algorithm>
#include <cmath>

#include "lmloop/error.h"

namespace lmloop::nn {

namespace {

void check_rows(const Matrix& m, Eigen::Index rows, const char* what) {
  if (m.rows() != rows) {
    throw Error(std::string("shape mismatch in ") + what + ": expected " +
                std::to_string(rows) + " rows, got " +
                std::to_string(m.rows()));
  }
}

Matrix sigmoid_of(const Matrix& x) {
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

}  // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Dense::Dense(ParamStore& store, const std::string& name, int in, int out,
             Rng& rng) {
  w_ = &store.add(name + ".w", out, in);
  b_ = &store.add(name + ".b", out, 1);
  init_fan_in(*w_, rng);
}

Matrix Dense::forward(const Matrix& x) const {
  check_rows(x, w_->cols(), "Dense::forward");
  Matrix y = w_->value * x;
  y.colwise() += b_->value.col(0);
  return y;
}

Matrix Dense::backward(const Matrix& x, const Matrix& dy) const {
  check_rows(dy, w_->rows(), "Dense::backward");
  w_->grad.noalias() += dy * x.transpose();
  b_->grad.col(0) += dy.rowwise().sum();
  return w_->value.transpose() * dy;
}

Embedding::Embedding(ParamStore& store, const std::string& name, int vocab,
                     int dim, Rng& rng) {
  table_ = &store.add(name, vocab, dim);
  init_fan_in(*table_, rng);
}

Matrix Embedding::forward(std::span<const int> ids) const {
  Matrix out(table_->cols(), static_cast<Eigen::Index>(ids.size()));
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table_->rows()) {
      throw Error("embedding id out of range: " + std::to_string(ids[i]));
    }
    out.col(static_cast<Eigen::Index>(i)) = table_->value.row(ids[i]).transpose();
  }
  return out;
}

void Embedding::backward(std::span<const int> ids, const Matrix& dout) const {
  for (size_t i = 0; i < ids.size(); ++i) {
    table_->grad.row(ids[i]) +=
        dout.col(static_cast<Eigen::Index>(i)).transpose();
  }
}

GruCell::GruCell(ParamStore& store, const std::string& name, int in,
                 int hidden, Rng& rng) {
  wx_ = &store.add(name + ".wx", 3 * hidden, in);
  wh_ = &store.add(name + ".wh", 3 * hidden, hidden);
  bx_ = &store.add(name + ".bx", 3 * hidden, 1);
  bh_ = &store.add(name + ".bh", 3 * hidden, 1);
  init_fan_in(*wx_, rng);
  init_fan_in(*wh_, rng);
}

Matrix GruCell::forward(const Matrix& x, const Matrix& h,
                        GruCache* cache) const {
  const Eigen::Index hs = wh_->cols();
  check_rows(x, wx_->cols(), "GruCell::forward(x)");
  check_rows(h, hs, "GruCell::forward(h)");
  if (x.cols() != h.cols()) throw Error("GruCell::forward: batch mismatch");

  Matrix gx = wx_->value * x;
  gx.colwise() += bx_->value.col(0);
  Matrix gh = wh_->value * h;
  gh.colwise() += bh_->value.col(0);

  Matrix r = sigmoid_of(gx.topRows(hs) + gh.topRows(hs));
  Matrix z = sigmoid_of(gx.middleRows(hs, hs) + gh.middleRows(hs, hs));
  Matrix hn = gh.bottomRows(hs);
  Matrix n = (gx.bottomRows(hs).array() + r.array() * hn.array()).tanh().matrix();
  Matrix out = ((1.0 - z.array()) * n.array() + z.array() * h.array()).matrix();

  if (cache != nullptr) {
    cache->x = x;
    cache->h = h;
    cache->r = std::move(r);
    cache->z = std::move(z);
    cache->n = std::move(n);
    cache->hn = std::move(hn);
  }
  return out;
}

void GruCell::backward(const GruCache& c, const Matrix& dh_next, Matrix* dx,
                       Matrix* dh) const {
  const Eigen::Index hs = wh_->cols();
  const Eigen::Index batch = dh_next.cols();
  auto r = c.r.array();
  auto z = c.z.array();
  auto n = c.n.array();
  auto d = dh_next.array();

  Matrix dn_pre = (d * (1.0 - z) * (1.0 - n * n)).matrix();
  Matrix dz_pre = (d * (c.h.array() - n) * z * (1.0 - z)).matrix();
  Matrix dr_pre = (dn_pre.array() * c.hn.array() * r * (1.0 - r)).matrix();

  Matrix dgx(3 * hs, batch);
  dgx.topRows(hs) = dr_pre;
  dgx.middleRows(hs, hs) = dz_pre;
  dgx.bottomRows(hs) = dn_pre;
  Matrix dgh = dgx;
  dgh.bottomRows(hs).array() *= r;

  wx_->grad.noalias() += dgx * c.x.transpose();
  bx_->grad.col(0) += dgx.rowwise().sum();
  wh_->grad.noalias() += dgh * c.h.transpose();
  bh_->grad.col(0) += dgh.rowwise().sum();

  if (dx != nullptr) *dx = wx_->value.transpose() * dgx;
  if (dh != nullptr) {
    *dh = wh_->value.transpose() * dgh;
    dh->array() += d * z;
  }
}

Matrix gru_sequence_forward(const GruCell& cell, std::span<const Matrix> inputs,
                            std::span<const int> lengths, const Matrix& h0,
                            GruSequenceCache* cache) {
  const Eigen::Index batch = h0.cols();
  if (static_cast<Eigen::Index>(lengths.size()) != batch) {
    throw Error("gru_sequence_forward: lengths/batch mismatch");
  }
  if (cache != nullptr) {
    cache->steps.assign(inputs.size(), GruCache{});
    cache->masks.assign(inputs.size(), Eigen::RowVectorXd());
    cache->states.assign(inputs.size(), Matrix());
  }
  Matrix h = h0;
  for (size_t t = 0; t < inputs.size(); ++t) {
    Eigen::RowVectorXd mask(batch);
    bool all_active = true;
    for (Eigen::Index b = 0; b < batch; ++b) {
      mask(b) = static_cast<size_t>(lengths[b]) > t ? 1.0 : 0.0;
      all_active = all_active && mask(b) == 1.0;
    }
    Matrix next = cell.forward(inputs[t], h,
                               cache != nullptr ? &cache->steps[t] : nullptr);
    if (!all_active) {
      for (Eigen::Index b = 0; b < batch; ++b) {
        if (mask(b) == 0.0) next.col(b) = h.col(b);
      }
    }
    h = std::move(next);
    if (cache != nullptr) {
      cache->masks[t] = mask;
      cache->states[t] = h;
    }
  }
  return h;
}

Matrix gru_sequence_backward(const GruCell& cell, const GruSequenceCache& cache,
                             std::span<const Matrix> dstates,
                             const Matrix& dfinal,
                             std::vector<Matrix>* dinputs) {
  const size_t steps = cache.steps.size();
  Matrix dh = dfinal;
  if (dinputs != nullptr) dinputs->assign(steps, Matrix());
  for (size_t t = steps; t-- > 0;) {
    if (t < dstates.size() && dstates[t].size() > 0) dh += dstates[t];
    const Eigen::RowVectorXd& mask = cache.masks[t];
    Matrix dcell = dh;
    Matrix carry = Matrix::Zero(dh.rows(), dh.cols());
    bool any_masked = false;
    for (Eigen::Index b = 0; b < dh.cols(); ++b) {
      if (mask(b) == 0.0) {
        carry.col(b) = dh.col(b);
        dcell.col(b).setZero();
        any_masked = true;
      }
    }
    Matrix dx, dprev;
    cell.backward(cache.steps[t], dcell, &dx, &dprev);
    if (any_masked) {
      for (Eigen::Index b = 0; b < dh.cols(); ++b) {
        if (mask(b) == 0.0) {
          dprev.col(b) = carry.col(b);
          dx.col(b).setZero();
        }
      }
    }
    if (dinputs != nullptr) (*dinputs)[t] = std::move(dx);
    dh = std::move(dprev);
  }
  return dh;
}

std::vector<std::vector<int>> pack_sequences(
    std::span<const std::vector<int>> sequences, int pad_id) {
  size_t longest = 0;
  for (const auto& s : sequences) longest = std::max(longest, s.size());
  std::vector<std::vector<int>> steps(longest,
                                      std::vector<int>(sequences.size(), pad_id));
  for (size_t b = 0; b < sequences.size(); ++b) {
    for (size_t t = 0; t < sequences[b].size(); ++t) steps[t][b] = sequences[b][t];
  }
  return steps;
}

}  // namespace lmloop::nn
