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

#ifndef LMLOOP_NN_LAYERS_H_
#define LMLOOP_NN_LAYERS_H_

#include <span>
#include <string>
#include <vector>

#include "lmloop/nn/param_store.h"

// Differentiable building blocks. Activations are column-batched: a batch of
// B vectors of width n is an (n x B) matrix. Backward functions accumulate
// into Param::grad and return the gradient with respect to their inputs.

namespace lmloop::nn {

double sigmoid(double x);

// Affine map y = W x + b, W is (out x in), b is (out x 1).
class Dense {
 public:
  Dense() = default;
  Dense(ParamStore& store, const std::string& name, int in, int out, Rng& rng);

  Matrix forward(const Matrix& x) const;
  // Returns dL/dx given the forward input and dL/dy.
  Matrix backward(const Matrix& x, const Matrix& dy) const;

  Param& weight() const { return *w_; }
  Param& bias() const { return *b_; }
  int in() const { return static_cast<int>(w_->cols()); }
  int out() const { return static_cast<int>(w_->rows()); }

 private:
  Param* w_ = nullptr;
  Param* b_ = nullptr;
};

// Lookup table of shape (vocab x dim); row i is the embedding of token i.
class Embedding {
 public:
  Embedding() = default;
  Embedding(ParamStore& store, const std::string& name, int vocab, int dim,
            Rng& rng);

  // Gathers one column per id; returns (dim x ids.size()).
  Matrix forward(std::span<const int> ids) const;
  // Scatter-adds dL/dout columns into the rows named by ids.
  void backward(std::span<const int> ids, const Matrix& dout) const;

  Param& table() const { return *table_; }
  int vocab() const { return static_cast<int>(table_->rows()); }
  int dim() const { return static_cast<int>(table_->cols()); }

 private:
  Param* table_ = nullptr;
};

// Values saved by GruCell::forward for the backward pass.
struct GruCache {
  Matrix x;
  Matrix h;
  Matrix r;
  Matrix z;
  Matrix n;
  Matrix hn;  // W_hn h + b_hn, before the reset gate is applied
};

// Gated recurrent unit, gate order (reset, update, candidate):
//   r  = sigmoid(W_xr x + b_xr + W_hr h + b_hr)
//   z  = sigmoid(W_xz x + b_xz + W_hz h + b_hz)
//   n  = tanh(W_xn x + b_xn + r * (W_hn h + b_hn))
//   h' = (1 - z) * n + z * h
class GruCell {
 public:
  GruCell() = default;
  GruCell(ParamStore& store, const std::string& name, int in, int hidden,
          Rng& rng);

  int in() const { return static_cast<int>(wx_->cols()); }
  int hidden() const { return static_cast<int>(wh_->cols()); }

  // `cache` may be null when no backward pass follows.
  Matrix forward(const Matrix& x, const Matrix& h, GruCache* cache) const;
  // Accumulates parameter gradients; writes dL/dx and dL/dh into dx, dh.
  void backward(const GruCache& cache, const Matrix& dh_next, Matrix* dx,
                Matrix* dh) const;

 private:
  Param* wx_ = nullptr;  // (3H x in)
  Param* wh_ = nullptr;  // (3H x H)
  Param* bx_ = nullptr;  // (3H x 1)
  Param* bh_ = nullptr;  // (3H x 1)
};

// Runs a GruCell over a padded batch of sequences. Column b only advances
// while t < lengths[b]; afterwards its state is carried through unchanged.
struct GruSequenceCache {
  std::vector<GruCache> steps;
  std::vector<Eigen::RowVectorXd> masks;
  std::vector<Matrix> states;  // states[t] is the state after step t
};

// inputs[t] is (in x B). Returns the final state (H x B). If cache is null no
// intermediate values are kept.
Matrix gru_sequence_forward(const GruCell& cell, std::span<const Matrix> inputs,
                            std::span<const int> lengths, const Matrix& h0,
                            GruSequenceCache* cache);

// dstates[t] (may be empty matrices for "no gradient") is dL/dstate[t] coming
// from outside the recurrence; dfinal is added at the last step. Returns
// dL/dh0 and fills dinputs[t].
Matrix gru_sequence_backward(const GruCell& cell, const GruSequenceCache& cache,
                             std::span<const Matrix> dstates,
                             const Matrix& dfinal,
                             std::vector<Matrix>* dinputs);

// Packs variable-length id sequences into per-step id vectors, padding with
// pad_id. Returns steps[t][b].
std::vector<std::vector<int>> pack_sequences(
    std::span<const std::vector<int>> sequences, int pad_id);

}  // namespace lmloop::nn

#endif  // LMLOOP_NN_LAYERS_H_
