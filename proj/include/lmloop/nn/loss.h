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

#ifndef LMLOOP_NN_LOSS_H_
#define LMLOOP_NN_LOSS_H_

#include "lmloop/nn/param_store.h"

namespace lmloop::nn {

// Numerically stable softmax / log-softmax of a column vector.
Vector softmax(const Vector& logits);
Vector log_softmax(const Vector& logits);

struct XentResult {
  double loss;
  Vector grad;  // dL/dlogits = softmax(logits) - onehot(target)
};

// -log softmax(logits)[target]. Throws std::out_of_range for a bad target.
XentResult softmax_xent(const Vector& logits, int target);

}  // namespace lmloop::nn

#endif  // LMLOOP_NN_LOSS_H_
