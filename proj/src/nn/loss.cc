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

#include "lmloop/nn/loss.h"

#include <cmath>
#include <stdexcept>

namespace lmloop::nn {

Vector softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  Vector e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

Vector log_softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return (logits.array() - lse).matrix();
}

XentResult softmax_xent(const Vector& logits, int target) {
  if (target < 0 || target >= logits.size()) {
    throw std::out_of_range("softmax_xent: target out of range");
  }
  Vector logp = log_softmax(logits);
  XentResult out;
  out.loss = -logp(target);
  out.grad = logp.array().exp().matrix();
  out.grad(target) -= 1.0;
  return out;
}

}  // namespace lmloop::nn
