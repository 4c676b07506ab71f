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

#include "lmloop/nn/optimizer.h"

#include <algorithm>
#include <cmath>

#include "lmloop/error.h"

namespace lmloop::nn {

double clip_grad_norm(ParamStore& store, double max_norm) {
  const double norm = store.grad_norm();
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (size_t i = 0; i < store.size(); ++i) store[i].grad *= scale;
  }
  return norm;
}

double adam_step(ParamStore& store, const AdamOptions& opts) {
  if (!store.grads_finite()) throw NonFiniteError("non-finite gradient");
  const double norm = clip_grad_norm(store, opts.clip_norm);

  store.step_count += 1;
  const double t = static_cast<double>(store.step_count);
  const double bc1 = 1.0 - std::pow(opts.beta1, t);
  const double bc2 = 1.0 - std::pow(opts.beta2, t);
  for (size_t i = 0; i < store.size(); ++i) {
    Param& p = store[i];
    if (opts.weight_decay != 0.0) p.value *= 1.0 - opts.lr * opts.weight_decay;
    p.m = opts.beta1 * p.m + (1.0 - opts.beta1) * p.grad;
    p.v = opts.beta2 * p.v + (1.0 - opts.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= opts.lr * (p.m.array() / bc1) /
                       ((p.v.array() / bc2).sqrt() + opts.eps);
  }
  return norm;
}

WarmupSchedule::WarmupSchedule(double base_lr, double warmup_fraction,
                               int64_t total_steps)
    : base_lr_(base_lr),
      warmup_steps_(static_cast<int64_t>(
          std::ceil(std::clamp(warmup_fraction, 0.0, 1.0) *
                    static_cast<double>(total_steps)))) {}

double WarmupSchedule::lr(int64_t step) const {
  if (warmup_steps_ <= 0 || step >= warmup_steps_) return base_lr_;
  return base_lr_ * static_cast<double>(step + 1) /
         static_cast<double>(warmup_steps_);
}

}  // namespace lmloop::nn
