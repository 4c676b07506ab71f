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

#ifndef LMLOOP_NN_OPTIMIZER_H_
#define LMLOOP_NN_OPTIMIZER_H_

#include "lmloop/nn/param_store.h"

namespace lmloop::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Decoupled (AdamW) decay, applied as p -= lr * weight_decay * p.
  double weight_decay = 0.0;
  // Global-norm clip threshold; <= 0 disables clipping.
  double clip_norm = 0.0;
};

// One Adam update over every parameter of `store`. The global gradient norm
// is clipped to clip_norm before the moment update. Gradients are left in
// place (callers zero them). Returns the pre-clip gradient norm. Throws
// NonFiniteError if any gradient is NaN/Inf.
double adam_step(ParamStore& store, const AdamOptions& opts);

// Scales the gradient so its global norm is at most max_norm. Returns the
// norm before clipping.
double clip_grad_norm(ParamStore& store, double max_norm);

// Linear warmup over the first `warmup_fraction` of total_steps, constant
// afterwards.
class WarmupSchedule {
 public:
  WarmupSchedule(double base_lr, double warmup_fraction, int64_t total_steps);
  // Learning rate for 0-based update index `step`.
  double lr(int64_t step) const;

 private:
  double base_lr_;
  int64_t warmup_steps_;
};

}  // namespace lmloop::nn

#endif  // LMLOOP_NN_OPTIMIZER_H_
