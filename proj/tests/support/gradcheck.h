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

#ifndef LMLOOP_TESTS_SUPPORT_GRADCHECK_H_
#define LMLOOP_TESTS_SUPPORT_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <string>

#include "lmloop/nn/param_store.h"

namespace lmloop::testing {

struct GradReport {
  std::string op;
  int instances = 0;
  long checked = 0;  // scalar derivatives compared
  double max_rel_error = 0.0;
};

// |a - n| / max(|a|, |n|, floor): the floor keeps derivatives that vanish up
// to rounding from dominating the ratio.
double rel_error(double analytic, double numeric, double floor = 1e-6);

// Fourth-order central difference of loss in x; x is restored.
double five_point(double& x, const std::function<double()>& loss, double eps);

// Central differences of `loss` against every scalar of `store`, compared
// with the gradients already accumulated in store (grad of the same loss).
void compare_param_grads(nn::ParamStore& store,
                         const std::function<double()>& loss, double eps,
                         GradReport* report);

// Central differences against a free matrix input.
void compare_input_grad(nn::Matrix& input, const nn::Matrix& analytic,
                        const std::function<double()>& loss, double eps,
                        GradReport* report);

// Each runs `instances` random instances of one differentiable operation.
GradReport check_dense(int instances, uint64_t seed);
GradReport check_embedding(int instances, uint64_t seed);
GradReport check_gru_cell(int instances, uint64_t seed);
GradReport check_gru_sequence(int instances, uint64_t seed);
GradReport check_softmax_xent(int instances, uint64_t seed);
GradReport check_lm(int instances, uint64_t seed);
GradReport check_qnet(int instances, uint64_t seed);

}  // namespace lmloop::testing

#endif  // LMLOOP_TESTS_SUPPORT_GRADCHECK_H_
