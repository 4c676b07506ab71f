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

#ifndef LMLOOP_NN_PARAM_STORE_H_
#define LMLOOP_NN_PARAM_STORE_H_

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmloop/rng.h"

namespace lmloop::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// One named parameter tensor with its gradient and Adam moments. All tensors
// are stored as 2-D matrices; vectors are (n x 1).
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix m;
  Matrix v;

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
};

// Ordered collection of parameters. Param addresses are stable for the
// lifetime of the store (including across moves), so layers keep raw
// pointers into it.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  // Adds a zero-initialized parameter. Throws on duplicate names.
  Param& add(const std::string& name, Eigen::Index rows, Eigen::Index cols);

  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const {
    return index_.count(name) > 0;
  }

  size_t size() const { return params_.size(); }
  Param& operator[](size_t i) { return *params_[i]; }
  const Param& operator[](size_t i) const { return *params_[i]; }

  size_t num_scalars() const;

  void zero_grad();
  double grad_norm() const;
  bool grads_finite() const;
  bool values_finite() const;

  // Resets the optimizer moments and step count.
  void reset_optimizer();

  // Copies parameter values (not gradients or moments). Names and shapes
  // must match.
  void copy_values_from(const ParamStore& other);

  // True iff every parameter value is bit-identical to `other`'s.
  bool values_equal(const ParamStore& other) const;

  int64_t step_count = 0;

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::unordered_map<std::string, size_t> index_;
};

// Uniform in +-1/sqrt(fan_in), where fan_in is the column count.
void init_fan_in(Param& p, Rng& rng);

}  // namespace lmloop::nn

#endif  // LMLOOP_NN_PARAM_STORE_H_
