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

#include "lmloop/nn/param_store.h"

#include <cmath>

#include "lmloop/error.h"

namespace lmloop::nn {

Param& ParamStore::add(const std::string& name, Eigen::Index rows,
                       Eigen::Index cols) {
  if (index_.count(name)) throw Error("duplicate parameter: " + name);
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value = Matrix::Zero(rows, cols);
  p->grad = Matrix::Zero(rows, cols);
  p->m = Matrix::Zero(rows, cols);
  p->v = Matrix::Zero(rows, cols);
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

Param& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter: " + name);
  return *params_[it->second];
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter: " + name);
  return *params_[it->second];
}

size_t ParamStore::num_scalars() const {
  size_t n = 0;
  for (const auto& p : params_) n += static_cast<size_t>(p->value.size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

bool ParamStore::grads_finite() const {
  for (const auto& p : params_) {
    if (!p->grad.allFinite()) return false;
  }
  return true;
}

bool ParamStore::values_finite() const {
  for (const auto& p : params_) {
    if (!p->value.allFinite()) return false;
  }
  return true;
}

void ParamStore::reset_optimizer() {
  for (auto& p : params_) {
    p->m.setZero();
    p->v.setZero();
  }
  step_count = 0;
}

void ParamStore::copy_values_from(const ParamStore& other) {
  if (other.size() != size()) throw Error("parameter count mismatch");
  for (size_t i = 0; i < size(); ++i) {
    const Param& src = other[i];
    Param& dst = *params_[i];
    if (src.name != dst.name || src.rows() != dst.rows() ||
        src.cols() != dst.cols()) {
      throw Error("parameter mismatch at " + dst.name);
    }
    dst.value = src.value;
  }
}

bool ParamStore::values_equal(const ParamStore& other) const {
  if (other.size() != size()) return false;
  for (size_t i = 0; i < size(); ++i) {
    const Param& a = *params_[i];
    const Param& b = other[i];
    if (a.name != b.name || a.rows() != b.rows() || a.cols() != b.cols()) {
      return false;
    }
    if (a.value != b.value) return false;
  }
  return true;
}

void init_fan_in(Param& p, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.cols()));
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    p.value.data()[i] = rng.uniform(-bound, bound);
  }
}

}  // namespace lmloop::nn
