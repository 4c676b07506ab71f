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

#ifndef LMLOOP_ERROR_H_
#define LMLOOP_ERROR_H_

#include <stdexcept>
#include <string>

namespace lmloop {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `line` is 1-based; 0 when the error has no locus.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, int line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// A loaded object violates one of its documented invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The caller broke a precondition (stepping a finished episode, sampling
// from empty buffers, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// NaN or Inf reached a place that requires finite values.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace lmloop

#endif  // LMLOOP_ERROR_H_
