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

#include "lmloop/curation/curation.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lmloop/error.h"
#include "lmloop/rng.h"

namespace lmloop::curation {
namespace {

constexpr char kCandidateSep = ';';

void check_field(const std::string& s, bool candidate) {
  for (char c : s) {
    if (c == '\t' || c == '\n' || c == '\r' || (candidate && c == kCandidateSep)) {
      throw Error("buffer dump: field contains a separator: " + s);
    }
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& s, const std::string& file, int line) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError(file, line, "bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kUT: return "ut";
    case Strategy::kOC: return "oc";
    case Strategy::kRT: return "rt";
  }
  return "?";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "ut") return Strategy::kUT;
  if (s == "oc") return Strategy::kOC;
  if (s == "rt") return Strategy::kRT;
  throw Error("unknown strategy: " + std::string(s));
}

std::string_view weight_scheme_name(WeightScheme w) {
  switch (w) {
    case WeightScheme::kUniform: return "uniform";
    case WeightScheme::kExpAdvantage: return "exp_advantage";
    case WeightScheme::kLinearAdvantage: return "linear_advantage";
  }
  return "?";
}

WeightScheme parse_weight_scheme(std::string_view s) {
  if (s == "uniform") return WeightScheme::kUniform;
  if (s == "exp_advantage") return WeightScheme::kExpAdvantage;
  if (s == "linear_advantage") return WeightScheme::kLinearAdvantage;
  throw Error("unknown weight scheme: " + std::string(s));
}

Label categorize_oc(const TransitionRecord& record) {
  return record.reward > 0 || record.location != record.next_location
             ? Label::kPositive
             : Label::kNegative;
}

std::vector<Label> categorize_rt(std::span<const TransitionRecord> episode) {
  for (size_t i = 1; i < episode.size(); ++i) {
    if (episode[i].episode != episode[0].episode ||
        episode[i].step <= episode[i - 1].step) {
      throw ContractViolation("categorize_rt: records out of order");
    }
  }
  std::vector<Label> labels(episode.size(), Label::kNegative);
  size_t start = 0;  // first record after the previous non-zero reward
  for (size_t i = 0; i < episode.size(); ++i) {
    if (episode[i].reward == 0) continue;
    if (episode[i].reward > 0) {
      for (size_t j = start; j <= i; ++j) labels[j] = Label::kPositive;
    }
    start = i + 1;
  }
  return labels;
}

CurationBuffers::CurationBuffers(CurationConfig config) : config_(config) {
  if (config_.capacity == 0) throw Error("curation capacity must be > 0");
  if (!(config_.p_plus >= 0.0 && config_.p_plus <= 1.0)) {
    throw Error("p_plus outside [0, 1]");
  }
  if (config_.scheme != WeightScheme::kUniform && !(config_.beta > 0.0)) {
    throw Error("beta must be positive for advantage weights");
  }
}

void CurationBuffers::route(TransitionRecord record, Label label) {
  auto& buf = label == Label::kPositive ? positive_ : negative_;
  if (buf.size() == config_.capacity) buf.pop_front();
  buf.push_back(std::move(record));
}

void CurationBuffers::insert(TransitionRecord record) {
  switch (config_.strategy) {
    case Strategy::kUT:
      route(std::move(record), Label::kPositive);
      break;
    case Strategy::kOC: {
      const Label l = categorize_oc(record);
      route(std::move(record), l);
      break;
    }
    case Strategy::kRT:
      pending_.push_back(std::move(record));
      break;
  }
}

void CurationBuffers::end_episode() {
  if (config_.strategy != Strategy::kRT) return;
  const std::vector<Label> labels = categorize_rt(pending_);
  for (size_t i = 0; i < pending_.size(); ++i) {
    route(std::move(pending_[i]), labels[i]);
  }
  pending_.clear();
}

void CurationBuffers::insert_episode(std::span<const TransitionRecord> episode) {
  for (const auto& r : episode) insert(r);
  end_episode();
}

std::vector<const TransitionRecord*> CurationBuffers::sample(
    size_t n, uint64_t seed, std::vector<bool>* from_positive) const {
  if (positive_.empty() && negative_.empty()) {
    throw ContractViolation("sampling from empty curation buffers");
  }
  Rng rng(seed);
  std::vector<const TransitionRecord*> out;
  out.reserve(n);
  if (from_positive != nullptr) from_positive->clear();
  for (size_t i = 0; i < n; ++i) {
    bool pos = rng.bernoulli(config_.p_plus);
    if (pos && positive_.empty()) pos = false;
    if (!pos && negative_.empty()) pos = true;
    const auto& buf = pos ? positive_ : negative_;
    out.push_back(&buf[rng.index(buf.size())]);
    if (from_positive != nullptr) from_positive->push_back(pos);
  }
  return out;
}

void CurationBuffers::dump(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  auto write = [&](const TransitionRecord& r, char label) {
    for (const std::string* f : {&r.prev_observation, &r.prev_action,
                                 &r.observation, &r.action,
                                 &r.next_observation}) {
      check_field(*f, false);
    }
    out << r.prev_observation << '\t' << r.prev_action << '\t'
        << r.observation << '\t' << r.action << '\t' << label << '\t'
        << r.reward << '\t' << r.location << '\t' << r.next_location << '\t'
        << r.episode << '\t' << r.step << '\t' << r.next_observation << '\t';
    for (size_t i = 0; i < r.candidates.size(); ++i) {
      check_field(r.candidates[i], true);
      if (i > 0) out << kCandidateSep;
      out << r.candidates[i];
    }
    out << '\t';
    if (r.cached_advantage) {
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof(buf), *r.cached_advantage);
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  };
  for (const auto& r : positive_) write(r, '+');
  for (const auto& r : negative_) write(r, '-');
  if (!out) throw Error("write failed: " + path.string());
}

void CurationBuffers::restore(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  const std::string file = path.string();
  std::deque<TransitionRecord> pos, neg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, '\t');
    if (f.size() != 13) throw ParseError(file, lineno, "expected 13 fields");
    TransitionRecord r;
    r.prev_observation = f[0];
    r.prev_action = f[1];
    r.observation = f[2];
    r.action = f[3];
    r.reward = parse_number<int>(f[5], file, lineno);
    r.location = parse_number<int>(f[6], file, lineno);
    r.next_location = parse_number<int>(f[7], file, lineno);
    r.episode = parse_number<int64_t>(f[8], file, lineno);
    r.step = parse_number<int>(f[9], file, lineno);
    r.next_observation = f[10];
    if (!f[11].empty()) r.candidates = split(f[11], kCandidateSep);
    if (!f[12].empty()) r.cached_advantage = parse_number<double>(f[12], file, lineno);
    if (f[4] == "+") {
      pos.push_back(std::move(r));
    } else if (f[4] == "-") {
      neg.push_back(std::move(r));
    } else {
      throw ParseError(file, lineno, "buffer label must be + or -");
    }
  }
  while (pos.size() > config_.capacity) pos.pop_front();
  while (neg.size() > config_.capacity) neg.pop_front();
  positive_ = std::move(pos);
  negative_ = std::move(neg);
  pending_.clear();
}

double compute_h(WeightScheme scheme, double beta, double advantage) {
  switch (scheme) {
    case WeightScheme::kUniform: return 1.0;
    case WeightScheme::kExpAdvantage: return std::exp(beta * advantage);
    case WeightScheme::kLinearAdvantage: return 1.0 + beta * advantage;
  }
  return 1.0;
}

std::vector<double> record_advantages(
    std::span<const TransitionRecord* const> records, const drrn::QNetwork& q,
    AdvantageMode mode) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const TransitionRecord* r : records) {
    if (mode == AdvantageMode::kCached) {
      if (!r->cached_advantage) {
        throw ContractViolation("record has no cached advantage");
      }
      out.push_back(*r->cached_advantage);
    } else {
      out.push_back(
          drrn::advantage(q, r->observation, r->action, r->candidates));
    }
  }
  return out;
}

std::vector<lm::WeightedSample> to_context_samples(
    std::span<const TransitionRecord* const> records,
    std::span<const double> weights) {
  if (weights.size() != records.size()) {
    throw Error("to_context_samples: weights/records size mismatch");
  }
  std::vector<lm::WeightedSample> out;
  out.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    const TransitionRecord& r = *records[i];
    out.push_back({{r.prev_observation, r.prev_action, r.observation, r.action},
                   weights[i]});
  }
  return out;
}

std::vector<double> curation_weights(
    const CurationConfig& config,
    std::span<const TransitionRecord* const> records, const drrn::QNetwork* q) {
  if (config.scheme == WeightScheme::kUniform) {
    return std::vector<double>(records.size(), 1.0);
  }
  if (q == nullptr) {
    throw ContractViolation("advantage weights need a Q network");
  }
  std::vector<double> w = record_advantages(records, *q, config.advantage_mode);
  for (double& x : w) x = compute_h(config.scheme, config.beta, x);
  return w;
}

}  // namespace lmloop::curation
