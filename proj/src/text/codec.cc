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

#include "lmloop/text/codec.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "lmloop/error.h"
#include "lmloop/rng.h"

namespace lmloop::text {

namespace {

const char* const kSpecialWords[kNumSpecial] = {"[CLS]", "[SEP]", "[PAD]",
                                                "[EOS]", "[UNK]"};

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0; }

bool is_punct_word(const std::string& w) {
  return w.size() == 1 && !is_word_char(static_cast<unsigned char>(w[0]));
}

void append_words(const Vocabulary& vocab, std::string_view text,
                  TokenSequence& out) {
  TokenSequence ids = vocab.tokenize(text);
  out.insert(out.end(), ids.begin(), ids.end());
}

// Body between [CLS] and the final [SEP].
TokenSequence context_body(const Vocabulary& vocab, const ContextSample& s) {
  TokenSequence body;
  append_words(vocab, s.prev_observation, body);
  body.push_back(kSep);
  append_words(vocab, s.prev_action, body);
  body.push_back(kSep);
  append_words(vocab, s.observation, body);
  return body;
}

void check_field(const std::string& field) {
  if (field.find_first_of("\t\n\r") != std::string::npos) {
    throw Error("corpus field contains a tab or newline: " + field);
  }
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_char(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
      continue;
    }
    if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
    if (!std::isspace(c)) out.emplace_back(1, static_cast<char>(c));
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary::Vocabulary() {
  for (int i = 0; i < kNumSpecial; ++i) {
    ids_[kSpecialWords[i]] = i;
    words_.emplace_back(kSpecialWords[i]);
  }
}

Vocabulary Vocabulary::from_words(std::span<const std::string> words) {
  Vocabulary v;
  std::set<std::string> sorted;
  for (const auto& w : words) {
    if (w.empty() || v.ids_.count(w)) continue;
    sorted.insert(w);
  }
  if (sorted.size() + kNumSpecial > kMaxVocabulary) {
    throw ValidationError("vocabulary exceeds " +
                          std::to_string(kMaxVocabulary) + " tokens");
  }
  for (const auto& w : sorted) {
    v.ids_[w] = static_cast<TokenId>(v.words_.size());
    v.words_.push_back(w);
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary " + path.string());
  std::vector<std::string> words;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno <= kNumSpecial) {
      if (line != kSpecialWords[lineno - 1]) {
        throw ParseError(path.string(), lineno, "expected special token");
      }
      continue;
    }
    words.push_back(line);
  }
  Vocabulary v = from_words(words);
  if (v.size() != lineno ||
      !std::equal(words.begin(), words.end(), v.words_.begin() + kNumSpecial)) {
    throw ParseError(path.string(), 0, "vocabulary not sorted or has duplicates");
  }
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write vocabulary " + path.string());
  for (const auto& w : words_) out << w << "\n";
}

TokenId Vocabulary::id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view word) const {
  return ids_.count(std::string(word)) > 0;
}

TokenSequence Vocabulary::tokenize(std::string_view text) const {
  TokenSequence out;
  for (const auto& w : split_words(text)) out.push_back(id(w));
  return out;
}

std::string Vocabulary::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    const std::string& w = words_.at(id);
    if (!out.empty() && !is_punct_word(w)) out.push_back(' ');
    out += w;
  }
  return out;
}

EncodedSample encode_context(const Vocabulary& vocab,
                             const ContextSample& sample, int max_len) {
  TokenSequence target = vocab.tokenize(sample.target_action);
  const int tail_len = static_cast<int>(target.size()) + 2;
  if (tail_len > max_len) {
    throw Error("target action needs " + std::to_string(target.size()) +
                " tokens, more than max_len - 2 = " +
                std::to_string(max_len - 2));
  }
  TokenSequence body = context_body(vocab, sample);
  const int full_len = 1 + static_cast<int>(body.size()) + tail_len;

  EncodedSample out;
  out.ids.reserve(std::min(full_len, max_len));
  if (full_len <= max_len) {
    out.ids.push_back(kCls);
    out.ids.insert(out.ids.end(), body.begin(), body.end());
  } else if (max_len > tail_len) {
    const size_t keep = static_cast<size_t>(max_len - tail_len - 1);
    out.ids.push_back(kCls);
    out.ids.insert(out.ids.end(), body.end() - static_cast<long>(keep),
                   body.end());
  }
  out.ids.push_back(kSep);
  const size_t target_start = out.ids.size();
  out.ids.insert(out.ids.end(), target.begin(), target.end());
  out.ids.push_back(kEos);
  out.loss_mask.assign(out.ids.size(), 0);
  for (size_t i = target_start; i < out.ids.size(); ++i) out.loss_mask[i] = 1;
  out.target_tokens = static_cast<int>(target.size());
  return out;
}

TokenSequence encode_prompt(const Vocabulary& vocab,
                            const ContextSample& sample, int max_len) {
  if (max_len < 2) throw Error("prompt max_len must be at least 2");
  TokenSequence body = context_body(vocab, sample);
  TokenSequence out;
  out.push_back(kCls);
  const size_t room = static_cast<size_t>(max_len - 2);
  if (body.size() <= room) {
    out.insert(out.end(), body.begin(), body.end());
  } else {
    out.insert(out.end(), body.end() - static_cast<long>(room), body.end());
  }
  out.push_back(kSep);
  return out;
}

void write_corpus(const std::filesystem::path& path,
                  std::span<const ContextSample> samples) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus " + path.string());
  for (const auto& s : samples) {
    check_field(s.prev_observation);
    check_field(s.prev_action);
    check_field(s.observation);
    check_field(s.target_action);
    out << s.prev_observation << '\t' << s.prev_action << '\t'
        << s.observation << '\t' << s.target_action << '\n';
  }
}

std::vector<ContextSample> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path.string());
  std::vector<ContextSample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      const size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (fields.size() != 4) {
      throw ParseError(path.string(), lineno,
                       "expected 4 tab-separated fields, found " +
                           std::to_string(fields.size()));
    }
    out.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  return out;
}

std::vector<ContextSample> select_fraction(
    std::span<const ContextSample> samples, double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error("corpus fraction must be in (0, 1]");
  }
  const size_t n = samples.size();
  const size_t k = std::min(
      n, static_cast<size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, 0x5e1ec7));
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + static_cast<size_t>(rng.index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<ContextSample> out;
  out.reserve(k);
  for (size_t i : idx) out.push_back(samples[i]);
  return out;
}

}  // namespace lmloop::text
