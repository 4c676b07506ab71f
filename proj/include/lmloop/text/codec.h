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

#ifndef LMLOOP_TEXT_CODEC_H_
#define LMLOOP_TEXT_CODEC_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lmloop::text {

using TokenId = int;
using TokenSequence = std::vector<TokenId>;

inline constexpr TokenId kCls = 0;
inline constexpr TokenId kSep = 1;
inline constexpr TokenId kPad = 2;
inline constexpr TokenId kEos = 3;
inline constexpr TokenId kUnk = 4;
inline constexpr int kNumSpecial = 5;
inline constexpr int kMaxVocabulary = 2048;

// Lowercases and splits into words: maximal runs of [a-z0-9], and every other
// non-space character as a token of its own.
std::vector<std::string> split_words(std::string_view text);

// Closed word-level vocabulary. Ids 0-4 are the special tokens; the remaining
// words are assigned ids in sorted order, so construction is deterministic.
class Vocabulary {
 public:
  Vocabulary();
  // Builds from arbitrary words (duplicates and special literals ignored).
  static Vocabulary from_words(std::span<const std::string> words);
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(words_.size()); }
  TokenId id(std::string_view word) const;  // kUnk if absent
  bool contains(std::string_view word) const;
  const std::string& word(TokenId id) const { return words_.at(id); }
  std::span<const std::string> words() const { return words_; }

  TokenSequence tokenize(std::string_view text) const;
  // Joins words with single spaces, attaching punctuation to the left word.
  // For sequences without special tokens, tokenize(detokenize(s)) == s.
  std::string detokenize(std::span<const TokenId> ids) const;

  bool operator==(const Vocabulary& other) const {
    return words_ == other.words_;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> ids_;
};

// One ((o_{j-1}, a_{j-1}, o_j), a_j) record.
struct ContextSample {
  std::string prev_observation;
  std::string prev_action;
  std::string observation;
  std::string target_action;

  bool operator==(const ContextSample&) const = default;
};

struct EncodedSample {
  TokenSequence ids;
  // 1 on the target-action tokens and the closing [EOS]: the positions whose
  // token contributes to the loss.
  std::vector<uint8_t> loss_mask;
  int target_tokens = 0;  // excluding [EOS]
};

inline constexpr int kDefaultMaxLen = 96;

// Serializes "[CLS] o_{j-1} [SEP] a_{j-1} [SEP] o_j [SEP] a_j [EOS]". When the
// result exceeds max_len, context tokens are dropped from the left (keeping
// [CLS] when there is room for it); the final [SEP], target, and [EOS] are
// never truncated. Throws Error if the target needs more than max_len - 2.
EncodedSample encode_context(const Vocabulary& vocab,
                             const ContextSample& sample, int max_len);

// The generation prompt: the serialization above up to and including the
// final [SEP], left-truncated to at most max_len tokens (keeping [CLS]).
TokenSequence encode_prompt(const Vocabulary& vocab,
                            const ContextSample& sample, int max_len);

// Corpus file: UTF-8, one record per line, four tab-separated fields
// (prev_obs, prev_action, obs, target_action).
void write_corpus(const std::filesystem::path& path,
                  std::span<const ContextSample> samples);
std::vector<ContextSample> read_corpus(const std::filesystem::path& path);

// Deterministic uniform subset without replacement of ceil(fraction * N)
// samples, returned in their original order.
std::vector<ContextSample> select_fraction(
    std::span<const ContextSample> samples, double fraction, uint64_t seed);

}  // namespace lmloop::text

#endif  // LMLOOP_TEXT_CODEC_H_
