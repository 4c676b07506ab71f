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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "lmloop/error.h"
#include "lmloop/rng.h"
#include "lmloop/text/codec.h"

namespace lmloop::text {
namespace {

Vocabulary fixture_vocab() {
  const std::vector<std::string> words = {"go",   "north", "take", "lamp", ".",
                                          "you",  "are",   "in",   "a",    "hall",
                                          "to",   "the",   "is",   "door", ","};
  return Vocabulary::from_words(words);
}

std::string random_sentence(Rng& rng, const Vocabulary& v, int lo, int hi) {
  const int n = lo + static_cast<int>(rng.index(hi - lo + 1));
  TokenSequence ids;
  for (int i = 0; i < n; ++i) {
    ids.push_back(kNumSpecial + static_cast<int>(rng.index(v.size() - kNumSpecial)));
  }
  return v.detokenize(ids);
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("lmloop_text_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST(VocabularyTest, SpecialTokensHaveReservedIds) {
  const Vocabulary v = fixture_vocab();
  EXPECT_EQ(v.word(kCls), "[CLS]");
  EXPECT_EQ(v.word(kSep), "[SEP]");
  EXPECT_EQ(v.word(kPad), "[PAD]");
  EXPECT_EQ(v.word(kEos), "[EOS]");
  EXPECT_EQ(v.word(kUnk), "[UNK]");
  EXPECT_EQ(v.size(), 5 + 15);
}

TEST(VocabularyTest, TokenizesCaseAndPunctuation) {
  const Vocabulary v = fixture_vocab();
  const TokenSequence want = {v.id("go"), v.id("north"), v.id(".")};
  EXPECT_EQ(v.tokenize("Go North."), want);
  EXPECT_TRUE(v.tokenize("").empty());
  const TokenSequence oov = v.tokenize("go xylophone");
  EXPECT_EQ(oov.back(), kUnk);
}

TEST(VocabularyTest, DetokenizeRoundTripsInVocabularyText) {
  const Vocabulary v = fixture_vocab();
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const std::string s = random_sentence(rng, v, 0, 12);
    EXPECT_EQ(v.detokenize(v.tokenize(s)), s);
  }
}

TEST_F(TempDir, VocabularySaveLoad) {
  const Vocabulary v = fixture_vocab();
  v.save(dir_ / "vocab.txt");
  EXPECT_EQ(Vocabulary::load(dir_ / "vocab.txt"), v);
}

TEST(EncodeTest, MaskCoversTargetAndEos) {
  const Vocabulary v = fixture_vocab();
  const ContextSample s{"you are in a hall .", "go north", "a door .",
                        "take the lamp"};
  const EncodedSample e = encode_context(v, s, 96);
  EXPECT_EQ(std::count(e.loss_mask.begin(), e.loss_mask.end(), 1), 4);
  EXPECT_EQ(e.target_tokens, 3);
  EXPECT_EQ(e.ids.front(), kCls);
  EXPECT_EQ(e.ids.back(), kEos);
}

TEST(EncodeTest, SerializationOrder) {
  const Vocabulary v = fixture_vocab();
  const ContextSample s{"hall", "go", "door", "take lamp"};
  const TokenSequence want = {kCls,          v.id("hall"), kSep,
                              v.id("go"),    kSep,         v.id("door"),
                              kSep,          v.id("take"), v.id("lamp"),
                              kEos};
  EXPECT_EQ(encode_context(v, s, 96).ids, want);
}

TEST(EncodeTest, EpisodeStartHasConsecutiveSeparators) {
  const Vocabulary v = fixture_vocab();
  const ContextSample s{"", "", "a hall .", "go north"};
  const TokenSequence ids = encode_context(v, s, 96).ids;
  const TokenSequence sep2 = {kSep, kSep};
  EXPECT_NE(std::search(ids.begin(), ids.end(), sep2.begin(), sep2.end()),
            ids.end());
}

TEST(EncodeTest, LongContextIsLeftTruncated) {
  const Vocabulary v = fixture_vocab();
  std::string obs;
  for (int i = 0; i < 40; ++i) obs += "a hall , ";
  const ContextSample s{obs, "go north", obs, "take the lamp"};
  const EncodedSample e = encode_context(v, s, 32);
  ASSERT_EQ(e.ids.size(), 32u);
  EXPECT_EQ(e.ids.front(), kCls);
  const TokenSequence tail = {kSep, v.id("take"), v.id("the"), v.id("lamp"), kEos};
  EXPECT_TRUE(std::equal(tail.rbegin(), tail.rend(), e.ids.rbegin()));
  EXPECT_THROW(encode_context(v, s, 4), Error);
}

TEST(EncodeTest, RandomizedMaskCounts) {
  const Vocabulary v = fixture_vocab();
  Rng rng(6);
  for (int i = 0; i < 300; ++i) {
    const ContextSample s{random_sentence(rng, v, 0, 30),
                          random_sentence(rng, v, 0, 4),
                          random_sentence(rng, v, 0, 30),
                          random_sentence(rng, v, 1, 8)};
    const int max_len = 12 + static_cast<int>(rng.index(60));
    const EncodedSample e = encode_context(v, s, max_len);
    EXPECT_LE(e.ids.size(), static_cast<size_t>(max_len));
    EXPECT_EQ(std::count(e.loss_mask.begin(), e.loss_mask.end(), 1),
              e.target_tokens + 1);
    EXPECT_EQ(e.target_tokens, static_cast<int>(v.tokenize(s.target_action).size()));
    const TokenSequence prompt = encode_prompt(v, s, max_len);
    EXPECT_LE(prompt.size(), static_cast<size_t>(max_len));
    EXPECT_EQ(prompt.back(), kSep);
  }
}

TEST_F(TempDir, CorpusRoundTrip) {
  const Vocabulary v = fixture_vocab();
  Rng rng(7);
  std::vector<ContextSample> samples;
  for (int i = 0; i < 100; ++i) {
    samples.push_back({random_sentence(rng, v, 0, 10), random_sentence(rng, v, 0, 3),
                       random_sentence(rng, v, 1, 10), random_sentence(rng, v, 1, 3)});
  }
  write_corpus(dir_ / "c.tsv", samples);
  EXPECT_EQ(read_corpus(dir_ / "c.tsv"), samples);
}

TEST_F(TempDir, CorpusLineWithThreeFieldsReportsLine) {
  std::ofstream(dir_ / "bad.tsv") << "a\tb\tc\td\n"
                                  << "a\tb\tc\n";
  try {
    read_corpus(dir_ / "bad.tsv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(SelectFractionTest, CeilingSizeDeterministicOrdered) {
  std::vector<ContextSample> samples(1000);
  for (int i = 0; i < 1000; ++i) samples[i].observation = std::to_string(i);
  const auto a = select_fraction(samples, 0.1, 42);
  const auto b = select_fraction(samples, 0.1, 42);
  EXPECT_EQ(a.size(), 100u);
  EXPECT_EQ(a, b);
  EXPECT_EQ(select_fraction(samples, 0.0105, 1).size(), 11u);
  EXPECT_EQ(select_fraction(samples, 1.0, 1), samples);
  std::set<std::string> seen;
  int prev = -1;
  for (const auto& s : a) {
    EXPECT_TRUE(seen.insert(s.observation).second);
    EXPECT_GT(std::stoi(s.observation), prev);
    prev = std::stoi(s.observation);
  }
  EXPECT_NE(select_fraction(samples, 0.1, 43), a);
  EXPECT_THROW(select_fraction(samples, 0.0, 1), Error);
}

TEST(SelectFractionTest, InclusionIsUniform) {
  std::vector<ContextSample> samples(20);
  for (int i = 0; i < 20; ++i) samples[i].observation = std::to_string(i);
  std::vector<int> hits(20, 0);
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) {
    for (const auto& s : select_fraction(samples, 0.25, t)) {
      ++hits[std::stoi(s.observation)];
    }
  }
  // Each index is included with probability 5/20; binomial sd ~ 27.
  for (int h : hits) EXPECT_NEAR(h, trials / 4, 140);
}

}  // namespace
}  // namespace lmloop::text
