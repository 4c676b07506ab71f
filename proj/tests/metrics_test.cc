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

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "lmloop/error.h"
#include "lmloop/metrics/metrics.h"
#include "lmloop/text/codec.h"
#include "support/oracles.h"

namespace lmloop::metrics {
namespace {

using lmloop::testing::published_table;

std::vector<GameResult> column(int method) {
  const auto& t = published_table();
  std::vector<GameResult> out;
  for (size_t g = 0; g < t.games.size(); ++g) {
    out.push_back({t.games[g], t.cells[g][method], 0.0, t.max_scores[g], 1});
  }
  return out;
}

// Best of the in-loop columns (every column after the baseline).
double best_in_loop(size_t game) {
  const auto& row = published_table().cells[game];
  return *std::max_element(row.begin() + 1, row.end());
}

// Exact rational evaluation of the cell values, computed offline.
constexpr std::array<double, 6> kExactNorms = {
    20.152021475257, 19.229575163399, 20.459575163399,
    20.885364145658, 20.645690943044, 23.993786181139};

TEST(PublishedTableTest, NormsMatchExactArithmetic) {
  for (int m = 0; m < lmloop::testing::PublishedTable::kMethods; ++m) {
    EXPECT_NEAR(norm_score(column(m)), kExactNorms[m], 1e-9);
  }
}

TEST(PublishedTableTest, NormRowReproducedWhereCellsAgree) {
  const auto& t = published_table();
  // Columns 1 and 2 of the bottom row disagree with their own cells by more
  // than cell rounding explains.
  for (int m : {0, 3, 4, 5}) {
    EXPECT_NEAR(norm_score(column(m)), t.norm_row[m], 0.1) << t.methods[m];
  }
}

TEST(PublishedTableTest, DeltaColumnReproducedUnderTruncation) {
  const auto& t = published_table();
  double mean = 0.0;
  for (size_t g = 0; g < t.games.size(); ++g) {
    const auto d = delta_percent(t.cells[g][0], best_in_loop(g));
    ASSERT_TRUE(d.has_value());
    EXPECT_EQ(display_percent(*d), t.delta_column[g]) << t.games[g];
    mean += display_percent(*d);
  }
  mean /= static_cast<double>(t.games.size());
  EXPECT_NEAR(mean, 52.2, 1e-9);
  EXPECT_NEAR(mean, t.delta_mean, 0.5);
}

TEST(NormScoreTest, SingleGameAtMaximum) {
  const std::vector<GameResult> one = {{"g", 7.0, 0.0, 7.0, 1}};
  EXPECT_DOUBLE_EQ(norm_score(one), 100.0);
  EXPECT_THROW(norm_score({}), Error);
  const std::vector<GameResult> bad = {{"g", 1.0, 0.0, 0.0, 1}};
  EXPECT_THROW(norm_score(bad), Error);
}

TEST(NormScoreTest, OrderInvariantAndLinear) {
  auto results = column(5);
  const double base = norm_score(results);
  std::reverse(results.begin(), results.end());
  EXPECT_NEAR(norm_score(results), base, 1e-12);
  results[3].mean += 2.0;
  EXPECT_NEAR(norm_score(results),
              base + 100.0 * 2.0 / results[3].max_score / results.size(), 1e-12);
}

TEST(DeltaTest, UndefinedForNonPositiveBaseline) {
  EXPECT_FALSE(delta_percent(0.0, 3.0).has_value());
  EXPECT_FALSE(delta_percent(-1.0, 3.0).has_value());
  EXPECT_NEAR(*delta_percent(30.7, 38.0), 23.7785016286645, 1e-9);
  EXPECT_EQ(display_percent(23.78), 23.0);
  EXPECT_EQ(display_percent(74.99999999999), 75.0);
  EXPECT_EQ(display_percent(-0.55), 0.0);
}

ScoreSeries constant_series(size_t episodes, double score) {
  ScoreSeries s;
  for (size_t i = 0; i < episodes; ++i) s.push_back({static_cast<int64_t>(10 * (i + 1)), score});
  return s;
}

TEST(Last100Test, ConstantScores) {
  const std::vector<ScoreSeries> runs = {constant_series(30, 5.0), constant_series(200, 5.0)};
  const GameResult r = last100_avg("g", runs, 10.0);
  EXPECT_EQ(r.mean, 5.0);
  EXPECT_EQ(r.se, 0.0);
  EXPECT_EQ(r.runs, 2);
}

TEST(Last100Test, StandardErrorOverRuns) {
  const std::vector<ScoreSeries> runs = {constant_series(10, 4.0), constant_series(10, 6.0)};
  const GameResult r = last100_avg("g", runs, 10.0);
  EXPECT_DOUBLE_EQ(r.mean, 5.0);
  EXPECT_DOUBLE_EQ(r.se, 1.0);
}

TEST(Last100Test, OnlyFinalWindowCounts) {
  ScoreSeries s = constant_series(50, 0.0);
  const ScoreSeries tail = constant_series(100, 3.0);
  for (const auto& p : tail) s.push_back({p.env_step + 1000, p.score});
  const std::vector<ScoreSeries> runs = {s};
  EXPECT_EQ(last100_avg("g", runs, 10.0).mean, 3.0);
  EXPECT_THROW(last100_avg("g", {}, 10.0), Error);
  const std::vector<ScoreSeries> empty_run = {ScoreSeries{}};
  EXPECT_THROW(last100_avg("g", empty_run, 10.0), Error);
}

std::vector<ScorePoint> ramp(int64_t total, int64_t peak_step, double peak) {
  std::vector<ScorePoint> c;
  for (int64_t s = 100; s <= total; s += 100) {
    c.push_back({s, s <= peak_step ? peak * s / peak_step : peak});
  }
  return c;
}

TEST(AccelerationTest, IdenticalCurvesPeakStep) {
  const auto base = ramp(10000, 6000, 4.0);
  EXPECT_NEAR(*acceleration(base, base, 1.0, 10000), 60.0, 1e-12);
}

TEST(AccelerationTest, HalfTheSteps) {
  const auto base = ramp(10000, 8000, 4.0);
  const auto fast = ramp(10000, 4000, 4.0);
  EXPECT_NEAR(*acceleration(fast, base, 1.0, 10000), 40.0, 1e-12);
  EXPECT_NEAR(*acceleration(fast, base, 0.5, 10000), 20.0, 1e-12);
}

TEST(AccelerationTest, NeverReachedAndZeroBaseline) {
  const auto base = ramp(10000, 8000, 4.0);
  const auto slow = ramp(10000, 8000, 2.0);
  EXPECT_FALSE(acceleration(slow, base, 0.9, 10000).has_value());
  const auto zero = ramp(10000, 8000, 0.0);
  EXPECT_FALSE(acceleration(base, zero, 0.9, 10000).has_value());
}

TEST(AccelerationTest, AntitoneInQ) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    std::vector<ScorePoint> a, b;
    for (int64_t s = 50; s <= 5000; s += 50) {
      a.push_back({s, 10.0 * rng.uniform()});
      b.push_back({s, 10.0 * rng.uniform()});
    }
    double prev = 0.0;
    bool unreached = false;
    for (double q = 0.05; q <= 1.0; q += 0.05) {
      const auto acc = acceleration(a, b, q, 5000);
      if (!acc.has_value()) {
        unreached = true;
        continue;
      }
      EXPECT_FALSE(unreached) << "reached again after a smaller q failed";
      EXPECT_GE(*acc, prev);
      prev = *acc;
    }
  }
}

TEST(CurveTest, TrailingAndAveragedCurves) {
  ScoreSeries s;
  for (int i = 1; i <= 5; ++i) s.push_back({100 * i, static_cast<double>(i)});
  const auto trailing = trailing_curve(s, 2);
  ASSERT_EQ(trailing.size(), 5u);
  EXPECT_EQ(trailing[0].score, 1.0);
  EXPECT_EQ(trailing[4].score, 4.5);
  ScoreSeries other;
  other.push_back({250, 10.0});
  const std::vector<ScoreSeries> runs = {s, other};
  const auto avg = averaged_curve(runs, 500, 100, 2);
  ASSERT_EQ(avg.size(), 5u);
  EXPECT_EQ(avg[0].score, 1.0);   // only the first run has finished
  EXPECT_EQ(avg[2].score, (2.5 + 10.0) / 2.0);
}

std::vector<std::vector<std::string>> split_all(const std::vector<std::string>& v) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : v) out.push_back(text::split_words(s));
  return out;
}

TEST(BleuTest, MatchesBruteForceOracle) {
  Rng rng(2);
  for (int pair = 0; pair < 50; ++pair) {
    const auto source = lmloop::testing::random_action_set(rng, 8);
    const auto target = lmloop::testing::random_action_set(rng, 8);
    EXPECT_NEAR(bleu2_action_similarity(source, target),
                lmloop::testing::brute_force_similarity(source, target), 1e-9);
  }
}

TEST(BleuTest, SentenceLevelAgreesWithOracle) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto hyp = text::split_words(lmloop::testing::random_action_set(rng, 1)[0]);
    const auto refs = split_all(lmloop::testing::random_action_set(rng, 5));
    EXPECT_NEAR(sentence_bleu2(hyp, refs), lmloop::testing::brute_force_bleu2(hyp, refs), 1e-12);
  }
}

TEST(BleuTest, IdentityAndSubsetGiveOne) {
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto set = lmloop::testing::random_action_set(rng, 10);
    EXPECT_NEAR(bleu2_action_similarity(set, set), 1.0, 1e-12);
    std::vector<std::string> superset = set;
    superset.push_back("open the red door north");
    EXPECT_NEAR(bleu2_action_similarity(set, superset), 1.0, 1e-12);
  }
  const std::vector<std::string> take = {"take lamp"};
  const std::vector<std::string> target = {"go north", "take lamp", "open door"};
  EXPECT_EQ(bleu2_action_similarity(take, target), 1.0);
  EXPECT_THROW(bleu2_action_similarity({}, target), Error);
}

TEST(BleuTest, AsymmetricOnUnequalSets) {
  const std::vector<std::string> small = {"take lamp"};
  const std::vector<std::string> large = {"take lamp", "open the red door"};
  const double forward = bleu2_action_similarity(small, large);
  const double backward = bleu2_action_similarity(large, small);
  EXPECT_EQ(forward, 1.0);
  EXPECT_LT(backward, 0.99);
}

class CsvTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("lmloop_metrics_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(CsvTest, RoundTrips) {
  const std::vector<ScoreRow> scores = {{"cellar", "oc", 1.0 / 3.0, 0.1, 22, 100.0 / 66.0},
                                        {"manor", "frozen_lm", 0.0, 0.0, 34, 0.0}};
  write_scores_csv(dir_ / "s.csv", scores);
  EXPECT_EQ(read_scores_csv(dir_ / "s.csv"), scores);
  const std::vector<CurveRow> curves = {{"oc", 800, 2.0 / 7.0}, {"oc", 1600, 1e-17}};
  write_curves_csv(dir_ / "c.csv", curves);
  EXPECT_EQ(read_curves_csv(dir_ / "c.csv"), curves);
  const std::vector<TransferRow> transfer = {{"cellar", "harbor", 0.4321, 3.5, 0.25, 17}};
  write_transfer_csv(dir_ / "t.csv", transfer);
  EXPECT_EQ(read_transfer_csv(dir_ / "t.csv"), transfer);
  const ScoreSeries log = {{8, 0.0}, {16, 3.0}, {16, 1.0}};
  write_score_log(dir_ / "log.csv", log);
  EXPECT_EQ(read_score_log(dir_ / "log.csv"), log);
  std::ifstream in(dir_ / "s.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "game,method,mean,se,max_score,norm");
}

TEST_F(CsvTest, ScoreLogMustBeMonotone) {
  std::ofstream(dir_ / "bad.csv") << "episode,env_step,score\n0,16,1\n1,8,2\n";
  try {
    read_score_log(dir_ / "bad.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

}  // namespace
}  // namespace lmloop::metrics
