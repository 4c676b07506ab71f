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

#ifndef LMLOOP_METRICS_METRICS_H_
#define LMLOOP_METRICS_METRICS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lmloop::metrics {

// One finished episode: the total env step count at which it ended and its
// score.
struct ScorePoint {
  int64_t env_step = 0;
  double score = 0.0;

  bool operator==(const ScorePoint&) const = default;
};
using ScoreSeries = std::vector<ScorePoint>;

struct GameResult {
  std::string game;
  double mean = 0.0;  // cross-run mean of per-run last-window means
  double se = 0.0;    // sample std of per-run means / sqrt(runs)
  double max_score = 0.0;
  int runs = 0;
};

// Per run, the mean of its final min(window, count) episodes; then the mean
// and standard error over runs. Throws Error on no runs or an empty run.
GameResult last100_avg(const std::string& game,
                       std::span<const ScoreSeries> runs, double max_score,
                       size_t window = 100);

// Mean over games of 100 * mean / max_score. Throws on an empty list or a
// non-positive max_score.
double norm_score(std::span<const GameResult> results);

// 100 * (best - baseline) / baseline; nullopt when baseline <= 0.
std::optional<double> delta_percent(double baseline, double best);

// Whole-percent display value: truncated toward zero.
double display_percent(double percent);

// Trailing-window mean after each episode, stamped with that episode's step.
std::vector<ScorePoint> trailing_curve(const ScoreSeries& series,
                                       size_t window = 100);

// Seed-averaged trailing curve sampled every `grid` steps up to total_steps.
// Each run contributes its latest trailing value at or before the grid step;
// grid steps before any run has finished an episode are omitted.
std::vector<ScorePoint> averaged_curve(std::span<const ScoreSeries> runs,
                                       int64_t total_steps, int64_t grid,
                                       size_t window = 100);

// 100 * (first step where method >= q * max(baseline)) / total_steps, over
// curves of (step, value). nullopt when never reached or when the baseline
// best is not positive.
std::optional<double> acceleration(std::span<const ScorePoint> method,
                                   std::span<const ScorePoint> baseline,
                                   double q, int64_t total_steps);

// Sentence BLEU-2 of `hypothesis` against `references` (token lists) with
// uniform weights over the orders the hypothesis is long enough to have,
// zero clipped counts replaced by 1e-9, and the brevity penalty against the
// closest reference length (shorter on ties).
double sentence_bleu2(std::span<const std::string> hypothesis,
                      std::span<const std::vector<std::string>> references);

// Mean over source actions of sentence_bleu2 against every target action.
// Throws Error if either set is empty.
double bleu2_action_similarity(std::span<const std::string> source,
                               std::span<const std::string> target);

// CSV schemas. Values are written with round-trip precision.
struct ScoreRow {
  std::string game;
  std::string method;
  double mean = 0.0;
  double se = 0.0;
  double max_score = 0.0;
  double norm = 0.0;  // 100 * mean / max_score
  bool operator==(const ScoreRow&) const = default;
};
struct CurveRow {
  std::string method;
  int64_t env_step = 0;
  double trailing_mean = 0.0;
  bool operator==(const CurveRow&) const = default;
};
struct TransferRow {
  std::string source;
  std::string target;
  double similarity = 0.0;  // A-approx
  double mean = 0.0;
  double se = 0.0;
  double max_score = 0.0;
  bool operator==(const TransferRow&) const = default;
};

void write_scores_csv(const std::filesystem::path& path,
                      std::span<const ScoreRow> rows);
void write_curves_csv(const std::filesystem::path& path,
                      std::span<const CurveRow> rows);
void write_transfer_csv(const std::filesystem::path& path,
                        std::span<const TransferRow> rows);
std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path);
std::vector<CurveRow> read_curves_csv(const std::filesystem::path& path);
std::vector<TransferRow> read_transfer_csv(const std::filesystem::path& path);

// Run score log: header "episode,env_step,score", one row per episode.
void write_score_log(const std::filesystem::path& path,
                     std::span<const ScorePoint> series);
ScoreSeries read_score_log(const std::filesystem::path& path);

}  // namespace lmloop::metrics

#endif  // LMLOOP_METRICS_METRICS_H_
