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

#include "lmloop/metrics/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "lmloop/error.h"
#include "lmloop/text/codec.h"

namespace lmloop::metrics {
namespace {

constexpr double kSmoothing = 1e-9;

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double to_double(const std::string& s, const std::string& file, int line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError(file, line, "bad number '" + s + "'");
  }
  return v;
}

int64_t to_int(const std::string& s, const std::string& file, int line) {
  int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError(file, line, "bad integer '" + s + "'");
  }
  return v;
}

void check_name(const std::string& s) {
  if (s.find_first_of(",\n\r\"") != std::string::npos) {
    throw Error("CSV name field contains a separator: " + s);
  }
}

// Reads a CSV with the exact expected header; returns rows of fields.
std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path, const std::string& header,
    std::vector<int>* lines) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  const std::string file = path.string();
  const size_t width = std::count(header.begin(), header.end(), ',') + 1;
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw ParseError(file, 1, "expected header '" + header + "'");
  }
  std::vector<std::vector<std::string>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != width) throw ParseError(file, lineno, "wrong field count");
    rows.push_back(std::move(f));
    lines->push_back(lineno);
  }
  return rows;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

using Ngram = std::vector<std::string>;

std::map<Ngram, int> ngram_counts(std::span<const std::string> tokens,
                                  size_t n) {
  std::map<Ngram, int> counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return counts;
}

}  // namespace

GameResult last100_avg(const std::string& game,
                       std::span<const ScoreSeries> runs, double max_score,
                       size_t window) {
  if (runs.empty()) throw Error("last100_avg: no runs");
  std::vector<double> means;
  for (const auto& run : runs) {
    if (run.empty()) throw Error("last100_avg: empty score series");
    const size_t n = std::min(window, run.size());
    double sum = 0.0;
    for (size_t i = run.size() - n; i < run.size(); ++i) sum += run[i].score;
    means.push_back(sum / static_cast<double>(n));
  }
  GameResult r;
  r.game = game;
  r.max_score = max_score;
  r.runs = static_cast<int>(means.size());
  double sum = 0.0;
  for (double m : means) sum += m;
  r.mean = sum / static_cast<double>(means.size());
  if (means.size() > 1) {
    double ss = 0.0;
    for (double m : means) ss += (m - r.mean) * (m - r.mean);
    const double sd = std::sqrt(ss / static_cast<double>(means.size() - 1));
    r.se = sd / std::sqrt(static_cast<double>(means.size()));
  }
  return r;
}

double norm_score(std::span<const GameResult> results) {
  if (results.empty()) throw Error("norm_score: no games");
  double sum = 0.0;
  for (const auto& r : results) {
    if (!(r.max_score > 0.0)) {
      throw Error("norm_score: max_score must be positive for " + r.game);
    }
    sum += 100.0 * r.mean / r.max_score;
  }
  return sum / static_cast<double>(results.size());
}

std::optional<double> delta_percent(double baseline, double best) {
  if (!(baseline > 0.0)) return std::nullopt;
  return 100.0 * (best - baseline) / baseline;
}

double display_percent(double percent) {
  // Snap first so quotients that are whole in exact arithmetic stay whole.
  return std::trunc(std::round(percent * 1e6) / 1e6);
}

std::vector<ScorePoint> trailing_curve(const ScoreSeries& series,
                                       size_t window) {
  std::vector<ScorePoint> out;
  out.reserve(series.size());
  double sum = 0.0;
  for (size_t i = 0; i < series.size(); ++i) {
    sum += series[i].score;
    if (i >= window) sum -= series[i - window].score;
    const size_t n = std::min(window, i + 1);
    out.push_back({series[i].env_step, sum / static_cast<double>(n)});
  }
  return out;
}

std::vector<ScorePoint> averaged_curve(std::span<const ScoreSeries> runs,
                                       int64_t total_steps, int64_t grid,
                                       size_t window) {
  if (grid <= 0) throw Error("averaged_curve: grid must be positive");
  std::vector<std::vector<ScorePoint>> curves;
  for (const auto& r : runs) curves.push_back(trailing_curve(r, window));
  std::vector<size_t> cursor(curves.size(), 0);
  std::vector<ScorePoint> out;
  for (int64_t step = grid; step <= total_steps; step += grid) {
    double sum = 0.0;
    int n = 0;
    for (size_t k = 0; k < curves.size(); ++k) {
      while (cursor[k] < curves[k].size() &&
             curves[k][cursor[k]].env_step <= step) {
        ++cursor[k];
      }
      if (cursor[k] > 0) {
        sum += curves[k][cursor[k] - 1].score;
        ++n;
      }
    }
    if (n > 0) out.push_back({step, sum / n});
  }
  return out;
}

std::optional<double> acceleration(std::span<const ScorePoint> method,
                                   std::span<const ScorePoint> baseline,
                                   double q, int64_t total_steps) {
  if (!(q > 0.0 && q <= 1.0)) throw Error("acceleration: q outside (0, 1]");
  if (total_steps <= 0) throw Error("acceleration: total_steps must be > 0");
  if (baseline.empty()) return std::nullopt;
  double best = baseline.front().score;
  for (const auto& p : baseline) best = std::max(best, p.score);
  if (!(best > 0.0)) return std::nullopt;
  const double goal = q * best;
  for (const auto& p : method) {
    if (p.score >= goal) {
      return 100.0 * static_cast<double>(p.env_step) /
             static_cast<double>(total_steps);
    }
  }
  return std::nullopt;
}

double sentence_bleu2(std::span<const std::string> hypothesis,
                      std::span<const std::vector<std::string>> references) {
  if (hypothesis.empty()) return 0.0;
  if (references.empty()) throw Error("sentence_bleu2: no references");
  double log_sum = 0.0;
  int orders = 0;
  for (size_t n = 1; n <= 2; ++n) {
    if (hypothesis.size() < n) break;
    const auto hyp = ngram_counts(hypothesis, n);
    std::map<Ngram, int> max_ref;
    for (const auto& ref : references) {
      for (const auto& [g, c] : ngram_counts(ref, n)) {
        int& m = max_ref[g];
        m = std::max(m, c);
      }
    }
    double clipped = 0.0;
    for (const auto& [g, c] : hyp) {
      const auto it = max_ref.find(g);
      if (it != max_ref.end()) clipped += std::min(c, it->second);
    }
    const double total = static_cast<double>(hypothesis.size() - n + 1);
    if (clipped == 0.0) clipped = kSmoothing;
    log_sum += std::log(clipped / total);
    ++orders;
  }
  const double c = static_cast<double>(hypothesis.size());
  size_t closest = references.front().size();
  for (const auto& ref : references) {
    const double d = std::abs(static_cast<double>(ref.size()) - c);
    const double best = std::abs(static_cast<double>(closest) - c);
    if (d < best || (d == best && ref.size() < closest)) closest = ref.size();
  }
  const double r = static_cast<double>(closest);
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / orders);
}

double bleu2_action_similarity(std::span<const std::string> source,
                               std::span<const std::string> target) {
  if (source.empty() || target.empty()) {
    throw Error("bleu2_action_similarity: empty action set");
  }
  std::vector<std::vector<std::string>> refs;
  refs.reserve(target.size());
  for (const auto& t : target) refs.push_back(text::split_words(t));
  double sum = 0.0;
  for (const auto& s : source) {
    sum += sentence_bleu2(text::split_words(s), refs);
  }
  return sum / static_cast<double>(source.size());
}

void write_scores_csv(const std::filesystem::path& path,
                      std::span<const ScoreRow> rows) {
  auto out = open_out(path);
  out << "game,method,mean,se,max_score,norm\n";
  for (const auto& r : rows) {
    check_name(r.game);
    check_name(r.method);
    out << r.game << ',' << r.method << ',' << fmt(r.mean) << ','
        << fmt(r.se) << ',' << fmt(r.max_score) << ',' << fmt(r.norm) << '\n';
  }
}

void write_curves_csv(const std::filesystem::path& path,
                      std::span<const CurveRow> rows) {
  auto out = open_out(path);
  out << "method,env_step,trailing_mean\n";
  for (const auto& r : rows) {
    check_name(r.method);
    out << r.method << ',' << r.env_step << ',' << fmt(r.trailing_mean)
        << '\n';
  }
}

void write_transfer_csv(const std::filesystem::path& path,
                        std::span<const TransferRow> rows) {
  auto out = open_out(path);
  out << "source,target,similarity,mean,se,max_score\n";
  for (const auto& r : rows) {
    check_name(r.source);
    check_name(r.target);
    out << r.source << ',' << r.target << ',' << fmt(r.similarity) << ','
        << fmt(r.mean) << ',' << fmt(r.se) << ',' << fmt(r.max_score) << '\n';
  }
}

std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path) {
  std::vector<int> lines;
  const auto rows = read_csv(path, "game,method,mean,se,max_score,norm", &lines);
  const std::string f = path.string();
  std::vector<ScoreRow> out;
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& c = rows[i];
    out.push_back({c[0], c[1], to_double(c[2], f, lines[i]),
                   to_double(c[3], f, lines[i]), to_double(c[4], f, lines[i]),
                   to_double(c[5], f, lines[i])});
  }
  return out;
}

std::vector<CurveRow> read_curves_csv(const std::filesystem::path& path) {
  std::vector<int> lines;
  const auto rows = read_csv(path, "method,env_step,trailing_mean", &lines);
  const std::string f = path.string();
  std::vector<CurveRow> out;
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& c = rows[i];
    out.push_back({c[0], to_int(c[1], f, lines[i]), to_double(c[2], f, lines[i])});
  }
  return out;
}

std::vector<TransferRow> read_transfer_csv(const std::filesystem::path& path) {
  std::vector<int> lines;
  const auto rows =
      read_csv(path, "source,target,similarity,mean,se,max_score", &lines);
  const std::string f = path.string();
  std::vector<TransferRow> out;
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& c = rows[i];
    out.push_back({c[0], c[1], to_double(c[2], f, lines[i]),
                   to_double(c[3], f, lines[i]), to_double(c[4], f, lines[i]),
                   to_double(c[5], f, lines[i])});
  }
  return out;
}

void write_score_log(const std::filesystem::path& path,
                     std::span<const ScorePoint> series) {
  auto out = open_out(path);
  out << "episode,env_step,score\n";
  for (size_t i = 0; i < series.size(); ++i) {
    out << i << ',' << series[i].env_step << ',' << fmt(series[i].score)
        << '\n';
  }
}

ScoreSeries read_score_log(const std::filesystem::path& path) {
  std::vector<int> lines;
  const auto rows = read_csv(path, "episode,env_step,score", &lines);
  const std::string f = path.string();
  ScoreSeries out;
  for (size_t i = 0; i < rows.size(); ++i) {
    out.push_back({to_int(rows[i][1], f, lines[i]),
                   to_double(rows[i][2], f, lines[i])});
    if (i > 0 && out[i].env_step < out[i - 1].env_step) {
      throw ParseError(f, lines[i], "env_step decreases");
    }
  }
  return out;
}

}  // namespace lmloop::metrics
