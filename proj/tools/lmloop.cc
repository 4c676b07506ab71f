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

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "lmloop/error.h"
#include "lmloop/metrics/metrics.h"
#include "lmloop/run/config.h"
#include "lmloop/run/corpus.h"
#include "lmloop/run/orchestrator.h"

namespace fs = std::filesystem;
using namespace lmloop;

namespace {

run::RunConfig read_config(const fs::path& path, const std::vector<std::string>& sets) {
  return run::with_overrides(path.empty() ? run::RunConfig{} : run::load_config(path), sets);
}

struct RunRecord {
  run::RunConfig config;
  metrics::ScoreSeries scores;
};

// Every run directory (one holding scores.csv and config.json) under roots.
std::vector<RunRecord> collect_runs(const std::vector<fs::path>& roots) {
  std::vector<fs::path> dirs;
  for (const auto& root : roots) {
    if (fs::exists(root / run::kScoreLogFile)) dirs.push_back(root);
    if (!fs::is_directory(root)) continue;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file() && e.path().filename() == run::kScoreLogFile &&
          e.path().parent_path() != root) {
        dirs.push_back(e.path().parent_path());
      }
    }
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<RunRecord> out;
  for (const auto& d : dirs) {
    out.push_back({run::load_config(d / run::kConfigFile),
                   metrics::read_score_log(d / run::kScoreLogFile)});
  }
  return out;
}

// Scores and curves grouped by (game, method) over the given runs.
int report(const std::vector<fs::path>& roots, const fs::path& out_dir, int64_t grid) {
  const auto runs = collect_runs(roots);
  if (runs.empty()) throw Error("no runs found");
  std::map<std::pair<std::string, std::string>, std::vector<const RunRecord*>> groups;
  for (const auto& r : runs) groups[{r.config.game, run::method_label(r.config)}].push_back(&r);
  fs::create_directories(out_dir);
  std::vector<metrics::ScoreRow> rows;
  std::map<std::string, std::vector<metrics::CurveRow>> curves;
  std::map<std::string, std::vector<metrics::GameResult>> by_method;
  for (const auto& [key, members] : groups) {
    const auto& [game, method] = key;
    const run::Suite suite = run::load_suite_with_vocab(members.front()->config.games_dir);
    const double max_score = suite.get(game).max_score;
    std::vector<metrics::ScoreSeries> series;
    for (const auto* m : members) {
      if (!m->scores.empty()) series.push_back(m->scores);
    }
    if (series.empty()) {
      std::cerr << "skipping " << game << "/" << method << ": no finished episodes\n";
      continue;
    }
    const auto r = metrics::last100_avg(game, series, max_score);
    rows.push_back({game, method, r.mean, r.se, max_score, 100.0 * r.mean / max_score});
    by_method[method].push_back(r);
    const int64_t total = members.front()->config.total_env_steps;
    const int64_t step = grid > 0 ? grid : std::max<int64_t>(1, total / 50);
    for (const auto& p : metrics::averaged_curve(series, total, step)) {
      curves[game].push_back({method, p.env_step, p.score});
    }
  }
  metrics::write_scores_csv(out_dir / "scores.csv", rows);
  for (const auto& [game, c] : curves) {
    metrics::write_curves_csv(out_dir / ("curves_" + game + ".csv"), c);
  }
  for (const auto& [method, results] : by_method) {
    std::cout << method << " norm " << metrics::norm_score(results) << "% over "
              << results.size() << " games\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lmloop: language-model-in-the-loop agents for text games"};
  app.require_subcommand(1);

  fs::path games_dir = "games";
  std::vector<std::string> games;
  int episodes = 10;
  double noise = 0.3;
  uint64_t seed = 0;
  fs::path out;
  auto* gen = app.add_subcommand("gen-corpus", "write a scripted-gameplay corpus");
  gen->add_option("--games-dir", games_dir, "directory of .game files")->check(CLI::ExistingDirectory);
  gen->add_option("--games", games, "games to include (default: all)")->delimiter(',');
  std::vector<std::string> exclude;
  gen->add_option("--exclude", exclude, "games to leave out")->delimiter(',');
  gen->add_option("--episodes", episodes, "replays per walkthrough")->check(CLI::PositiveNumber);
  gen->add_option("--noise", noise, "probability of a random admissible action")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--seed", seed, "seed");
  gen->add_option("--out", out, "corpus file")->required();

  fs::path config_path;
  std::vector<std::string> sets;
  auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "override a config key: key=value");
    sub->add_option("--out", out, "output directory")->required();
  };
  auto* adapt = app.add_subcommand("adapt", "adapt a fresh LM on a corpus");
  add_run_options(adapt);
  auto* train = app.add_subcommand("train", "DRRN training with the LM in the loop (or frozen)");
  add_run_options(train);
  auto* policy = app.add_subcommand("lm-policy", "play the LM's greedy action");
  add_run_options(policy);
  auto* transfer = app.add_subcommand("transfer", "continue a run's LM on another game");
  add_run_options(transfer);

  std::vector<fs::path> run_dirs;
  std::string game;
  std::string method;
  auto* met = app.add_subcommand("metrics", "last-100 score of a set of runs");
  met->add_option("runs", run_dirs, "run directories")->required()->check(CLI::ExistingDirectory);
  met->add_option("--out", out, "scores CSV (default: print only)");

  int64_t grid = 0;
  auto* rep = app.add_subcommand("report", "score table and curves over run trees");
  rep->add_option("roots", run_dirs, "directories to search for runs")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--out", out, "output directory")->required();
  rep->add_option("--grid", grid, "curve sampling interval in env steps (default total/50)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      std::vector<run::ScriptedGame> scripted;
      for (const auto& spec : game::load_suite(games_dir)) {
        const bool chosen = games.empty() || std::count(games.begin(), games.end(), spec.game_id);
        const bool dropped = std::count(exclude.begin(), exclude.end(), spec.game_id) > 0;
        if (!chosen || dropped) continue;
        scripted.push_back({spec, game::load_walkthrough(run::walkthrough_path(games_dir, spec.game_id))});
      }
      if (scripted.empty()) throw Error("no games selected");
      const auto corpus = run::gen_corpus(scripted, episodes, noise, seed);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      text::write_corpus(out, corpus);
      std::cout << corpus.size() << " samples from " << scripted.size() << " games\n";
    } else if (*adapt) {
      const auto c = read_config(config_path, sets);
      const auto r = run::run_adaptation(c, out);
      const auto& last = r.epochs.back();
      std::cout << "adapted on " << r.samples_used << " samples: train loss "
                << last.train_loss << ", val loss " << last.val_loss << "\n";
    } else if (*train || *policy || *transfer) {
      auto c = read_config(config_path, sets);
      if (*train && c.mode != run::RunMode::kFull && c.mode != run::RunMode::kFrozenLm) {
        throw Error("train expects mode full or frozen_lm");
      }
      if (*policy && c.mode != run::RunMode::kLmPolicyFrozen &&
          c.mode != run::RunMode::kLmPolicyInLoop) {
        throw Error("lm-policy expects mode lm_policy_frozen or lm_policy_inloop");
      }
      if (*transfer) c.mode = run::RunMode::kTransfer;
      const auto a = run::run(c, out);
      std::cout << a.scores.size() << " episodes, " << a.finetune_phases
                << " fine-tune phases\n";
    } else if (*met) {
      const auto runs = collect_runs(run_dirs);
      if (runs.empty()) throw Error("no runs found");
      const auto& first = runs.front().config;
      const run::Suite suite = run::load_suite_with_vocab(first.games_dir);
      const double max_score = suite.get(first.game).max_score;
      std::vector<metrics::ScoreSeries> series;
      for (const auto& r : runs) {
        if (r.config.game != first.game) throw Error("metrics: runs mix games");
        series.push_back(r.scores);
      }
      const auto r = metrics::last100_avg(first.game, series, max_score);
      std::cout << first.game << " " << run::method_label(first) << " mean " << r.mean
                << " se " << r.se << " over " << r.runs << " runs\n";
      if (!out.empty()) {
        const std::vector<metrics::ScoreRow> rows = {{first.game, run::method_label(first), r.mean,
                                                      r.se, max_score, 100.0 * r.mean / max_score}};
        metrics::write_scores_csv(out, rows);
      }
    } else if (*rep) {
      return report(run_dirs, out, grid);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
