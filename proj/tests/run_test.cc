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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lmloop/error.h"
#include "lmloop/game/engine.h"
#include "lmloop/game/spec.h"
#include "lmloop/nn/checkpoint.h"
#include "lmloop/run/config.h"
#include "lmloop/run/corpus.h"
#include "lmloop/run/orchestrator.h"

namespace lmloop::run {
namespace {

namespace fs = std::filesystem;

std::vector<ScriptedGame> scripted_suite() {
  std::vector<ScriptedGame> out;
  for (auto& spec : game::load_suite(LMLOOP_GAMES_DIR)) {
    auto w = game::load_walkthrough(walkthrough_path(LMLOOP_GAMES_DIR, spec.game_id));
    out.push_back({std::move(spec), std::move(w)});
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("lmloop_run_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Small knobs so every run here takes a fraction of a second.
RunConfig small_config() {
  RunConfig c;
  c.games_dir = LMLOOP_GAMES_DIR;
  c.game = "cellar";
  c.seed = 3;
  c.lm.hidden = 24;
  c.lm.max_len = 48;
  c.lm.n_candidates = 4;
  c.q.embedding = 12;
  c.q.hidden = 12;
  c.q.max_obs_tokens = 32;
  c.total_env_steps = 400;
  c.n_envs = 8;
  c.k = 200;
  c.lm_grad_steps = 2;
  c.lm_batch_size = 4;
  c.rl_batch_size = 8;
  c.curation.d_lm = 16;
  c.adapt_epochs = 1;
  c.checkpoint_each_phase = false;
  return c;
}

// One adapted LM shared by the run tests.
class RunTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(scratch_dir("shared"));
    auto corpus = gen_corpus(scripted_suite(), 1, 0.3, 1);
    write_corpus(*root_ / "corpus.tsv", corpus);
    RunConfig c = small_config();
    c.corpus = *root_ / "corpus.tsv";
    run_adaptation(c, *root_ / "adapt");
  }
  static void TearDownTestSuite() {
    fs::remove_all(*root_);
    delete root_;
  }

  static RunConfig config() {
    RunConfig c = small_config();
    c.lm_checkpoint = *root_ / "adapt" / kAdaptedLmFile;
    return c;
  }
  static fs::path dir(const std::string& name) {
    auto d = *root_ / name;
    fs::remove_all(d);
    return d;
  }

  static fs::path* root_;
};
fs::path* RunTest::root_ = nullptr;

TEST(GenCorpusTest, NoiseFreeCorpusReplaysWalkthroughs) {
  const auto games = scripted_suite();
  const auto corpus = gen_corpus(games, 2, 0.0, 9);
  size_t i = 0;
  for (const auto& g : games) {
    for (int e = 0; e < 2; ++e) {
      for (const auto& a : g.walkthrough) {
        ASSERT_LT(i, corpus.size());
        EXPECT_EQ(corpus[i].target_action, a);
        ++i;
      }
    }
  }
  EXPECT_EQ(i, corpus.size());
}

TEST(GenCorpusTest, SizeIsWalkthroughLengthTimesEpisodes) {
  const auto games = scripted_suite();
  size_t total = 0;
  for (const auto& g : games) total += g.walkthrough.size();
  for (double noise : {0.0, 0.3, 1.0}) {
    EXPECT_EQ(gen_corpus(games, 3, noise, 4).size(), 3 * total) << noise;
  }
}

TEST(GenCorpusTest, FullNoiseEmitsOnlyAdmissibleActions) {
  const auto games = scripted_suite();
  const auto& g = games.front();
  const auto corpus = gen_corpus({g}, 2, 1.0, 5);
  auto [state, obs] = game::reset(g.spec, 0);
  for (const auto& s : corpus) {
    if (s.prev_action.empty()) std::tie(state, obs) = game::reset(g.spec, 0);
    EXPECT_EQ(s.observation, obs);
    EXPECT_TRUE(game::admissible_actions(g.spec, state).count(s.target_action))
        << s.target_action;
    auto [next, result] = game::step(g.spec, state, s.target_action);
    state = next;
    obs = result.observation;
  }
}

TEST(GenCorpusTest, DeterministicPerSeed) {
  const auto games = scripted_suite();
  const auto a = gen_corpus(games, 2, 0.5, 11);
  const auto b = gen_corpus(games, 2, 0.5, 11);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].target_action, b[i].target_action);
}

TEST(GenCorpusTest, RejectsNoiseOutsideUnitInterval) {
  EXPECT_THROW(gen_corpus(scripted_suite(), 1, 1.5, 0), Error);
  EXPECT_THROW(gen_corpus(scripted_suite(), 1, -0.1, 0), Error);
}

TEST(RunConfigTest, JsonRoundTrip) {
  RunConfig c = small_config();
  c.mode = RunMode::kTransfer;
  c.source_run = "/tmp/src";
  c.curation.strategy = curation::Strategy::kRT;
  c.curation.beta = 0.25;
  c.corpus_fraction = 0.1;
  const RunConfig back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.source_run, c.source_run);
  EXPECT_EQ(back.curation.beta, 0.25);
}

TEST(RunConfigTest, RejectsUnknownKey) {
  EXPECT_THROW(config_from_json(R"({"gamma": 0.9, "gama": 0.9})"), Error);
}

TEST(RunConfigTest, TotalStepsMustDivideIntoRounds) {
  RunConfig c = small_config();
  c.total_env_steps = 401;
  EXPECT_THROW(c.validate(), ValidationError);
  c.total_env_steps = 400;
  c.k = 80;
  EXPECT_NO_THROW(c.validate());
  c.k = 500;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(RunConfigTest, TransferNeedsSourceRun) {
  RunConfig c = small_config();
  c.mode = RunMode::kTransfer;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(RunConfigTest, OverridesParseJsonOrFallBackToString) {
  const RunConfig c =
      with_overrides(small_config(), {"gamma=0.5", "game=manor", "n_envs=4"});
  EXPECT_EQ(c.gamma, 0.5);
  EXPECT_EQ(c.game, "manor");
  EXPECT_EQ(c.n_envs, 4);
  EXPECT_THROW(with_overrides(small_config(), {"nokey=1"}), Error);
}

TEST(RunConfigTest, MethodLabels) {
  RunConfig c = small_config();
  EXPECT_EQ(method_label(c), "oc");
  c.curation.scheme = curation::WeightScheme::kExpAdvantage;
  EXPECT_EQ(method_label(c), "oc_ea");
  c.curation.strategy = curation::Strategy::kUT;
  c.curation.scheme = curation::WeightScheme::kLinearAdvantage;
  EXPECT_EQ(method_label(c), "ut_la");
  c.mode = RunMode::kFrozenLm;
  EXPECT_EQ(method_label(c), "frozen");
  c.corpus_fraction = 0.1;
  EXPECT_EQ(method_label(c), "frozen@10");
}

TEST(AdaptationTest, MissingCorpusThrows) {
  RunConfig c = small_config();
  c.corpus = "/nonexistent/corpus.tsv";
  EXPECT_THROW(run_adaptation(c, scratch_dir("missing_corpus")), Error);
}

TEST_F(RunTest, AdaptationWritesArtifacts) {
  const fs::path d = *root_ / "adapt";
  EXPECT_TRUE(nn::checkpoint_exists(d / kAdaptedLmFile));
  EXPECT_TRUE(fs::exists(d / kAdaptationReportFile));
  EXPECT_TRUE(fs::exists(d / kManifestFile));
  EXPECT_TRUE(fs::exists(d / kConfigFile));
}

TEST_F(RunTest, FrozenModeLeavesLmUntouched) {
  RunConfig c = config();
  c.mode = RunMode::kFrozenLm;
  const auto d = dir("frozen");
  const auto art = run(c, d);
  EXPECT_EQ(art.finetune_phases, 0);
  EXPECT_EQ(slurp(fs::path(d / kFinalLmFile) += ".bin"),
            slurp(fs::path(*root_ / "adapt" / kAdaptedLmFile) += ".bin"));
}

TEST_F(RunTest, PhaseCountFollowsPeriod) {
  RunConfig c = config();
  c.total_env_steps = 5000;
  c.k = 1000;
  const auto art = run(c, dir("phases"));
  EXPECT_EQ(art.env_steps, 5000);
  EXPECT_EQ(art.finetune_phases, 5);
}

TEST_F(RunTest, FullModeChangesLm) {
  const auto d = dir("full");
  const auto art = run(config(), d);
  EXPECT_EQ(art.finetune_phases, 2);
  EXPECT_NE(slurp(fs::path(d / kFinalLmFile) += ".bin"),
            slurp(fs::path(*root_ / "adapt" / kAdaptedLmFile) += ".bin"));
  EXPECT_EQ(metrics::read_score_log(d / kScoreLogFile).size(), art.scores.size());
}

TEST_F(RunTest, NoEnvStepDuringFinetune) {
  const auto d = dir("events");
  run(config(), d);
  std::ifstream in(d / kEventLogFile);
  std::string line;
  bool in_phase = false;
  int begins = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string seq, phase;
    std::getline(fields, seq, '\t');
    std::getline(fields, phase, '\t');
    if (phase == "finetune_begin") {
      EXPECT_FALSE(in_phase);
      in_phase = true;
      ++begins;
    } else if (phase == "finetune_end") {
      EXPECT_TRUE(in_phase);
      in_phase = false;
    } else if (phase == "step") {
      EXPECT_FALSE(in_phase) << line;
    }
  }
  EXPECT_FALSE(in_phase);
  EXPECT_EQ(begins, 2);
}

TEST_F(RunTest, RepeatedRunIsIdentical) {
  RunConfig c = config();
  c.n_envs = 1;
  c.total_env_steps = 300;
  c.k = 150;
  const auto a = dir("repeat_a");
  const auto b = dir("repeat_b");
  run(c, a);
  run(c, b);
  EXPECT_EQ(slurp(a / kScoreLogFile), slurp(b / kScoreLogFile));
  EXPECT_EQ(slurp(fs::path(a / kFinalLmFile) += ".bin"),
            slurp(fs::path(b / kFinalLmFile) += ".bin"));
}

TEST_F(RunTest, SameTargetTransferEqualsResumedRun) {
  RunConfig c = config();
  c.n_envs = 1;
  c.total_env_steps = 300;
  c.k = 150;
  const auto src = dir("transfer_src");
  run(c, src);

  RunConfig t = c;
  t.mode = RunMode::kTransfer;
  t.source_run = src;
  const auto td = dir("transfer");
  run(t, td);
  EXPECT_TRUE(fs::exists(td / kTransferFile));

  RunConfig r = c;
  r.lm_checkpoint = src / kFinalLmFile;
  const auto rd = dir("resumed");
  run(r, rd);
  EXPECT_EQ(slurp(td / kScoreLogFile), slurp(rd / kScoreLogFile));
  EXPECT_EQ(slurp(fs::path(td / kFinalLmFile) += ".bin"),
            slurp(fs::path(rd / kFinalLmFile) += ".bin"));
}

TEST_F(RunTest, TransferWithoutSourceCheckpointThrows) {
  RunConfig c = config();
  c.mode = RunMode::kTransfer;
  c.source_run = dir("empty_source");
  fs::create_directories(c.source_run);
  EXPECT_THROW(run(c, dir("transfer_missing")), Error);
}

TEST_F(RunTest, MissingLmCheckpointThrows) {
  RunConfig c = config();
  c.lm_checkpoint = *root_ / "nope";
  EXPECT_THROW(run(c, dir("missing_lm")), Error);
}

TEST_F(RunTest, LmPolicyRunsWithoutFinetuneWhenFrozen) {
  RunConfig c = config();
  c.mode = RunMode::kLmPolicyFrozen;
  const auto art = run(c, dir("policy_frozen"));
  EXPECT_EQ(art.finetune_phases, 0);
  c.mode = RunMode::kLmPolicyInLoop;
  const auto art2 = run(c, dir("policy_inloop"));
  EXPECT_EQ(art2.finetune_phases, 2);
}

TEST_F(RunTest, ManifestListsScoreLog) {
  const auto d = dir("manifest");
  run(config(), d);
  const std::string m = slurp(d / kManifestFile);
  EXPECT_NE(m.find("lmloop-run 1"), std::string::npos);
  EXPECT_NE(m.find(kScoreLogFile), std::string::npos);
}

}  // namespace
}  // namespace lmloop::run
