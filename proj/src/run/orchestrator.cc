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

#include "lmloop/run/orchestrator.h"

#include <fstream>
#include <optional>
#include <set>

#include "json.hpp"
#include "lmloop/curation/curation.h"
#include "lmloop/drrn/drrn.h"
#include "lmloop/error.h"
#include "lmloop/game/engine.h"
#include "lmloop/nn/checkpoint.h"
#include "lmloop/rng.h"

namespace lmloop::run {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Append-only, phase-stamped log. Every line is
// "<seq>\t<phase>\t<env_step>\t<detail>"; steps never appear between a
// finetune_begin and its finetune_end.
class EventLog {
 public:
  explicit EventLog(const fs::path& path) : out_(path) {
    if (!out_) throw Error("cannot write " + path.string());
  }
  void add(std::string_view phase, int64_t env_step, std::string_view detail = "") {
    out_ << seq_++ << '\t' << phase << '\t' << env_step << '\t' << detail << '\n';
  }

 private:
  std::ofstream out_;
  int64_t seq_ = 0;
};

void write_manifest(const fs::path& dir, const RunConfig& config,
                    const json& extra) {
  json m = extra;
  m["format"] = "lmloop-run 1";
  m["mode"] = std::string(run_mode_name(config.mode));
  m["game"] = config.game;
  m["seed"] = config.seed;
  json files = json::array();
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() != kManifestFile) {
      files.push_back(fs::relative(entry.path(), dir).generic_string());
    }
  }
  std::vector<std::string> sorted = files.get<std::vector<std::string>>();
  std::sort(sorted.begin(), sorted.end());
  m["files"] = sorted;
  std::ofstream(dir / kManifestFile) << m.dump(2) << '\n';
}

void prepare_dir(const fs::path& dir, const RunConfig& config) {
  fs::create_directories(dir);
  save_config(dir / kConfigFile, config);
}

struct Slot {
  std::unique_ptr<game::Environment> env;
  std::string prev_observation;
  std::string prev_action;
  int64_t episode = 0;
  int step = 0;
  std::optional<drrn::Transition> waiting;  // needs the next candidate set
  std::vector<curation::TransitionRecord> episode_records;
};

// Shared machinery of the DRRN and LM-as-policy loops.
class Runner {
 public:
  Runner(const RunConfig& config, const fs::path& run_dir, bool use_drrn,
         bool finetune, const fs::path& lm_init)
      : config_(config),
        dir_(run_dir),
        suite_(load_suite_with_vocab(config.games_dir)),
        spec_(std::make_shared<const game::GameSpec>(suite_.get(config.game))),
        lm_(suite_.vocab, config.lm, derive_seed(config.seed, hash_string("lm_init"))),
        use_drrn_(use_drrn),
        finetune_(finetune),
        buffers_(curation_config()),
        replay_(config.replay_capacity, config.priority_fraction),
        select_rng_(derive_seed(config.seed, hash_string("select"))),
        replay_rng_(derive_seed(config.seed, hash_string("replay"))),
        events_((prepare(run_dir, config), run_dir / kEventLogFile)) {
    if (lm_init.empty()) throw Error("run needs an adapted LM checkpoint (lm_checkpoint)");
    if (!nn::checkpoint_exists(lm_init)) throw Error("missing checkpoint: " + lm_init.string());
    lm_.load(lm_init);
    if (use_drrn_) {
      q_.emplace(suite_.vocab, config.q, derive_seed(config.seed, hash_string("q_init")));
    }
    slots_.resize(config.n_envs);
    for (auto& s : slots_) {
      s.env = std::make_unique<game::Environment>(spec_);
      s.env->reset(config.seed);
      s.episode = next_episode_++;
    }
  }

  RunArtifacts execute() {
    events_.add("start", 0, std::string(run_mode_name(config_.mode)));
    try {
      const int64_t rounds = config_.total_env_steps / config_.n_envs;
      for (int64_t r = 0; r < rounds; ++r) {
        events_.add("step", env_steps_, "round " + std::to_string(r));
        for (auto& slot : slots_) step_slot(slot);
        if (use_drrn_) learn();
        if (finetune_ && phase_due()) finetune_phase();
      }
    } catch (const std::exception& e) {
      events_.add("abort", env_steps_, e.what());
      dump_state("abort_");
      throw;
    }
    lm_.save(dir_ / kFinalLmFile);
    if (q_) q_->save(dir_ / kFinalQFile);
    if (finetune_) buffers_.dump(dir_ / kBuffersFile);
    metrics::write_score_log(dir_ / kScoreLogFile, scores_);
    events_.add("end", env_steps_);
    RunArtifacts a{dir_, scores_, phases_, env_steps_};
    return a;
  }

  const Suite& suite() const { return suite_; }

 private:
  static void prepare(const fs::path& dir, const RunConfig& config) {
    prepare_dir(dir, config);
  }

  curation::CurationConfig curation_config() const {
    curation::CurationConfig c = config_.curation;
    // The LM-as-policy loop has no Q function to weight with.
    if (!use_drrn_) c.scheme = curation::WeightScheme::kUniform;
    return c;
  }

  text::ContextSample context(const Slot& s) const {
    return {s.prev_observation, s.prev_action, s.env->observation(), ""};
  }

  // Candidates the game recognizes; the raw set when none is, and "look"
  // when the LM produced nothing.
  std::vector<std::string> candidates(const Slot& s) {
    const lm::CandidateSet set = lm_.generate_candidates(
        context(s), config_.lm.n_candidates,
        derive_seed(config_.seed, hash_string("generate"), env_steps_), &cache_);
    std::vector<std::string> kept;
    for (const auto& c : set.items) {
      if (game::classify(*spec_, s.env->state(), c.action) !=
          game::ResponseClass::kUnrecognized) {
        kept.push_back(c.action);
      }
    }
    if (kept.empty()) kept = set.actions();
    if (kept.empty()) kept = {"look"};
    return kept;
  }

  void step_slot(Slot& s) {
    std::vector<std::string> offered;
    std::string action;
    std::optional<double> adv;
    if (use_drrn_) {
      offered = candidates(s);
      if (s.waiting) {
        s.waiting->next_candidates = offered;
        replay_.push(std::move(*s.waiting));
        s.waiting.reset();
      }
      const drrn::Selection sel = drrn::select_action(
          *q_, s.env->observation(), offered, drrn::SelectMode::kSoft, select_rng_);
      action = offered[sel.index];
      adv = sel.q[sel.index] - drrn::state_value(sel.q);
    } else {
      action = lm_.argmax_action(context(s), &cache_);
      if (action.empty()) action = "look";
      offered = {action};
    }
    const std::string observation = s.env->observation();
    const int location = s.env->state().location;
    const game::StepResult result = s.env->step(action);
    ++env_steps_;

    curation::TransitionRecord rec;
    rec.prev_observation = s.prev_observation;
    rec.prev_action = s.prev_action;
    rec.observation = observation;
    rec.action = action;
    rec.next_observation = result.observation;
    rec.reward = result.reward;
    rec.location = location;
    rec.next_location = result.location_id;
    rec.episode = s.episode;
    rec.step = s.step;
    rec.candidates = std::move(offered);
    rec.cached_advantage = adv;
    if (finetune_) {
      if (config_.curation.strategy == curation::Strategy::kRT) {
        s.episode_records.push_back(std::move(rec));
      } else {
        buffers_.insert(std::move(rec));
      }
    }

    if (use_drrn_) {
      drrn::Transition t{observation, action, static_cast<double>(result.reward),
                         result.observation, {}, result.done};
      if (result.done) {
        replay_.push(std::move(t));
      } else {
        s.waiting = std::move(t);
      }
    }

    if (result.done) {
      scores_.push_back({env_steps_, static_cast<double>(s.env->state().cumulative_score)});
      ++episodes_since_phase_;
      if (finetune_ && !s.episode_records.empty()) {
        buffers_.insert_episode(s.episode_records);
        s.episode_records.clear();
      }
      s.env->reset(config_.seed);
      s.prev_observation.clear();
      s.prev_action.clear();
      s.episode = next_episode_++;
      s.step = 0;
    } else {
      s.prev_observation = observation;
      s.prev_action = action;
      ++s.step;
    }
  }

  void learn() {
    if (replay_.size() < static_cast<size_t>(config_.rl_batch_size)) return;
    const auto batch = replay_.sample(config_.rl_batch_size, replay_rng_);
    drrn::TdOptions opts;
    opts.gamma = config_.gamma;
    opts.adam.lr = config_.rl_lr;
    opts.adam.clip_norm = config_.rl_clip_norm;
    drrn::td_update(*q_, batch, opts);
  }

  bool phase_due() const {
    if (config_.finetune_trigger == FinetuneTrigger::kEnvSteps) {
      return env_steps_ % config_.k == 0;
    }
    return episodes_since_phase_ >= config_.n_rl_episodes;
  }

  void finetune_phase() {
    ++phases_;
    episodes_since_phase_ = 0;
    events_.add("finetune_begin", env_steps_, "phase " + std::to_string(phases_));
    if (buffers_.positive_size() + buffers_.negative_size() == 0) {
      events_.add("finetune_skip", env_steps_, "empty buffers");
    } else {
      const uint64_t seed =
          derive_seed(config_.seed, hash_string("finetune"), static_cast<uint64_t>(phases_));
      const auto drawn = buffers_.sample(buffers_.config().d_lm, seed);
      const auto weights =
          curation::curation_weights(buffers_.config(), drawn, q_ ? &*q_ : nullptr);
      const auto samples = curation::to_context_samples(drawn, weights);
      lm_.params().reset_optimizer();
      const nn::WarmupSchedule schedule(config_.lm_lr, config_.lm_warmup,
                                        config_.lm_grad_steps);
      nn::AdamOptions opts;
      opts.eps = config_.lm_adam_eps;
      opts.weight_decay = config_.lm_weight_decay;
      opts.clip_norm = config_.lm_clip_norm;
      std::vector<size_t> order(samples.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng(derive_seed(seed, 1));
      size_t cursor = order.size();
      const size_t batch_size = std::min<size_t>(config_.lm_batch_size, samples.size());
      std::vector<lm::WeightedSample> batch;
      double last_loss = 0.0;
      for (int s = 0; s < config_.lm_grad_steps; ++s) {
        batch.clear();
        while (batch.size() < batch_size) {
          if (cursor == order.size()) {
            shuffle(order, rng);
            cursor = 0;
          }
          batch.push_back(samples[order[cursor++]]);
        }
        opts.lr = schedule.lr(s);
        last_loss = lm_.weighted_train_step(batch, opts);
      }
      cache_.clear();
      events_.add("finetune_loss", env_steps_, std::to_string(last_loss));
    }
    if (config_.checkpoint_each_phase) {
      const fs::path ck = dir_ / kCheckpointDir;
      fs::create_directories(ck);
      lm_.save(ck / ("lm_" + std::to_string(env_steps_)));
      if (q_) q_->save(ck / ("q_" + std::to_string(env_steps_)));
    }
    events_.add("finetune_end", env_steps_, "phase " + std::to_string(phases_));
  }

  void dump_state(const std::string& prefix) {
    try {
      lm_.save(dir_ / (prefix + "lm"));
      if (q_) q_->save(dir_ / (prefix + "q"));
      buffers_.dump(dir_ / (prefix + kBuffersFile));
      metrics::write_score_log(dir_ / (prefix + kScoreLogFile), scores_);
    } catch (const std::exception&) {
      // Best effort: the original failure is what gets reported.
    }
  }

  const RunConfig& config_;
  fs::path dir_;
  Suite suite_;
  std::shared_ptr<const game::GameSpec> spec_;
  lm::ActionLm lm_;
  lm::GenerationCache cache_;
  std::optional<drrn::QNetwork> q_;
  bool use_drrn_;
  bool finetune_;
  curation::CurationBuffers buffers_;
  drrn::PrioritizedReplay replay_;
  Rng select_rng_;
  Rng replay_rng_;
  EventLog events_;
  std::vector<Slot> slots_;
  metrics::ScoreSeries scores_;
  int64_t env_steps_ = 0;
  int64_t next_episode_ = 0;
  int64_t episodes_since_phase_ = 0;
  int phases_ = 0;
};

json summary(const RunArtifacts& a) {
  return {{"env_steps", a.env_steps},
          {"episodes", a.scores.size()},
          {"finetune_phases", a.finetune_phases}};
}

}  // namespace

const game::GameSpec& Suite::get(const std::string& game_id) const {
  for (const auto& s : specs) {
    if (s.game_id == game_id) return s;
  }
  throw Error("unknown game: " + game_id);
}

Suite load_suite_with_vocab(const fs::path& games_dir) {
  Suite s;
  s.specs = game::load_suite(games_dir);
  s.vocab = std::make_shared<const text::Vocabulary>(game::shared_vocabulary(s.specs));
  return s;
}

fs::path walkthrough_path(const fs::path& games_dir, const std::string& game_id) {
  return games_dir / (game_id + ".walkthrough");
}

std::vector<std::string> game_action_set(const game::GameSpec& spec,
                                         const std::vector<std::string>& walkthrough) {
  std::set<std::string> all;
  auto [state, obs] = game::reset(spec, 0);
  for (const auto& a : walkthrough) {
    for (const auto& x : game::admissible_actions(spec, state)) all.insert(x);
    if (state.done) break;
    state = game::step(spec, state, a).first;
  }
  return {all.begin(), all.end()};
}

lm::AdaptationReport run_adaptation(const RunConfig& config, const fs::path& out_dir) {
  if (config.corpus.empty() || !fs::exists(config.corpus)) {
    throw Error("missing corpus: " + config.corpus.string());
  }
  const auto corpus = text::read_corpus(config.corpus);
  const Suite suite = load_suite_with_vocab(config.games_dir);
  prepare_dir(out_dir, config);
  lm::ActionLm lm(suite.vocab, config.lm,
                  derive_seed(config.seed, hash_string("lm_init")));
  lm::AdaptOptions opts;
  opts.fraction = config.corpus_fraction;
  opts.epochs = config.adapt_epochs;
  opts.batch_size = config.adapt_batch_size;
  opts.lr = config.adapt_lr;
  opts.warmup = config.lm_warmup;
  opts.clip_norm = config.lm_clip_norm;
  opts.weight_decay = config.lm_weight_decay;
  opts.adam_eps = config.lm_adam_eps;
  opts.seed = derive_seed(config.seed, hash_string("adapt"));
  const lm::AdaptationReport report = lm::adapt_on_corpus(lm, corpus, opts);
  lm.save(out_dir / kAdaptedLmFile);
  report.write_csv(out_dir / kAdaptationReportFile);
  suite.vocab->save(out_dir / "vocab.txt");
  write_manifest(out_dir, config,
                 {{"samples_used", report.samples_used},
                  {"train_size", report.train_size},
                  {"val_size", report.val_size}});
  return report;
}

RunArtifacts run_training(const RunConfig& config, const fs::path& run_dir) {
  config.validate();
  const bool finetune = config.mode != RunMode::kFrozenLm;
  Runner runner(config, run_dir, true, finetune, config.lm_checkpoint);
  RunArtifacts a = runner.execute();
  write_manifest(run_dir, config, summary(a));
  return a;
}

RunArtifacts run_lm_policy(const RunConfig& config, const fs::path& run_dir) {
  config.validate();
  const bool finetune = config.mode == RunMode::kLmPolicyInLoop;
  Runner runner(config, run_dir, false, finetune, config.lm_checkpoint);
  RunArtifacts a = runner.execute();
  write_manifest(run_dir, config, summary(a));
  return a;
}

RunArtifacts run_transfer(const RunConfig& config, const fs::path& run_dir) {
  config.validate();
  const fs::path source_lm = config.source_run / kFinalLmFile;
  if (!nn::checkpoint_exists(source_lm)) throw Error("missing checkpoint: " + source_lm.string());
  const RunConfig source = load_config(config.source_run / kConfigFile);
  Runner runner(config, run_dir, true, true, source_lm);
  RunArtifacts a = runner.execute();

  const Suite& suite = runner.suite();
  const auto& src_spec = suite.get(source.game);
  const auto& dst_spec = suite.get(config.game);
  const auto src_actions = game_action_set(
      src_spec, game::load_walkthrough(walkthrough_path(config.games_dir, source.game)));
  const auto dst_actions = game_action_set(
      dst_spec, game::load_walkthrough(walkthrough_path(config.games_dir, config.game)));
  const double similarity = metrics::bleu2_action_similarity(src_actions, dst_actions);
  const std::vector<metrics::ScoreSeries> runs = {a.scores};
  metrics::TransferRow row{source.game, config.game, similarity, 0.0, 0.0,
                           static_cast<double>(dst_spec.max_score)};
  if (!a.scores.empty()) {
    const auto r = metrics::last100_avg(config.game, runs, dst_spec.max_score);
    row.mean = r.mean;
    row.se = r.se;
  }
  const std::vector<metrics::TransferRow> rows = {row};
  metrics::write_transfer_csv(run_dir / kTransferFile, rows);
  json extra = summary(a);
  extra["source_game"] = source.game;
  extra["similarity"] = similarity;
  write_manifest(run_dir, config, extra);
  return a;
}

RunArtifacts run(const RunConfig& config, const fs::path& run_dir) {
  switch (config.mode) {
    case RunMode::kFull:
    case RunMode::kFrozenLm:
      return run_training(config, run_dir);
    case RunMode::kLmPolicyFrozen:
    case RunMode::kLmPolicyInLoop:
      return run_lm_policy(config, run_dir);
    case RunMode::kTransfer:
      return run_transfer(config, run_dir);
  }
  throw Error("unknown run mode");
}

}  // namespace lmloop::run
