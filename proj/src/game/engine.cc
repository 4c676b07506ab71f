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

#include "lmloop/game/engine.h"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_set>

#include "lmloop/error.h"
#include "lmloop/text/codec.h"

namespace lmloop::game {

namespace {

struct ParsedAction {
  std::string verb;
  std::string noun;
};

bool nounless_verb(const GameSpec& spec, const std::string& verb) {
  if (verb == "look" || verb == "inventory") return true;
  if (verb == "go" || verb == "take" || verb == "drop") return false;
  for (const auto& t : spec.triggers) {
    if (t.verb == verb && t.noun.empty()) return true;
  }
  return false;
}

bool noun_verb(const GameSpec& spec, const std::string& verb) {
  if (verb == "look" || verb == "inventory") return false;
  if (verb == "go" || verb == "take" || verb == "drop") return true;
  bool used = false;
  for (const auto& t : spec.triggers) {
    if (t.verb != verb) continue;
    used = true;
    if (!t.noun.empty()) return true;
  }
  // Declared verbs no trigger uses accept a noun and do nothing.
  return !used;
}

std::optional<ParsedAction> parse_action(const GameSpec& spec,
                                         std::string_view action) {
  auto words = text::split_words(action);
  if (words.empty() || words.size() > 2) return std::nullopt;
  if (!spec.has_verb(words[0])) return std::nullopt;
  if (words.size() == 1) {
    if (!nounless_verb(spec, words[0])) return std::nullopt;
    return ParsedAction{words[0], ""};
  }
  if (!spec.has_noun(words[1]) || !noun_verb(spec, words[0])) {
    return std::nullopt;
  }
  return ParsedAction{words[0], words[1]};
}

bool exit_open(const Exit& e, const WorldState& s) {
  return e.after_trigger < 0 || s.fired[e.after_trigger];
}

const Exit* find_exit(const GameSpec& spec, const WorldState& s,
                      const std::string& dir) {
  for (const auto& e : spec.rooms[s.location].exits) {
    if (e.direction == dir && exit_open(e, s)) return &e;
  }
  return nullptr;
}

bool condition_holds(const Condition& c, const WorldState& s) {
  switch (c.kind) {
    case Condition::Kind::kAt:
      return s.location == c.arg;
    case Condition::Kind::kHas:
      return s.object_location[c.arg] == kInventory;
    case Condition::Kind::kHere:
      return s.object_location[c.arg] == s.location;
    case Condition::Kind::kLacks:
      return s.object_location[c.arg] != kInventory;
    case Condition::Kind::kFired:
      return s.fired[c.arg];
    case Condition::Kind::kUnfired:
      return !s.fired[c.arg];
  }
  return false;
}

bool trigger_fires(const Trigger& t, size_t index, const ParsedAction& a,
                   const WorldState& s) {
  if (t.verb != a.verb || t.noun != a.noun) return false;
  if (t.once && s.fired[index]) return false;
  return std::all_of(t.conditions.begin(), t.conditions.end(),
                     [&s](const Condition& c) { return condition_holds(c, s); });
}

enum class Builtin { kNone, kEffect, kNoEffect };

// Applies the built-in meaning of the verb to `s`. Returns whether it changed
// anything and writes the response text.
Builtin apply_builtin(const GameSpec& spec, const ParsedAction& a,
                      WorldState& s, std::string* msg) {
  if (a.verb == "look") {
    *msg = "you look around .";
    return Builtin::kEffect;
  }
  if (a.verb == "inventory") {
    *msg = "you check your belongings .";
    return Builtin::kEffect;
  }
  if (a.verb == "go") {
    if (const Exit* e = find_exit(spec, s, a.noun)) {
      s.location = e->target;
      *msg = "you go " + a.noun + " .";
      return Builtin::kEffect;
    }
    *msg = "you cannot go that way .";
    return Builtin::kNoEffect;
  }
  if (a.verb == "take" || a.verb == "drop") {
    const int obj = spec.object_index(a.noun);
    const int where = obj >= 0 ? s.object_location[obj] : kNowhere;
    if (a.verb == "take") {
      if (obj >= 0 && where == s.location && spec.objects[obj].portable) {
        s.object_location[obj] = kInventory;
        *msg = "taken .";
        return Builtin::kEffect;
      }
      if (obj >= 0 && where == s.location) {
        *msg = "the " + a.noun + " is fixed in place .";
      } else if (where == kInventory) {
        *msg = "you already have the " + a.noun + " .";
      } else {
        *msg = "you cannot see any " + a.noun + " here .";
      }
      return Builtin::kNoEffect;
    }
    if (where == kInventory) {
      s.object_location[obj] = s.location;
      *msg = "dropped .";
      return Builtin::kEffect;
    }
    *msg = "you are not carrying the " + a.noun + " .";
    return Builtin::kNoEffect;
  }
  *msg = "nothing happens .";
  return Builtin::kNone;
}

struct Outcome {
  WorldState state;
  ResponseClass response_class = ResponseClass::kUnrecognized;
  int reward = 0;
  std::string message;
};

Outcome advance(const GameSpec& spec, const WorldState& pre,
                std::string_view action) {
  if (pre.done) throw ContractViolation("step called on a finished episode");
  Outcome out;
  out.state = pre;
  WorldState& s = out.state;
  s.step_count += 1;

  auto parsed = parse_action(spec, action);
  if (!parsed) {
    out.message = "i do not understand that .";
    out.response_class = ResponseClass::kUnrecognized;
  } else {
    std::vector<size_t> firing;
    for (size_t i = 0; i < spec.triggers.size(); ++i) {
      if (trigger_fires(spec.triggers[i], i, *parsed, pre)) firing.push_back(i);
    }
    const Builtin b = apply_builtin(spec, *parsed, s, &out.message);
    std::string said;
    for (size_t i : firing) {
      const Trigger& t = spec.triggers[i];
      s.fired[i] = true;
      out.reward += t.reward;
      for (const auto& e : t.effects) {
        if (e.kind == Effect::Kind::kMove) {
          s.object_location[e.object] = e.location;
        } else {
          s.location = e.location;
        }
      }
      if (!t.message.empty()) {
        if (!said.empty()) said.push_back(' ');
        said += t.message;
      }
    }
    if (!said.empty()) {
      out.message = b == Builtin::kEffect ? out.message + " " + said : said;
    }
    out.response_class = (b == Builtin::kEffect || !firing.empty())
                             ? ResponseClass::kEffect
                             : ResponseClass::kNoEffect;
  }
  s.cumulative_score += out.reward;
  if (spec.win == WinPredicate::kMaxScore &&
      s.cumulative_score >= spec.max_score) {
    s.won = true;
    s.done = true;
    out.message += " you have won .";
  }
  if (s.step_count >= kEpisodeCap) s.done = true;
  return out;
}

std::string article_list(const std::vector<std::string>& nouns) {
  std::string out;
  for (size_t i = 0; i < nouns.size(); ++i) {
    if (i > 0) out += i + 1 == nouns.size() ? " and " : " , ";
    out += "a " + nouns[i];
  }
  return out;
}

}  // namespace

const char* response_class_name(ResponseClass c) {
  switch (c) {
    case ResponseClass::kEffect:
      return "effect";
    case ResponseClass::kNoEffect:
      return "no_effect";
    case ResponseClass::kUnrecognized:
      return "unrecognized";
  }
  return "?";
}

std::set<std::string> WorldState::inventory(const GameSpec& spec) const {
  std::set<std::string> out;
  for (size_t i = 0; i < object_location.size(); ++i) {
    if (object_location[i] == kInventory) out.insert(spec.objects[i].id);
  }
  return out;
}

std::string describe(const GameSpec& spec, const WorldState& s) {
  const Room& room = spec.rooms[s.location];
  std::string out = room.name + " . " + room.description;
  std::vector<std::string> here;
  std::vector<std::string> carried;
  for (size_t i = 0; i < spec.objects.size(); ++i) {
    if (s.object_location[i] == s.location) here.push_back(spec.objects[i].id);
    if (s.object_location[i] == kInventory) carried.push_back(spec.objects[i].id);
  }
  if (!here.empty()) out += " you see " + article_list(here) + " .";
  std::vector<std::string> open;
  for (const auto& e : room.exits) {
    if (exit_open(e, s)) open.push_back(e.direction);
  }
  if (open.empty()) {
    out += " there are no exits .";
  } else {
    out += " exits :";
    for (size_t i = 0; i < open.size(); ++i) {
      out += (i == 0 ? " " : " , ") + open[i];
    }
    out += " .";
  }
  if (carried.empty()) {
    out += " you carry nothing .";
  } else {
    out += " you carry " + article_list(carried) + " .";
  }
  return out;
}

std::pair<WorldState, std::string> reset(const GameSpec& spec, uint64_t) {
  WorldState s;
  s.location = spec.start_room;
  s.object_location.reserve(spec.objects.size());
  for (const auto& o : spec.objects) s.object_location.push_back(o.initial_location);
  s.fired.assign(spec.triggers.size(), false);
  return {s, describe(spec, s)};
}

std::pair<WorldState, StepResult> step(const GameSpec& spec,
                                       const WorldState& state,
                                       std::string_view action) {
  Outcome o = advance(spec, state, action);
  StepResult r;
  r.observation = o.message + " " + describe(spec, o.state);
  r.reward = o.reward;
  r.done = o.state.done;
  r.location_id = o.state.location;
  r.response_class = o.response_class;
  return {std::move(o.state), std::move(r)};
}

ResponseClass classify(const GameSpec& spec, const WorldState& state,
                       std::string_view action) {
  return advance(spec, state, action).response_class;
}

std::set<std::string> admissible_actions(const GameSpec& spec,
                                         const WorldState& s) {
  std::set<std::string> out;
  if (s.done) return out;
  out.insert("look");
  out.insert("inventory");
  for (const auto& e : spec.rooms[s.location].exits) {
    if (exit_open(e, s)) out.insert("go " + e.direction);
  }
  for (size_t i = 0; i < spec.objects.size(); ++i) {
    if (s.object_location[i] == s.location && spec.objects[i].portable) {
      out.insert("take " + spec.objects[i].id);
    }
    if (s.object_location[i] == kInventory) out.insert("drop " + spec.objects[i].id);
  }
  for (size_t i = 0; i < spec.triggers.size(); ++i) {
    const Trigger& t = spec.triggers[i];
    if (trigger_fires(t, i, ParsedAction{t.verb, t.noun}, s)) {
      out.insert(t.noun.empty() ? t.verb : t.verb + " " + t.noun);
    }
  }
  return out;
}

std::vector<std::string> grammar_actions(const GameSpec& spec) {
  std::vector<std::string> out;
  out.reserve(spec.verbs.size() * (spec.nouns.size() + 1));
  for (const auto& v : spec.verbs) {
    out.push_back(v);
    for (const auto& n : spec.nouns) out.push_back(v + " " + n);
  }
  return out;
}

std::optional<std::vector<std::string>> solve(const GameSpec& spec,
                                              int max_depth,
                                              size_t max_states,
                                              bool allow_drop) {
  struct Node {
    WorldState state;
    int parent;
    std::string action;
    int depth;
  };
  auto key = [](const WorldState& s) {
    std::string k = std::to_string(s.location) + "|";
    for (int l : s.object_location) k += std::to_string(l) + ",";
    k += "|";
    for (bool f : s.fired) k.push_back(f ? '1' : '0');
    return k;
  };
  std::vector<Node> nodes;
  std::unordered_set<std::string> seen;
  std::deque<int> frontier;
  auto [s0, obs0] = reset(spec, 0);
  nodes.push_back({s0, -1, "", 0});
  seen.insert(key(s0));
  frontier.push_back(0);
  while (!frontier.empty()) {
    const int cur = frontier.front();
    frontier.pop_front();
    if (nodes[cur].depth >= max_depth) continue;
    const WorldState state = nodes[cur].state;
    for (const auto& a : admissible_actions(spec, state)) {
      if (!allow_drop && a.rfind("drop ", 0) == 0) continue;
      Outcome o = advance(spec, state, a);
      if (o.state.won) {
        std::vector<std::string> path{a};
        for (int n = cur; nodes[n].parent >= 0; n = nodes[n].parent) {
          path.push_back(nodes[n].action);
        }
        std::reverse(path.begin(), path.end());
        return path;
      }
      if (o.state.done) continue;
      if (!seen.insert(key(o.state)).second) continue;
      if (nodes.size() >= max_states) return std::nullopt;
      nodes.push_back({o.state, cur, a, nodes[cur].depth + 1});
      frontier.push_back(static_cast<int>(nodes.size()) - 1);
    }
  }
  return std::nullopt;
}

Environment::Environment(std::shared_ptr<const GameSpec> spec)
    : spec_(std::move(spec)) {
  reset(0);
}

const std::string& Environment::reset(uint64_t seed) {
  auto [s, obs] = game::reset(*spec_, seed);
  state_ = std::move(s);
  observation_ = std::move(obs);
  return observation_;
}

StepResult Environment::step(std::string_view action) {
  auto [s, r] = game::step(*spec_, state_, action);
  state_ = std::move(s);
  observation_ = r.observation;
  return r;
}

}  // namespace lmloop::game
