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

#include "lmloop/game/spec.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "lmloop/error.h"
#include "lmloop/text/codec.h"

namespace lmloop::game {

namespace {

const std::set<std::string>& builtin_verbs() {
  static const std::set<std::string> kVerbs = {"go", "look", "inventory",
                                               "take", "drop"};
  return kVerbs;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string join_from(const std::vector<std::string>& words, size_t from) {
  std::string out;
  for (size_t i = from; i < words.size(); ++i) {
    if (!out.empty()) out.push_back(' ');
    out += words[i];
  }
  return out;
}

// Names are resolved after the whole file is read so that rooms, objects and
// triggers may refer forward.
struct PendingRef {
  int line;
  std::string name;
};

struct PendingExit {
  size_t room;
  size_t exit;
  PendingRef target;
  std::optional<PendingRef> after;
};

struct PendingObject {
  size_t object;
  PendingRef location;
};

struct PendingCondition {
  size_t trigger;
  size_t condition;
  PendingRef arg;
};

struct PendingEffect {
  size_t trigger;
  size_t effect;
  std::optional<PendingRef> object;
  PendingRef location;
};

class Parser {
 public:
  Parser(std::string_view text, std::string source)
      : text_(text), source_(std::move(source)) {}

  GameSpec parse() {
    std::istringstream in{std::string(text_)};
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_;
      const size_t hash = raw.find('#');
      std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
      auto words = split_ws(line);
      if (words.empty()) continue;
      if (words[0].front() == '[') {
        section(words);
        continue;
      }
      if (section_ == Section::kMeta) {
        meta(words);
      } else if (section_ == Section::kRooms) {
        room(words);
      } else if (section_ == Section::kObjects) {
        object(words);
      } else if (section_ == Section::kTriggers) {
        trigger(words);
      } else {
        fail("content before the first section header");
      }
    }
    resolve();
    finish_grammar();
    validate_spec(spec_);
    return std::move(spec_);
  }

 private:
  enum class Section { kNone, kMeta, kRooms, kObjects, kTriggers };

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source_, line_, what);
  }
  [[noreturn]] void fail_at(int line, const std::string& what) const {
    throw ParseError(source_, line, what);
  }

  void need(const std::vector<std::string>& w, size_t min, size_t max,
            const char* usage) const {
    if (w.size() < min || w.size() > max) fail(std::string("usage: ") + usage);
  }

  static int to_int(const std::string& s, bool* ok) {
    try {
      size_t pos = 0;
      const int v = std::stoi(s, &pos);
      *ok = pos == s.size();
      return v;
    } catch (const std::exception&) {
      *ok = false;
      return 0;
    }
  }

  void section(const std::vector<std::string>& w) {
    if (w.size() != 1) fail("section header must stand alone");
    static const std::map<std::string, Section> kSections = {
        {"[META]", Section::kMeta},
        {"[ROOMS]", Section::kRooms},
        {"[OBJECTS]", Section::kObjects},
        {"[TRIGGERS]", Section::kTriggers}};
    auto it = kSections.find(w[0]);
    if (it == kSections.end()) fail("unknown section " + w[0]);
    if (seen_sections_.count(w[0])) fail("duplicate section " + w[0]);
    seen_sections_.insert(w[0]);
    section_ = it->second;
  }

  void meta(const std::vector<std::string>& w) {
    const std::string& key = w[0];
    if (key == "id") {
      need(w, 2, 2, "id <game-id>");
      spec_.game_id = w[1];
    } else if (key == "title") {
      need(w, 2, 64, "title <text>");
      spec_.title = join_from(w, 1);
    } else if (key == "max_score") {
      need(w, 2, 2, "max_score <int>");
      bool ok = false;
      spec_.max_score = to_int(w[1], &ok);
      if (!ok) fail("max_score must be an integer");
    } else if (key == "start") {
      need(w, 2, 2, "start <room-id>");
      start_ = PendingRef{line_, w[1]};
    } else if (key == "win") {
      need(w, 2, 2, "win max_score");
      if (w[1] != "max_score") fail("unsupported win predicate " + w[1]);
    } else if (key == "verbs") {
      for (size_t i = 1; i < w.size(); ++i) declared_verbs_.insert(w[i]);
    } else if (key == "nouns") {
      for (size_t i = 1; i < w.size(); ++i) declared_nouns_.insert(w[i]);
    } else {
      fail("unknown META key " + key);
    }
  }

  void room(const std::vector<std::string>& w) {
    const std::string& key = w[0];
    if (key == "room") {
      need(w, 3, 64, "room <id> <name...>");
      Room r;
      r.id = w[1];
      r.name = join_from(w, 2);
      spec_.rooms.push_back(std::move(r));
      return;
    }
    if (spec_.rooms.empty()) fail(key + " before any room");
    Room& r = spec_.rooms.back();
    if (key == "desc") {
      need(w, 2, 256, "desc <text...>");
      if (!r.description.empty()) r.description.push_back(' ');
      r.description += join_from(w, 1);
    } else if (key == "exit") {
      if (!(w.size() == 3 || (w.size() == 5 && w[3] == "after"))) {
        fail("usage: exit <direction> <room-id> [after <trigger-id>]");
      }
      const auto& dirs = directions();
      if (std::find(dirs.begin(), dirs.end(), w[1]) == dirs.end()) {
        fail("unknown direction " + w[1]);
      }
      Exit e;
      e.direction = w[1];
      r.exits.push_back(e);
      PendingExit pe{spec_.rooms.size() - 1, r.exits.size() - 1,
                     PendingRef{line_, w[2]}, std::nullopt};
      if (w.size() == 5) pe.after = PendingRef{line_, w[4]};
      exits_.push_back(pe);
    } else {
      fail("unknown ROOMS key " + key);
    }
  }

  void object(const std::vector<std::string>& w) {
    if (w[0] != "object") fail("unknown OBJECTS key " + w[0]);
    need(w, 4, 4, "object <id> <room-id|inventory|nowhere> portable|fixed");
    if (w[3] != "portable" && w[3] != "fixed") {
      fail("object mobility must be portable or fixed");
    }
    Object o;
    o.id = w[1];
    o.portable = w[3] == "portable";
    spec_.objects.push_back(o);
    objects_.push_back({spec_.objects.size() - 1, PendingRef{line_, w[2]}});
  }

  void trigger(const std::vector<std::string>& w) {
    const std::string& key = w[0];
    if (key == "trigger") {
      need(w, 3, 4, "trigger <id> <verb> [<noun>]");
      Trigger t;
      t.id = w[1];
      t.verb = w[2];
      if (w.size() == 4) t.noun = w[3];
      spec_.triggers.push_back(std::move(t));
      return;
    }
    if (spec_.triggers.empty()) fail(key + " before any trigger");
    Trigger& t = spec_.triggers.back();
    const size_t ti = spec_.triggers.size() - 1;
    if (key == "reward") {
      need(w, 2, 2, "reward <int>");
      bool ok = false;
      t.reward = to_int(w[1], &ok);
      if (!ok) fail("reward must be an integer");
    } else if (key == "repeat") {
      need(w, 1, 1, "repeat");
      t.once = false;
    } else if (key == "once") {
      need(w, 1, 1, "once");
      t.once = true;
    } else if (key == "say") {
      need(w, 2, 256, "say <text...>");
      if (!t.message.empty()) t.message.push_back(' ');
      t.message += join_from(w, 1);
    } else if (key == "require") {
      need(w, 3, 3, "require at|has|here|lacks|fired|unfired <id>");
      static const std::map<std::string, Condition::Kind> kKinds = {
          {"at", Condition::Kind::kAt},       {"has", Condition::Kind::kHas},
          {"here", Condition::Kind::kHere},   {"lacks", Condition::Kind::kLacks},
          {"fired", Condition::Kind::kFired}, {"unfired", Condition::Kind::kUnfired}};
      auto it = kKinds.find(w[1]);
      if (it == kKinds.end()) fail("unknown condition " + w[1]);
      t.conditions.push_back({it->second, -1});
      conditions_.push_back({ti, t.conditions.size() - 1, PendingRef{line_, w[2]}});
    } else if (key == "effect") {
      if (w.size() == 4 && w[1] == "move") {
        t.effects.push_back({Effect::Kind::kMove, -1, -1});
        effects_.push_back({ti, t.effects.size() - 1, PendingRef{line_, w[2]},
                            PendingRef{line_, w[3]}});
      } else if (w.size() == 3 && w[1] == "goto") {
        t.effects.push_back({Effect::Kind::kGoto, -1, -1});
        effects_.push_back({ti, t.effects.size() - 1, std::nullopt,
                            PendingRef{line_, w[2]}});
      } else {
        fail("usage: effect move <object-id> <room-id|inventory|nowhere> | "
             "effect goto <room-id>");
      }
    } else {
      fail("unknown TRIGGERS key " + key);
    }
  }

  int room_ref(const PendingRef& ref) const {
    const int i = spec_.room_index(ref.name);
    if (i < 0) fail_at(ref.line, "unknown room " + ref.name);
    return i;
  }
  int object_ref(const PendingRef& ref) const {
    const int i = spec_.object_index(ref.name);
    if (i < 0) fail_at(ref.line, "unknown object " + ref.name);
    return i;
  }
  int trigger_ref(const PendingRef& ref) const {
    const int i = spec_.trigger_index(ref.name);
    if (i < 0) fail_at(ref.line, "unknown trigger " + ref.name);
    return i;
  }
  int location_ref(const PendingRef& ref) const {
    if (ref.name == "inventory") return kInventory;
    if (ref.name == "nowhere") return kNowhere;
    return room_ref(ref);
  }

  void resolve() {
    if (spec_.game_id.empty()) fail_at(0, "META id is required");
    if (!start_) fail_at(0, "META start is required");
    spec_.start_room = room_ref(*start_);
    for (const auto& pe : exits_) {
      Exit& e = spec_.rooms[pe.room].exits[pe.exit];
      e.target = spec_.room_index(pe.target.name);
      if (e.target < 0) {
        throw ValidationError("dangling exit: room " + spec_.rooms[pe.room].id +
                              " direction " + e.direction + " targets unknown room " +
                              pe.target.name + " (" + source_ + ":" +
                              std::to_string(pe.target.line) + ")");
      }
      if (pe.after) e.after_trigger = trigger_ref(*pe.after);
    }
    for (const auto& po : objects_) {
      spec_.objects[po.object].initial_location = location_ref(po.location);
    }
    for (const auto& pc : conditions_) {
      Condition& c = spec_.triggers[pc.trigger].conditions[pc.condition];
      switch (c.kind) {
        case Condition::Kind::kAt:
          c.arg = room_ref(pc.arg);
          break;
        case Condition::Kind::kHas:
        case Condition::Kind::kHere:
        case Condition::Kind::kLacks:
          c.arg = object_ref(pc.arg);
          break;
        case Condition::Kind::kFired:
        case Condition::Kind::kUnfired:
          c.arg = trigger_ref(pc.arg);
          break;
      }
    }
    for (const auto& pe : effects_) {
      Effect& e = spec_.triggers[pe.trigger].effects[pe.effect];
      if (e.kind == Effect::Kind::kMove) {
        e.object = object_ref(*pe.object);
        e.location = location_ref(pe.location);
      } else {
        e.location = room_ref(pe.location);
      }
    }
  }

  void finish_grammar() {
    std::set<std::string> verbs(builtin_verbs().begin(), builtin_verbs().end());
    verbs.insert(declared_verbs_.begin(), declared_verbs_.end());
    std::set<std::string> nouns(declared_nouns_.begin(), declared_nouns_.end());
    for (const auto& d : directions()) nouns.insert(d);
    for (const auto& o : spec_.objects) nouns.insert(o.id);
    for (const auto& t : spec_.triggers) {
      verbs.insert(t.verb);
      if (!t.noun.empty()) nouns.insert(t.noun);
    }
    spec_.verbs.assign(verbs.begin(), verbs.end());
    spec_.nouns.assign(nouns.begin(), nouns.end());
  }

  std::string_view text_;
  std::string source_;
  int line_ = 0;
  Section section_ = Section::kNone;
  std::set<std::string> seen_sections_;
  GameSpec spec_;
  std::optional<PendingRef> start_;
  std::set<std::string> declared_verbs_;
  std::set<std::string> declared_nouns_;
  std::vector<PendingExit> exits_;
  std::vector<PendingObject> objects_;
  std::vector<PendingCondition> conditions_;
  std::vector<PendingEffect> effects_;
};

bool single_word(const std::string& s) {
  auto words = text::split_words(s);
  return words.size() == 1 && words[0] == s;
}

}  // namespace

int GameSpec::room_index(std::string_view id) const {
  for (size_t i = 0; i < rooms.size(); ++i) {
    if (rooms[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

int GameSpec::object_index(std::string_view id) const {
  for (size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

int GameSpec::trigger_index(std::string_view id) const {
  for (size_t i = 0; i < triggers.size(); ++i) {
    if (triggers[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

bool GameSpec::has_verb(std::string_view v) const {
  return std::binary_search(verbs.begin(), verbs.end(), v);
}

bool GameSpec::has_noun(std::string_view n) const {
  return std::binary_search(nouns.begin(), nouns.end(), n);
}

std::vector<std::string> GameSpec::words() const {
  std::set<std::string> out(verbs.begin(), verbs.end());
  out.insert(nouns.begin(), nouns.end());
  auto add_text = [&out](const std::string& s) {
    for (auto& w : text::split_words(s)) out.insert(std::move(w));
  };
  for (const auto& r : rooms) {
    add_text(r.name);
    add_text(r.description);
  }
  for (const auto& t : triggers) add_text(t.message);
  for (const auto& w : template_words()) out.insert(w);
  return {out.begin(), out.end()};
}

void validate_spec(const GameSpec& spec) {
  auto fail = [&spec](const std::string& rule) {
    throw ValidationError(spec.game_id + ": " + rule);
  };
  if (spec.rooms.empty()) fail("a game needs at least one room");
  std::set<std::string> ids;
  for (const auto& r : spec.rooms) {
    if (!ids.insert(r.id).second) fail("duplicate room id " + r.id);
    std::set<std::string> dirs;
    for (const auto& e : r.exits) {
      if (e.target < 0 || e.target >= static_cast<int>(spec.rooms.size())) {
        fail("dangling exit: room " + r.id + " direction " + e.direction);
      }
      if (!dirs.insert(e.direction).second) {
        fail("room " + r.id + " has two exits " + e.direction);
      }
    }
  }
  ids.clear();
  for (const auto& o : spec.objects) {
    if (!ids.insert(o.id).second) fail("duplicate object id " + o.id);
    if (!single_word(o.id)) fail("object id must be one word: " + o.id);
  }
  ids.clear();
  int positive_once = 0;
  for (const auto& t : spec.triggers) {
    if (!ids.insert(t.id).second) fail("duplicate trigger id " + t.id);
    if (t.reward < 0) fail("trigger " + t.id + " has a negative reward");
    if (!t.once && t.reward != 0) {
      fail("repeatable trigger " + t.id + " must have zero reward");
    }
    if (t.once) positive_once += t.reward;
    if (!single_word(t.verb) || (!t.noun.empty() && !single_word(t.noun))) {
      fail("trigger " + t.id + " verb and noun must be single words");
    }
  }
  if (spec.max_score <= 0) fail("max_score must be positive");
  if (positive_once != spec.max_score) {
    fail("one-shot trigger rewards sum to " + std::to_string(positive_once) +
         " but max_score is " + std::to_string(spec.max_score));
  }
  if (spec.verbs.size() > static_cast<size_t>(kMaxVerbs)) {
    fail("more than " + std::to_string(kMaxVerbs) + " verbs");
  }
  if (spec.nouns.size() > static_cast<size_t>(kMaxNouns)) {
    fail("more than " + std::to_string(kMaxNouns) + " nouns");
  }
  for (const auto& w : spec.verbs) {
    if (!single_word(w)) fail("verb must be a single word: " + w);
  }
  for (const auto& w : spec.nouns) {
    if (!single_word(w)) fail("noun must be a single word: " + w);
  }
}

GameSpec parse_spec(std::string_view text, const std::string& source_name) {
  return Parser(text, source_name).parse();
}

GameSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open game spec " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str(), path.string());
}

std::vector<std::string> load_walkthrough(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open walkthrough " + path.string());
  std::vector<std::string> actions;
  std::string line;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto words = split_ws(line);
    if (!words.empty()) actions.push_back(join_from(words, 0));
  }
  return actions;
}

const std::vector<std::string>& template_words() {
  static const std::vector<std::string> kWords = [] {
    const char* kTemplates[] = {
        "you see a and . exits : , there are no exits",
        "you carry nothing you have won",
        "you go you cannot go that way",
        "taken dropped the is fixed in place you already have",
        "you cannot see any here you are not carrying",
        "you look around you check your belongings",
        "nothing happens i do not understand that"};
    std::set<std::string> words;
    for (const char* t : kTemplates) {
      for (auto& w : text::split_words(t)) words.insert(std::move(w));
    }
    return std::vector<std::string>(words.begin(), words.end());
  }();
  return kWords;
}

}  // namespace lmloop::game

namespace lmloop::game {

text::Vocabulary shared_vocabulary(const std::vector<GameSpec>& specs) {
  std::set<std::string> all;
  for (const auto& spec : specs) {
    for (auto& w : spec.words()) all.insert(std::move(w));
  }
  const std::vector<std::string> words(all.begin(), all.end());
  return text::Vocabulary::from_words(words);
}

std::vector<GameSpec> load_suite(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".game") files.push_back(entry.path());
  }
  if (files.empty()) throw Error("no .game files in " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<GameSpec> specs;
  for (const auto& f : files) specs.push_back(load_spec(f));
  return specs;
}

}  // namespace lmloop::game
