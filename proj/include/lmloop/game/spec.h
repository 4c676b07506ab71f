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

#ifndef LMLOOP_GAME_SPEC_H_
#define LMLOOP_GAME_SPEC_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lmloop/text/codec.h"

// Declarative room-graph games. See games/FORMAT.md for the file grammar.

namespace lmloop::game {

inline constexpr int kEpisodeCap = 100;
inline constexpr int kMaxVerbs = 40;
inline constexpr int kMaxNouns = 60;

// Object locations: a room index, or one of these.
inline constexpr int kInventory = -1;
inline constexpr int kNowhere = -2;

inline const std::vector<std::string>& directions() {
  static const std::vector<std::string> kDirs = {
      "north", "south",     "east",      "west",      "up",
      "down",  "northeast", "northwest", "southeast", "southwest"};
  return kDirs;
}

struct Exit {
  std::string direction;
  int target = -1;
  int after_trigger = -1;  // exit exists only once this trigger has fired
};

struct Room {
  std::string id;
  std::string name;
  std::string description;
  std::vector<Exit> exits;
};

struct Object {
  std::string id;  // also the noun that names it
  int initial_location = kNowhere;
  bool portable = false;
};

struct Condition {
  enum class Kind { kAt, kHas, kHere, kLacks, kFired, kUnfired };
  Kind kind;
  int arg;  // room, object, or trigger index depending on kind
};

struct Effect {
  enum class Kind { kMove, kGoto };
  Kind kind;
  int object = -1;    // kMove
  int location = -1;  // kMove: destination; kGoto: room
};

struct Trigger {
  std::string id;
  std::string verb;
  std::string noun;  // empty for a bare verb
  int reward = 0;
  bool once = true;
  std::vector<Condition> conditions;
  std::vector<Effect> effects;
  std::string message;
};

// The only win predicate: the cumulative score reaches max_score.
enum class WinPredicate { kMaxScore };

struct GameSpec {
  std::string game_id;
  std::string title;
  std::vector<Room> rooms;
  std::vector<Object> objects;
  std::vector<Trigger> triggers;
  int max_score = 0;
  int start_room = 0;
  WinPredicate win = WinPredicate::kMaxScore;
  // Closed grammar: built-in verbs + declared verbs + trigger verbs; declared
  // nouns + object ids + directions. Both sorted.
  std::vector<std::string> verbs;
  std::vector<std::string> nouns;

  int room_index(std::string_view id) const;    // -1 if absent
  int object_index(std::string_view id) const;  // -1 if absent
  int trigger_index(std::string_view id) const;
  bool has_verb(std::string_view v) const;
  bool has_noun(std::string_view n) const;

  // Every word the engine can put in an observation or accept in an action.
  std::vector<std::string> words() const;
};

// Parses and validates. Syntax problems raise ParseError with a line locus;
// broken invariants raise ValidationError naming the failing rule.
GameSpec parse_spec(std::string_view text, const std::string& source_name);
GameSpec load_spec(const std::filesystem::path& path);

// Checks every invariant that can be checked without playing the game.
void validate_spec(const GameSpec& spec);

// One action per line; blank lines and '#' comments are skipped.
std::vector<std::string> load_walkthrough(const std::filesystem::path& path);

// Words used by the engine's response and description templates.
const std::vector<std::string>& template_words();

// Union of words() over `specs`: one vocabulary shared by every game.
text::Vocabulary shared_vocabulary(const std::vector<GameSpec>& specs);

// Loads every *.game file in `dir`, sorted by file name.
std::vector<GameSpec> load_suite(const std::filesystem::path& dir);

}  // namespace lmloop::game

#endif  // LMLOOP_GAME_SPEC_H_
