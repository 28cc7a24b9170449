#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "assistgrid/rng.hpp"

namespace assistgrid {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

enum class AgentId { User, Bystander, Assistant };

enum class DynamicsVariant { PushPullAdjacent, PushAdjacent, MoveAny, MoveAnyFreeze };

const char* variant_name(DynamicsVariant v);
std::optional<DynamicsVariant> variant_from_name(const std::string& name);

enum class Dir { Up, Down, Left, Right };

inline Cell shifted(Cell c, Dir d) {
  switch (d) {
    case Dir::Up: return {c.x, c.y - 1};
    case Dir::Down: return {c.x, c.y + 1};
    case Dir::Left: return {c.x - 1, c.y};
    case Dir::Right: return {c.x + 1, c.y};
  }
  return c;
}

// One action for any agent. Humans use Move/Stay only; the assistant's legal
// subset depends on the dynamics variant (see action_space).
struct Action {
  enum class Kind { Move, Stay, Pull, MoveBox, Freeze };
  Kind kind = Kind::Stay;
  Dir dir = Dir::Up;
  int box = 0;  // MoveBox only

  static Action move(Dir d) { return {Kind::Move, d, 0}; }
  static Action stay() { return {Kind::Stay, Dir::Up, 0}; }
  static Action pull(Dir d) { return {Kind::Pull, d, 0}; }
  static Action move_box(int box, Dir d) { return {Kind::MoveBox, d, box}; }
  static Action freeze() { return {Kind::Freeze, Dir::Up, 0}; }

  friend bool operator==(const Action&, const Action&) = default;
};

std::string action_tag(const Action& a);

struct JointAction {
  Action user;
  Action bystander;
  Action assistant;
};

// Static description of a grid. Immutable after construction.
struct Layout {
  std::string id;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> wall_mask;  // width * height, row-major
  std::vector<Cell> boxes;
  std::optional<Cell> key_user;
  std::optional<Cell> key_bystander;
  Cell goal_user;
  Cell goal_bystander;
  Cell init_user;
  Cell init_bystander;
  std::optional<Cell> init_assistant;
  DynamicsVariant variant = DynamicsVariant::PushPullAdjacent;
  int episode_len = 50;

  bool assistant_embodied() const {
    return variant == DynamicsVariant::PushPullAdjacent || variant == DynamicsVariant::PushAdjacent;
  }
  bool requires_key() const { return assistant_embodied(); }
  bool in_bounds(Cell c) const { return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height; }
  bool wall(Cell c) const { return wall_mask[static_cast<std::size_t>(c.y) * width + c.x] != 0; }
  bool goal_cell(Cell c) const { return c == goal_user || c == goal_bystander; }
  bool key_cell(Cell c) const {
    return (key_user && *key_user == c) || (key_bystander && *key_bystander == c);
  }
  int cell_index(Cell c) const { return c.y * width + c.x; }
  std::optional<Cell> key_of(AgentId h) const { return h == AgentId::User ? key_user : key_bystander; }
  Cell goal_of(AgentId h) const { return h == AgentId::User ? goal_user : goal_bystander; }

  friend bool operator==(const Layout&, const Layout&) = default;
};

// Full mutable world state. Holds a non-owning pointer to its layout; the
// layout must outlive every state derived from it.
struct GridState {
  const Layout* layout = nullptr;
  Cell user;
  Cell bystander;
  std::optional<Cell> assistant;
  std::vector<Cell> boxes;
  bool key_user = false;
  bool key_bystander = false;
  int freeze_timer = 0;
  int t = 0;

  Cell pos(AgentId a) const {
    if (a == AgentId::User) return user;
    if (a == AgentId::Bystander) return bystander;
    return *assistant;
  }
  bool key_collected(AgentId h) const { return h == AgentId::User ? key_user : key_bystander; }
  bool box_at(Cell c) const {
    for (const Cell& b : boxes)
      if (b == c) return true;
    return false;
  }

  friend bool operator==(const GridState&, const GridState&) = default;
};

enum class EventKind { BoxPushed, BoxPulled, BoxMoved, Froze, KeyCollected, GoalReached };

struct Event {
  EventKind kind;
  AgentId agent = AgentId::Assistant;
  friend bool operator==(const Event&, const Event&) = default;
};

struct StepOutcome {
  GridState next;
  int reward_user = 0;
  int reward_bystander = 0;
  std::vector<Event> events;
};

// Parse / step errors.
enum class LayoutErrorCode {
  UnknownCharacter,
  DuplicateAgent,
  MissingAgent,
  NonRectangular,
  UnwalledBorder,
  InvalidHeader,
  NoOpenCells,
};

class LayoutError : public std::runtime_error {
 public:
  LayoutError(LayoutErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  LayoutErrorCode code() const { return code_; }

 private:
  LayoutErrorCode code_;
};

class EpisodeOver : public std::runtime_error {
 public:
  EpisodeOver() : std::runtime_error("episode is over") {}
};

class IllegalAction : public std::runtime_error {
 public:
  explicit IllegalAction(const std::string& msg) : std::runtime_error(msg) {}
};

// Layout file format: optional header lines ("key: value") followed by an
// ASCII grid block. See docs in io module / README for the vocabulary.
Layout parse_layout(const std::string& text);

// Serialize a layout back to file format (headers plus grid).
std::string write_layout(const Layout& layout);

GridState reset(const Layout& layout);

std::string render_ascii(const GridState& state);

std::vector<Action> action_space(const Layout& layout, AgentId agent);

// Deterministic simultaneous-move transition. rng is reserved for stochastic
// variants and unused by the default dynamics.
StepOutcome step(const GridState& state, const JointAction& action, Rng& rng);

// Convenience overload for the deterministic default dynamics.
StepOutcome step(const GridState& state, const JointAction& action);

// Enumerate key/goal placement variations of a base layout over its open
// floor cells. Ordering is deterministic (row-major); shuffle permutes the
// result with the given seed when requested.
std::vector<Layout> generate_variations(const Layout& base, std::uint64_t seed,
                                        bool shuffle = false);

}  // namespace assistgrid
