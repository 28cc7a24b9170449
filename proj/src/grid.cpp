#include "assistgrid/grid.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace assistgrid {

const char* variant_name(DynamicsVariant v) {
  switch (v) {
    case DynamicsVariant::PushPullAdjacent: return "push_pull_adjacent";
    case DynamicsVariant::PushAdjacent: return "push_adjacent";
    case DynamicsVariant::MoveAny: return "move_any";
    case DynamicsVariant::MoveAnyFreeze: return "move_any_freeze";
  }
  return "?";
}

std::optional<DynamicsVariant> variant_from_name(const std::string& name) {
  for (DynamicsVariant v : {DynamicsVariant::PushPullAdjacent, DynamicsVariant::PushAdjacent,
                            DynamicsVariant::MoveAny, DynamicsVariant::MoveAnyFreeze})
    if (name == variant_name(v)) return v;
  return std::nullopt;
}

static const char* dir_name(Dir d) {
  switch (d) {
    case Dir::Up: return "up";
    case Dir::Down: return "down";
    case Dir::Left: return "left";
    case Dir::Right: return "right";
  }
  return "?";
}

std::string action_tag(const Action& a) {
  switch (a.kind) {
    case Action::Kind::Move: return std::string("move_") + dir_name(a.dir);
    case Action::Kind::Stay: return "stay";
    case Action::Kind::Pull: return std::string("pull_") + dir_name(a.dir);
    case Action::Kind::MoveBox: return "move_box";
    case Action::Kind::Freeze: return "freeze";
  }
  return "?";
}

namespace {

struct ParsedHeader {
  std::optional<DynamicsVariant> variant;
  std::optional<int> episode_len;
  std::optional<Cell> goal_user, goal_bystander, key_user, key_bystander;
};

std::optional<Cell> parse_cell(const std::string& v) {
  std::istringstream is(v);
  int x, y;
  char comma;
  if (!(is >> x >> comma >> y) || comma != ',') return std::nullopt;
  return Cell{x, y};
}

void parse_header_line(const std::string& line, int lineno, ParsedHeader& h) {
  auto colon = line.find(':');
  const std::string key = line.substr(0, colon);
  std::string value = line.substr(colon + 1);
  value.erase(0, value.find_first_not_of(" \t"));
  value.erase(value.find_last_not_of(" \t\r") + 1);
  auto bad = [&](const std::string& what) {
    throw LayoutError(LayoutErrorCode::InvalidHeader,
                      "line " + std::to_string(lineno) + ": " + what + " in '" + key + "'");
  };
  if (key == "variant") {
    h.variant = variant_from_name(value);
    if (!h.variant) bad("unknown variant '" + value + "'");
  } else if (key == "episode_len") {
    try {
      h.episode_len = std::stoi(value);
    } catch (...) {
      bad("invalid integer");
    }
    if (*h.episode_len < 1) bad("episode_len must be >= 1");
  } else if (key == "goal_user" || key == "goal_bystander" || key == "key_user" ||
             key == "key_bystander") {
    auto c = parse_cell(value);
    if (!c) bad("expected 'x,y'");
    if (key == "goal_user") h.goal_user = c;
    if (key == "goal_bystander") h.goal_bystander = c;
    if (key == "key_user") h.key_user = c;
    if (key == "key_bystander") h.key_bystander = c;
  } else {
    bad("unknown header key");
  }
}

}  // namespace

Layout parse_layout(const std::string& text) {
  std::vector<std::string> lines;
  {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }

  ParsedHeader header;
  std::vector<std::pair<std::string, int>> grid;  // line text, 1-based line number
  bool in_grid = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    const int lineno = static_cast<int>(i) + 1;
    if (!in_grid) {
      if (line.empty()) continue;
      if (line.find(':') != std::string::npos && line[0] != '#') {
        parse_header_line(line, lineno, header);
        continue;
      }
      in_grid = true;
    }
    if (line.empty()) break;  // blank line ends the grid block
    grid.emplace_back(line, lineno);
  }
  if (grid.empty())
    throw LayoutError(LayoutErrorCode::NonRectangular, "no grid block found");

  Layout layout;
  layout.height = static_cast<int>(grid.size());
  layout.width = static_cast<int>(grid.front().first.size());
  layout.wall_mask.assign(static_cast<std::size_t>(layout.width) * layout.height, 0);

  std::vector<Cell> key_marks, goal_marks;
  std::optional<Cell> user, bystander, assistant;
  for (int y = 0; y < layout.height; ++y) {
    const auto& [row, lineno] = grid[static_cast<std::size_t>(y)];
    if (static_cast<int>(row.size()) != layout.width)
      throw LayoutError(LayoutErrorCode::NonRectangular,
                        "line " + std::to_string(lineno) + ": row length " +
                            std::to_string(row.size()) + " != " + std::to_string(layout.width));
    for (int x = 0; x < layout.width; ++x) {
      const Cell c{x, y};
      const char ch = row[static_cast<std::size_t>(x)];
      auto dup = [&](const char* who) {
        throw LayoutError(LayoutErrorCode::DuplicateAgent,
                          "line " + std::to_string(lineno) + " column " + std::to_string(x + 1) +
                              ": duplicate " + who);
      };
      switch (ch) {
        case '#': layout.wall_mask[static_cast<std::size_t>(y) * layout.width + x] = 1; break;
        case '.': break;
        case 'O': layout.boxes.push_back(c); break;
        case 'U':
          if (user) dup("user");
          user = c;
          break;
        case 'B':
          if (bystander) dup("bystander");
          bystander = c;
          break;
        case 'R':
          if (assistant) dup("assistant");
          assistant = c;
          break;
        case 'K': key_marks.push_back(c); break;
        case '*': goal_marks.push_back(c); break;
        default:
          throw LayoutError(LayoutErrorCode::UnknownCharacter,
                            "line " + std::to_string(lineno) + " column " + std::to_string(x + 1) +
                                ": unknown character '" + std::string(1, ch) + "'");
      }
    }
  }

  for (int x = 0; x < layout.width; ++x)
    for (int y : {0, layout.height - 1})
      if (!layout.wall(Cell{x, y}))
        throw LayoutError(LayoutErrorCode::UnwalledBorder,
                          "border cell " + std::to_string(x) + "," + std::to_string(y) +
                              " is not a wall");
  for (int y = 0; y < layout.height; ++y)
    for (int x : {0, layout.width - 1})
      if (!layout.wall(Cell{x, y}))
        throw LayoutError(LayoutErrorCode::UnwalledBorder,
                          "border cell " + std::to_string(x) + "," + std::to_string(y) +
                              " is not a wall");

  if (!user) throw LayoutError(LayoutErrorCode::MissingAgent, "no user 'U' in grid");
  if (!bystander) throw LayoutError(LayoutErrorCode::MissingAgent, "no bystander 'B' in grid");
  layout.init_user = *user;
  layout.init_bystander = *bystander;
  layout.init_assistant = assistant;

  layout.variant = header.variant.value_or(DynamicsVariant::PushPullAdjacent);
  layout.episode_len = header.episode_len.value_or(50);
  if (layout.assistant_embodied() && !assistant)
    throw LayoutError(LayoutErrorCode::MissingAgent,
                      "embodied variant requires an assistant 'R' in the grid");
  if (!layout.assistant_embodied() && assistant)
    throw LayoutError(LayoutErrorCode::InvalidHeader,
                      "non-embodied variant must not place an assistant 'R'");
  if (!layout.assistant_embodied()) layout.init_assistant.reset();

  // Goal assignment: headers are authoritative, otherwise derive from marks.
  if (header.goal_user || header.goal_bystander) {
    if (!header.goal_user || !header.goal_bystander)
      throw LayoutError(LayoutErrorCode::InvalidHeader,
                        "goal_user and goal_bystander headers must be given together");
    layout.goal_user = *header.goal_user;
    layout.goal_bystander = *header.goal_bystander;
  } else if (goal_marks.size() == 1) {
    layout.goal_user = layout.goal_bystander = goal_marks[0];
  } else if (goal_marks.size() == 2) {
    layout.goal_user = goal_marks[0];
    layout.goal_bystander = goal_marks[1];
  } else {
    throw LayoutError(LayoutErrorCode::InvalidHeader,
                      "expected 1 or 2 goal cells '*' (got " + std::to_string(goal_marks.size()) +
                          ") or explicit goal headers");
  }

  if (header.key_user || header.key_bystander) {
    layout.key_user = header.key_user;
    layout.key_bystander = header.key_bystander;
  } else if (key_marks.size() == 1) {
    layout.key_user = layout.key_bystander = key_marks[0];
  } else if (key_marks.size() == 2) {
    layout.key_user = key_marks[0];
    layout.key_bystander = key_marks[1];
  } else if (key_marks.size() > 2) {
    throw LayoutError(LayoutErrorCode::InvalidHeader, "more than 2 key cells 'K'");
  }

  // Validate key/goal cells sit on open floor.
  auto check_floor = [&](const char* what, Cell c) {
    if (!layout.in_bounds(c) || layout.wall(c))
      throw LayoutError(LayoutErrorCode::InvalidHeader,
                        std::string(what) + " cell " + std::to_string(c.x) + "," +
                            std::to_string(c.y) + " is a wall or out of bounds");
    for (const Cell& b : layout.boxes)
      if (b == c)
        throw LayoutError(LayoutErrorCode::InvalidHeader,
                          std::string(what) + " cell coincides with a box");
  };
  check_floor("goal", layout.goal_user);
  check_floor("goal", layout.goal_bystander);
  if (layout.key_user) check_floor("key", *layout.key_user);
  if (layout.key_bystander) check_floor("key", *layout.key_bystander);

  return layout;
}

std::string write_layout(const Layout& layout) {
  std::ostringstream os;
  os << "variant: " << variant_name(layout.variant) << "\n";
  os << "episode_len: " << layout.episode_len << "\n";
  os << "goal_user: " << layout.goal_user.x << "," << layout.goal_user.y << "\n";
  os << "goal_bystander: " << layout.goal_bystander.x << "," << layout.goal_bystander.y << "\n";
  if (layout.key_user)
    os << "key_user: " << layout.key_user->x << "," << layout.key_user->y << "\n";
  if (layout.key_bystander)
    os << "key_bystander: " << layout.key_bystander->x << "," << layout.key_bystander->y << "\n";
  os << render_ascii(reset(layout));
  return os.str();
}

GridState reset(const Layout& layout) {
  GridState s;
  s.layout = &layout;
  s.user = layout.init_user;
  s.bystander = layout.init_bystander;
  s.assistant = layout.init_assistant;
  s.boxes = layout.boxes;
  return s;
}

std::string render_ascii(const GridState& state) {
  const Layout& l = *state.layout;
  std::vector<std::string> rows(static_cast<std::size_t>(l.height),
                                std::string(static_cast<std::size_t>(l.width), '.'));
  auto put = [&](Cell c, char ch) { rows[static_cast<std::size_t>(c.y)][static_cast<std::size_t>(c.x)] = ch; };
  for (int y = 0; y < l.height; ++y)
    for (int x = 0; x < l.width; ++x)
      if (l.wall(Cell{x, y})) put(Cell{x, y}, '#');
  if (l.key_user) put(*l.key_user, 'K');
  if (l.key_bystander) put(*l.key_bystander, 'K');
  put(l.goal_user, '*');
  put(l.goal_bystander, '*');
  for (const Cell& b : state.boxes) put(b, 'O');
  if (state.user == state.bystander) {
    put(state.user, '&');
  } else {
    put(state.user, 'U');
    put(state.bystander, state.freeze_timer > 0 ? 'b' : 'B');
  }
  if (state.assistant) put(*state.assistant, 'R');
  std::string out;
  for (const std::string& r : rows) {
    out += r;
    out += '\n';
  }
  return out;
}

std::vector<Action> action_space(const Layout& layout, AgentId agent) {
  constexpr std::array<Dir, 4> dirs{Dir::Up, Dir::Down, Dir::Left, Dir::Right};
  std::vector<Action> acts;
  if (agent != AgentId::Assistant) {
    for (Dir d : dirs) acts.push_back(Action::move(d));
    acts.push_back(Action::stay());
    return acts;
  }
  switch (layout.variant) {
    case DynamicsVariant::PushPullAdjacent:
      for (Dir d : dirs) acts.push_back(Action::move(d));
      acts.push_back(Action::stay());
      for (Dir d : dirs) acts.push_back(Action::pull(d));
      break;
    case DynamicsVariant::PushAdjacent:
      for (Dir d : dirs) acts.push_back(Action::move(d));
      acts.push_back(Action::stay());
      break;
    case DynamicsVariant::MoveAny:
    case DynamicsVariant::MoveAnyFreeze:
      for (int b = 0; b < static_cast<int>(layout.boxes.size()); ++b)
        for (Dir d : dirs) acts.push_back(Action::move_box(b, d));
      acts.push_back(Action::stay());
      if (layout.variant == DynamicsVariant::MoveAnyFreeze) acts.push_back(Action::freeze());
      break;
  }
  return acts;
}

namespace {

bool action_legal(const Layout& layout, AgentId agent, const Action& a) {
  const auto space = action_space(layout, agent);
  return std::find(space.begin(), space.end(), a) != space.end();
}

// Simultaneous movers: the two humans, the embodied assistant, and a box a
// push/pull drags along. Conflicts cancel whole units (assistant + box).
struct Mover {
  enum class Who { User, Bystander, Assistant, Box };
  Who who;
  Cell from;
  Cell to;
  bool moving = false;
  int box_index = -1;
};

}  // namespace

StepOutcome step(const GridState& state, const JointAction& action, Rng& /*rng*/) {
  const Layout& l = *state.layout;
  if (state.t >= l.episode_len) throw EpisodeOver();
  if (!action_legal(l, AgentId::User, action.user))
    throw IllegalAction("illegal user action " + action_tag(action.user));
  if (!action_legal(l, AgentId::Bystander, action.bystander))
    throw IllegalAction("illegal bystander action " + action_tag(action.bystander));
  if (!action_legal(l, AgentId::Assistant, action.assistant))
    throw IllegalAction("illegal assistant action " + action_tag(action.assistant));

  StepOutcome out;
  GridState& next = out.next;
  next = state;

  const bool frozen = state.freeze_timer > 0;
  int new_timer = frozen ? state.freeze_timer - 1 : 0;

  // Phase (a): non-embodied assistant world edits resolve first.
  if (!l.assistant_embodied()) {
    const Action& a = action.assistant;
    if (a.kind == Action::Kind::Freeze) {
      new_timer = 4;
      out.events.push_back({EventKind::Froze, AgentId::Bystander});
    } else if (a.kind == Action::Kind::MoveBox) {
      const Cell from = next.boxes[static_cast<std::size_t>(a.box)];
      const Cell to = shifted(from, a.dir);
      const bool free = l.in_bounds(to) && !l.wall(to) && !next.box_at(to) && to != next.user &&
                        to != next.bystander;
      if (free) {
        next.boxes[static_cast<std::size_t>(a.box)] = to;
        out.events.push_back({EventKind::BoxMoved, AgentId::Assistant});
      }
    }
  }

  // Phase (b): simultaneous moves of the humans and the embodied assistant.
  const Action bystander_action = frozen ? Action::stay() : action.bystander;

  std::vector<Mover> movers;
  auto add_mover = [&](Mover m) {
    m.moving = !(m.to == m.from);
    movers.push_back(m);
  };

  auto human_target = [&](Cell from, const Action& a) {
    if (a.kind != Action::Kind::Move) return from;
    const Cell to = shifted(from, a.dir);
    if (!l.in_bounds(to) || l.wall(to) || next.box_at(to)) return from;
    return to;
  };
  add_mover({Mover::Who::User, next.user, human_target(next.user, action.user), false, -1});
  add_mover({Mover::Who::Bystander, next.bystander, human_target(next.bystander, bystander_action),
             false, -1});

  bool pushed = false, pulled = false;
  if (l.assistant_embodied()) {
    const Cell apos = *next.assistant;
    const Action& a = action.assistant;
    Cell ato = apos;
    int moved_box = -1;
    Cell box_to{};
    auto box_index_at = [&](Cell c) {
      for (std::size_t i = 0; i < next.boxes.size(); ++i)
        if (next.boxes[i] == c) return static_cast<int>(i);
      return -1;
    };
    auto occupied_by_agent = [&](Cell c) {
      return c == next.user || c == next.bystander || c == apos;
    };
    if (a.kind == Action::Kind::Move) {
      const Cell target = shifted(apos, a.dir);
      if (l.in_bounds(target) && !l.wall(target)) {
        const int bi = box_index_at(target);
        if (bi < 0) {
          ato = target;
        } else {
          // Push: in embodied variants a box may never come to rest on a goal.
          const Cell bdest = shifted(target, a.dir);
          if (l.in_bounds(bdest) && !l.wall(bdest) && !next.box_at(bdest) &&
              !occupied_by_agent(bdest) && !l.goal_cell(bdest)) {
            ato = target;
            moved_box = bi;
            box_to = bdest;
            pushed = true;
          }
        }
      }
    } else if (a.kind == Action::Kind::Pull) {
      const Cell target = shifted(apos, a.dir);
      const Cell behind = shifted(apos, a.dir == Dir::Up      ? Dir::Down
                                        : a.dir == Dir::Down  ? Dir::Up
                                        : a.dir == Dir::Left  ? Dir::Right
                                                              : Dir::Left);
      const int bi = l.in_bounds(behind) ? box_index_at(behind) : -1;
      if (bi >= 0 && l.in_bounds(target) && !l.wall(target) && !next.box_at(target) &&
          !occupied_by_agent(target) && !l.goal_cell(apos)) {
        ato = target;
        moved_box = bi;
        box_to = apos;
        pulled = true;
      }
    }
    add_mover({Mover::Who::Assistant, apos, ato, false, -1});
    if (moved_box >= 0)
      add_mover({Mover::Who::Box, next.boxes[static_cast<std::size_t>(moved_box)], box_to, false,
                 moved_box});
  }

  // Cancel conflicting moves until a fixed point. Cancelling the assistant
  // cancels its dragged box and vice versa.
  auto cancel = [&](std::size_t i) {
    if (!movers[i].moving) return;
    movers[i].moving = false;
    movers[i].to = movers[i].from;
    if (movers[i].who == Mover::Who::Assistant || movers[i].who == Mover::Who::Box) {
      for (auto& m : movers)
        if ((m.who == Mover::Who::Assistant || m.who == Mover::Who::Box) && m.moving) {
          m.moving = false;
          m.to = m.from;
        }
    }
  };
  bool changed = true;
  while (changed) {
    changed = false;
    // Swaps: two movers passing through each other both stay.
    for (std::size_t i = 0; i < movers.size(); ++i)
      for (std::size_t j = i + 1; j < movers.size(); ++j)
        if (movers[i].moving && movers[j].moving && movers[i].to == movers[j].from &&
            movers[j].to == movers[i].from) {
          cancel(i);
          cancel(j);
          changed = true;
        }
    // Shared targets: all conflicting movers stay, unless both are humans
    // converging on a goal cell.
    for (std::size_t i = 0; i < movers.size(); ++i)
      for (std::size_t j = i + 1; j < movers.size(); ++j)
        if (movers[i].moving && movers[j].moving && movers[i].to == movers[j].to) {
          const bool both_humans =
              (movers[i].who == Mover::Who::User || movers[i].who == Mover::Who::Bystander) &&
              (movers[j].who == Mover::Who::User || movers[j].who == Mover::Who::Bystander);
          if (!(both_humans && l.goal_cell(movers[i].to))) {
            cancel(i);
            cancel(j);
            changed = true;
          }
        }
    // Targets occupied by a non-moving entity stay, except a human joining
    // the other human on a goal cell.
    for (std::size_t i = 0; i < movers.size(); ++i) {
      if (!movers[i].moving) continue;
      for (std::size_t j = 0; j < movers.size(); ++j) {
        if (i == j || movers[j].moving) continue;
        if (movers[i].to == movers[j].from) {
          const bool human_pair =
              (movers[i].who == Mover::Who::User || movers[i].who == Mover::Who::Bystander) &&
              (movers[j].who == Mover::Who::User || movers[j].who == Mover::Who::Bystander);
          if (!(human_pair && l.goal_cell(movers[i].to))) {
            cancel(i);
            changed = true;
          }
        }
      }
    }
  }

  for (const Mover& m : movers) {
    switch (m.who) {
      case Mover::Who::User: next.user = m.to; break;
      case Mover::Who::Bystander: next.bystander = m.to; break;
      case Mover::Who::Assistant: next.assistant = m.to; break;
      case Mover::Who::Box:
        next.boxes[static_cast<std::size_t>(m.box_index)] = m.to;
        if (m.moving) {
          if (pushed) out.events.push_back({EventKind::BoxPushed, AgentId::Assistant});
          if (pulled) out.events.push_back({EventKind::BoxPulled, AgentId::Assistant});
        }
        break;
    }
  }

  // Keys and rewards.
  for (AgentId h : {AgentId::User, AgentId::Bystander}) {
    const auto key = l.key_of(h);
    bool& collected = (h == AgentId::User) ? next.key_user : next.key_bystander;
    if (key && !collected && next.pos(h) == *key) {
      collected = true;
      out.events.push_back({EventKind::KeyCollected, h});
    }
    const bool rewarded = next.pos(h) == l.goal_of(h) && (!l.requires_key() || collected);
    if (rewarded) {
      if (h == AgentId::User)
        out.reward_user = 1;
      else
        out.reward_bystander = 1;
      if (state.pos(h) != l.goal_of(h)) out.events.push_back({EventKind::GoalReached, h});
    }
  }

  next.freeze_timer = new_timer;
  next.t = state.t + 1;
  return out;
}

StepOutcome step(const GridState& state, const JointAction& action) {
  Rng rng(0);
  return step(state, action, rng);
}

std::vector<Layout> generate_variations(const Layout& base, std::uint64_t seed, bool shuffle) {
  // Open floor cells: not wall, box, or initial agent position. Key and goal
  // cells of the base are candidates too (they are being re-placed).
  std::vector<Cell> open;
  for (int y = 0; y < base.height; ++y)
    for (int x = 0; x < base.width; ++x) {
      const Cell c{x, y};
      if (base.wall(c)) continue;
      bool blocked = c == base.init_user || c == base.init_bystander ||
                     (base.init_assistant && *base.init_assistant == c);
      for (const Cell& b : base.boxes) blocked = blocked || b == c;
      if (!blocked) open.push_back(c);
    }
  if (open.empty())
    throw LayoutError(LayoutErrorCode::NoOpenCells, "no open cells for key/goal placement");

  // Placement structure follows the base layout: a shared key (or goal)
  // enumerates single cells, distinct ones enumerate ordered distinct pairs.
  const bool has_key = base.key_user.has_value();
  const bool shared_key = has_key && base.key_user == base.key_bystander;
  const bool shared_goal = base.goal_user == base.goal_bystander;

  std::vector<std::pair<std::optional<Cell>, std::optional<Cell>>> key_choices;
  if (!has_key) {
    key_choices.emplace_back(std::nullopt, std::nullopt);
  } else if (shared_key) {
    for (const Cell& c : open) key_choices.emplace_back(c, c);
  } else {
    for (const Cell& a : open)
      for (const Cell& b : open)
        if (!(a == b)) key_choices.emplace_back(a, b);
  }
  std::vector<std::pair<Cell, Cell>> goal_choices;
  if (shared_goal) {
    for (const Cell& c : open) goal_choices.emplace_back(c, c);
  } else {
    for (const Cell& a : open)
      for (const Cell& b : open)
        if (!(a == b)) goal_choices.emplace_back(a, b);
  }
  if (key_choices.empty() || goal_choices.empty())
    throw LayoutError(LayoutErrorCode::NoOpenCells, "not enough open cells for distinct placements");

  std::vector<Layout> variations;
  variations.reserve(key_choices.size() * goal_choices.size());
  int index = 0;
  for (const auto& [ku, kb] : key_choices)
    for (const auto& [gu, gb] : goal_choices) {
      Layout v = base;
      v.key_user = ku;
      v.key_bystander = kb;
      v.goal_user = gu;
      v.goal_bystander = gb;
      v.id = base.id + "_v" + std::to_string(index++);
      variations.push_back(std::move(v));
    }

  if (shuffle) {
    Rng rng(seed);
    for (std::size_t i = variations.size(); i > 1; --i)
      std::swap(variations[i - 1], variations[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);
  }
  return variations;
}

}  // namespace assistgrid
