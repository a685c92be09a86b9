#pragma once

// Ground-truth simulator of the plant protection world and the seeded
// problem generator used by the experiments.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "metagarden/logic.hpp"
#include "metagarden/pddl.hpp"

namespace metagarden {

inline constexpr int kMapSize = 10;
inline constexpr int kGardenMin = 2;
inline constexpr int kGardenMax = 7;
inline constexpr int kGardenCells = (kGardenMax - kGardenMin + 1) * (kGardenMax - kGardenMin + 1);

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(Cell, Cell) = default;
  friend auto operator<=>(Cell, Cell) = default;
};

inline bool on_map(Cell c) { return c.x >= 0 && c.y >= 0 && c.x < kMapSize && c.y < kMapSize; }
inline bool in_garden(Cell c) {
  return c.x >= kGardenMin && c.x <= kGardenMax && c.y >= kGardenMin && c.y <= kGardenMax;
}
inline int chebyshev(Cell a, Cell b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

/// The eight compass directions, in predicate-name order.
struct Direction {
  const char* predicate;
  int dx;
  int dy;
};
inline constexpr std::array<Direction, 8> kDirections{{
    {"adj_east", 1, 0},
    {"adj_ne", 1, 1},
    {"adj_north", 0, 1},
    {"adj_nw", -1, 1},
    {"adj_se", 1, -1},
    {"adj_south", 0, -1},
    {"adj_sw", -1, -1},
    {"adj_west", -1, 0},
}};

inline const Direction* find_direction(Symbol predicate) {
  for (const auto& d : kDirections) {
    if (predicate.name() == d.predicate) return &d;
  }
  return nullptr;
}

inline const Direction& opposite(const Direction& d) {
  for (const auto& o : kDirections) {
    if (o.dx == -d.dx && o.dy == -d.dy) return o;
  }
  return d;
}

inline std::vector<Cell> garden_cells() {
  std::vector<Cell> out;
  for (int x = kGardenMin; x <= kGardenMax; ++x) {
    for (int y = kGardenMin; y <= kGardenMax; ++y) out.push_back({x, y});
  }
  return out;
}

/// "pos3-3" for (3, 3).
inline Symbol cell_symbol(Cell c) {
  static const auto table = [] {
    std::array<Symbol, kMapSize * kMapSize> t;
    for (int x = 0; x < kMapSize; ++x) {
      for (int y = 0; y < kMapSize; ++y) {
        t[x * kMapSize + y] = Symbol("pos" + std::to_string(x) + "-" + std::to_string(y));
      }
    }
    return t;
  }();
  if (on_map(c)) return table[c.x * kMapSize + c.y];
  return Symbol("pos" + std::to_string(c.x) + "-" + std::to_string(c.y));
}

inline std::optional<Cell> parse_cell(Symbol s) {
  const auto& n = s.name();
  if (n.size() < 6 || n.compare(0, 3, "pos") != 0) return std::nullopt;
  auto dash = n.find('-', 3);
  if (dash == std::string::npos) return std::nullopt;
  Cell c;
  auto r1 = std::from_chars(n.data() + 3, n.data() + dash, c.x);
  auto r2 = std::from_chars(n.data() + dash + 1, n.data() + n.size(), c.y);
  if (r1.ec != std::errc{} || r1.ptr != n.data() + dash || r2.ec != std::errc{} ||
      r2.ptr != n.data() + n.size()) {
    return std::nullopt;
  }
  return c;
}

namespace garden_pred {
inline const Symbol kAgentAt{"agent-at"};
inline const Symbol kNativeAt{"native-at"};
inline const Symbol kInvasiveAt{"invasive-at"};
inline const Symbol kInGarden{"in-garden"};
inline const Symbol kConnected{"connected"};
inline const Symbol kOtherAgentAt{"other-agent-at"};
inline const Symbol kMapgrid{"mapgrid"};
inline const Symbol kMove{"move"};
inline const Symbol kSpray{"spray"};
}  // namespace garden_pred

enum class PlantKind { kNative, kInvasive };

struct GardenWorld {
  Cell agent{0, 0};
  std::map<Cell, PlantKind> plants;
  int clock = 0;

  friend bool operator==(const GardenWorld&, const GardenWorld&) = default;
};

struct WorldAction {
  enum class Kind { kMove, kSpray };
  Kind kind = Kind::kSpray;
  Cell target{};

  static WorldAction move(Cell to) { return {Kind::kMove, to}; }
  static WorldAction spray() { return {Kind::kSpray, {}}; }
};

struct StepResult {
  GardenWorld world;
  std::optional<std::string> rejection;
  std::vector<Cell> killed;

  bool ok() const { return !rejection; }
};

/// Moves are unit orthogonal steps; spraying kills every plant in the 3x3
/// neighbourhood of the agent's cell and is only legal inside the garden.
inline StepResult env_step(const GardenWorld& w, const WorldAction& a) {
  StepResult r{w, std::nullopt, {}};
  if (a.kind == WorldAction::Kind::kMove) {
    if (!on_map(a.target)) {
      r.rejection = "move target off the map";
    } else if (std::abs(a.target.x - w.agent.x) + std::abs(a.target.y - w.agent.y) != 1) {
      r.rejection = "move target is not orthogonally adjacent";
    } else {
      r.world.agent = a.target;
    }
  } else if (!in_garden(w.agent)) {
    r.rejection = "cannot spray outside the garden";
  } else {
    for (auto it = r.world.plants.begin(); it != r.world.plants.end();) {
      if (chebyshev(it->first, w.agent) <= 1) {
        r.killed.push_back(it->first);
        it = r.world.plants.erase(it);
      } else {
        ++it;
      }
    }
  }
  if (r.ok()) ++r.world.clock;
  return r;
}

/// Adjacency, garden-membership and connectivity facts. They never change.
inline const State& static_facts() {
  static const State facts = [] {
    using namespace garden_pred;
    std::vector<Atom> out;
    for (int x = 0; x < kMapSize; ++x) {
      for (int y = 0; y < kMapSize; ++y) {
        Cell c{x, y};
        if (in_garden(c)) out.push_back(Atom(kInGarden, {cell_symbol(c)}));
        for (const auto& d : kDirections) {
          Cell n{x + d.dx, y + d.dy};
          if (!on_map(n)) continue;
          out.push_back(Atom(Symbol(d.predicate), {cell_symbol(c), cell_symbol(n)}));
          if (d.dx == 0 || d.dy == 0) out.push_back(Atom(kConnected, {cell_symbol(c), cell_symbol(n)}));
        }
      }
    }
    return State(std::move(out));
  }();
  return facts;
}

inline bool is_plant_atom(const Atom& a) {
  return a.predicate() == garden_pred::kNativeAt || a.predicate() == garden_pred::kInvasiveAt;
}

/// Only the facts that change: agent position and plants.
inline State fluent_facts(const GardenWorld& w) {
  using namespace garden_pred;
  std::vector<Atom> out;
  out.push_back(Atom(kAgentAt, {cell_symbol(w.agent)}));
  for (const auto& [c, k] : w.plants) {
    out.push_back(Atom(k == PlantKind::kNative ? kNativeAt : kInvasiveAt, {cell_symbol(c)}));
  }
  return State(std::move(out));
}

inline bool is_fluent_atom(const Atom& a) {
  return a.predicate() == garden_pred::kAgentAt || is_plant_atom(a);
}

inline State observe(const GardenWorld& w) {
  State s = static_facts();
  for (const auto& a : fluent_facts(w)) s.insert(a);
  return s;
}

/// Invasives that some legal spray removes without touching a native.
inline std::set<Cell> safe_kill_oracle(const GardenWorld& w) {
  std::set<Cell> out;
  for (const auto& [q, kind] : w.plants) {
    if (kind != PlantKind::kInvasive) continue;
    for (Cell c : garden_cells()) {
      if (chebyshev(c, q) > 1) continue;
      bool hits_native = std::any_of(w.plants.begin(), w.plants.end(), [&](const auto& p) {
        return p.second == PlantKind::kNative && chebyshev(c, p.first) <= 1;
      });
      if (!hits_native) {
        out.insert(q);
        break;
      }
    }
  }
  return out;
}

struct ProblemSpec {
  std::uint64_t seed = 0;
  int n_goals = 1;
  double ratio = 0.75;
};

struct GardenProblem {
  GardenWorld world;
  GoalFormula goals;
};

inline int native_count(int n_goals, double ratio) {
  return static_cast<int>(std::floor(ratio * n_goals + 0.5));
}

inline GoalFormula goals_for(const GardenWorld& w) {
  using namespace garden_pred;
  GoalFormula g;
  for (const auto& [c, k] : w.plants) {
    if (k == PlantKind::kNative) g.add({Atom(kNativeAt, {cell_symbol(c)}), true});
  }
  for (const auto& [c, k] : w.plants) {
    if (k == PlantKind::kInvasive) g.add({Atom(kInvasiveAt, {cell_symbol(c)}), false});
  }
  return g;
}

/// Places natives then invasives on distinct garden cells drawn by a
/// Fisher-Yates shuffle driven by mt19937_64 (index = draw % remaining), so
/// layouts are identical across platforms for a given seed.
inline GardenProblem generate_problem(const ProblemSpec& spec) {
  if (spec.n_goals < 0 || spec.n_goals > kGardenCells) {
    throw ContractViolation("n_goals must fit in the " + std::to_string(kGardenCells) + " garden cells");
  }
  if (!(spec.ratio >= 0.0 && spec.ratio <= 1.0)) throw ContractViolation("ratio must lie in [0, 1]");
  std::mt19937_64 rng(spec.seed);
  auto cells = garden_cells();
  for (std::size_t i = cells.size() - 1; i > 0; --i) {
    std::swap(cells[i], cells[rng() % (i + 1)]);
  }
  int natives = native_count(spec.n_goals, spec.ratio);
  GardenProblem p;
  for (int i = 0; i < spec.n_goals; ++i) {
    p.world.plants[cells[i]] = i < natives ? PlantKind::kNative : PlantKind::kInvasive;
  }
  p.goals = goals_for(p.world);
  return p;
}

/// The small layout used as a running example: agent at the origin, a
/// native at (3,3), invasives at (2,5) and (3,2).
inline GardenProblem hazard_problem() {
  GardenProblem p;
  p.world.plants[{3, 3}] = PlantKind::kNative;
  p.world.plants[{2, 5}] = PlantKind::kInvasive;
  p.world.plants[{3, 2}] = PlantKind::kInvasive;
  using namespace garden_pred;
  p.goals = GoalFormula{{Atom(kNativeAt, {cell_symbol({3, 3})}), true},
                        {Atom(kInvasiveAt, {cell_symbol({2, 5})}), false},
                        {Atom(kInvasiveAt, {cell_symbol({3, 2})}), false}};
  return p;
}

inline std::vector<Object> garden_objects() {
  std::vector<Object> out;
  for (int x = 0; x < kMapSize; ++x) {
    for (int y = 0; y < kMapSize; ++y) out.push_back({cell_symbol({x, y}), garden_pred::kMapgrid});
  }
  return out;
}

inline Problem make_problem(const State& init, const GoalFormula& goal, std::string_view name = "garden-task") {
  Problem p;
  p.name = Symbol(name);
  p.domain_name = Symbol("garden");
  p.objects = garden_objects();
  p.init = init;
  p.goal = goal;
  return p;
}

/// Translates a ground garden action to the simulator's action.
inline std::optional<WorldAction> to_world_action(Symbol schema, const std::vector<Symbol>& args,
                                                  const GardenWorld& w) {
  if (schema == garden_pred::kMove && args.size() == 2) {
    auto to = parse_cell(args[1]);
    auto from = parse_cell(args[0]);
    if (!to || !from || *from != w.agent) return std::nullopt;
    return WorldAction::move(*to);
  }
  if (schema == garden_pred::kSpray && args.size() == 1) {
    auto at = parse_cell(args[0]);
    if (!at || *at != w.agent) return std::nullopt;
    return WorldAction::spray();
  }
  return std::nullopt;
}

}  // namespace metagarden
