#pragma once

// Action-model repair: harvest labelled kill examples from executed sprays,
// induce function-free Horn clauses with FOIL, turn them into conditional
// effects and patch the spray schema.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "metagarden/cognitive.hpp"
#include "metagarden/garden.hpp"
#include "metagarden/pddl.hpp"
#include "metagarden/trace.hpp"

namespace metagarden {

// --- example store ----------------------------------------------------------

struct Example {
  Cell cell;
  int time = 0;
  bool positive = false;
  friend bool operator==(const Example&, const Example&) = default;
};

struct SprayEvent {
  Cell cell;
  int time = 0;
  friend bool operator==(const SprayEvent&, const SprayEvent&) = default;
};

/// Cumulative evidence. Times are global: each episode gets its own block.
class ExampleStore {
 public:
  void add(const Example& e) { examples_.push_back(e); }
  void add_spray(const SprayEvent& s) { sprays_.push_back(s); }

  const std::vector<Example>& examples() const { return examples_; }
  const std::vector<SprayEvent>& sprays() const { return sprays_; }
  std::size_t positives() const {
    return static_cast<std::size_t>(std::count_if(examples_.begin(), examples_.end(), [](auto& e) { return e.positive; }));
  }
  std::size_t negatives() const { return examples_.size() - positives(); }

  int time_base = 0;

  /// Times referenced by sprays or examples, ascending.
  std::vector<int> mentioned_times() const {
    std::set<int> ts;
    for (const auto& s : sprays_) ts.insert(s.time);
    for (const auto& e : examples_) ts.insert(e.time);
    return {ts.begin(), ts.end()};
  }

  /// One fact per line: pos(x,y,t,label), spray(x,y,t), adj_time(t2,t1) and
  /// adj_D(x0,y0,x1,y1) over the whole map.
  void write_facts(std::ostream& os) const {
    for (const auto& e : examples_) {
      os << "pos(" << e.cell.x << "," << e.cell.y << "," << e.time << "," << (e.positive ? "pos" : "neg") << ")\n";
    }
    for (const auto& s : sprays_) os << "spray(" << s.cell.x << "," << s.cell.y << "," << s.time << ")\n";
    auto ts = mentioned_times();
    for (std::size_t i = 1; i < ts.size(); ++i) {
      if (ts[i] == ts[i - 1] + 1) os << "adj_time(" << ts[i] << "," << ts[i - 1] << ")\n";
    }
    for (const auto& d : kDirections) {
      for (int x = 0; x < kMapSize; ++x) {
        for (int y = 0; y < kMapSize; ++y) {
          Cell to{x + d.dx, y + d.dy};
          if (on_map(to)) os << std::string(d.predicate) << "(" << x << "," << y << "," << to.x << "," << to.y << ")\n";
        }
      }
    }
  }

 private:
  std::vector<Example> examples_;
  std::vector<SprayEvent> sprays_;
};

inline State with_static_facts(const State& fluents) {
  std::vector<Atom> all(static_facts().begin(), static_facts().end());
  all.insert(all.end(), fluents.begin(), fluents.end());
  return State(std::move(all));
}

/// Scans trace actions from `cursor` for executed sprays. Each spray at c
/// adds spray(c, t); plants that died outside the believed kill set become
/// positives and survivors negatives, both at t + 1. `act_index` counts
/// executed actions seen so far in the episode and is advanced in place.
/// Stops early at a spray whose following observation is not yet recorded.
/// Returns the new cursor.
inline std::size_t harvest_examples(const Trace& trace, std::size_t cursor, int& act_index,
                                    const GroundingCache::Entry& believed, ExampleStore& store) {
  const auto& acts = trace.actions();
  const auto& states = trace.states();
  for (; cursor < acts.size(); ++cursor) {
    if (acts[cursor] != MentalAction::kAct) continue;
    const auto& pre = states[cursor];
    const auto& post = states[cursor + 1];
    bool executed = post.plan == pre.plan && post.plan_cursor == pre.plan_cursor + 1 && post.last_action;
    if (!executed) continue;
    if (post.last_action->schema != garden_pred::kSpray) {
      ++act_index;
      continue;
    }
    std::size_t next = cursor + 1;
    while (next < acts.size() && acts[next] != MentalAction::kPerceive) ++next;
    if (next >= acts.size()) break;
    const State& before = pre.believed;
    const State& after = states[next + 1].believed;

    auto at = parse_cell(post.last_action->args.at(0));
    if (!at) throw ContractViolation("spray target is not a map cell");
    int t = store.time_base + act_index;
    store.add_spray({*at, t});
    auto expected = believed_kill_set(believed, with_static_facts(before), *at);
    for (const auto& f : before) {
      if (!is_plant_atom(f)) continue;
      auto c = parse_cell(f.arg(0));
      if (after.contains(f)) {
        store.add({*c, t + 1, false});
      } else if (std::find(expected.begin(), expected.end(), f) == expected.end()) {
        store.add({*c, t + 1, true});
      }
    }
    ++act_index;
  }
  return cursor;
}

// --- FOIL -------------------------------------------------------------------

enum class ArgType { kPos, kTime };

struct Var {
  ArgType type;
  int index;
  std::string str() const { return (type == ArgType::kPos ? "pos" : "time") + std::to_string(index); }
  friend bool operator==(const Var&, const Var&) = default;
};

struct BodyLiteral {
  std::string predicate;
  std::vector<Var> args;

  std::string str() const {
    std::string out = predicate + "(";
    for (std::size_t i = 0; i < args.size(); ++i) out += (i ? "," : "") + args[i].str();
    return out + ")";
  }
  friend bool operator==(const BodyLiteral&, const BodyLiteral&) = default;
};

struct HornClause {
  BodyLiteral head;
  std::vector<BodyLiteral> body;

  /// "spray(pos1,time2) :- spray(pos0,time1), adj_time(time2,time1), ..."
  std::string str() const {
    std::string out = head.str();
    for (std::size_t i = 0; i < body.size(); ++i) out += (i ? ", " : " :- ") + body[i].str();
    return out;
  }
  friend bool operator==(const HornClause&, const HornClause&) = default;
};

struct FoilConfig {
  std::size_t max_body_length = 4;
};

struct FoilResult {
  std::vector<HornClause> clauses;
  bool complete = true;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double foil_gain(double p0, double n0, double p1, double n1, double t) {
  if (p0 <= 0) throw ContractViolation("foil_gain requires p0 > 0");
  if (p1 <= 0) return kNegInf;
  return t * (std::log2(p1 / (p1 + n1)) - std::log2(p0 / (p0 + n0)));
}

namespace foil_detail {

inline int cell_code(Cell c) { return c.x * kMapSize + c.y; }

/// Binary relation with both-direction indices.
struct Relation {
  std::string name;
  ArgType a, b;
  std::unordered_map<int, std::vector<int>> by_first, by_second;
  std::set<std::pair<int, int>> pairs;

  void add(int x, int y) {
    if (!pairs.emplace(x, y).second) return;
    by_first[x].push_back(y);
    by_second[y].push_back(x);
  }
  bool contains(int x, int y) const { return pairs.contains({x, y}); }
  const std::vector<int>& seconds(int x) const {
    static const std::vector<int> none;
    auto it = by_first.find(x);
    return it == by_first.end() ? none : it->second;
  }
  const std::vector<int>& firsts(int y) const {
    static const std::vector<int> none;
    auto it = by_second.find(y);
    return it == by_second.end() ? none : it->second;
  }
};

/// Candidate predicates in tie-break order: spray, adj_time, then the eight
/// adjacency relations by name.
inline std::vector<Relation> background(const ExampleStore& store) {
  std::vector<Relation> rels;
  Relation spray{"spray", ArgType::kPos, ArgType::kTime, {}, {}, {}};
  for (const auto& s : store.sprays()) spray.add(cell_code(s.cell), s.time);
  rels.push_back(std::move(spray));
  Relation adj_time{"adj_time", ArgType::kTime, ArgType::kTime, {}, {}, {}};
  auto ts = store.mentioned_times();
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (ts[i] == ts[i - 1] + 1) adj_time.add(ts[i], ts[i - 1]);
  }
  rels.push_back(std::move(adj_time));
  for (const auto& d : kDirections) {
    Relation r{std::string(d.predicate), ArgType::kPos, ArgType::kPos, {}, {}, {}};
    for (int x = 0; x < kMapSize; ++x) {
      for (int y = 0; y < kMapSize; ++y) {
        Cell to{x + d.dx, y + d.dy};
        if (on_map(to)) r.add(cell_code({x, y}), cell_code(to));
      }
    }
    rels.push_back(std::move(r));
  }
  return rels;
}

struct Tuple {
  std::vector<int> values;
  std::size_t origin;
};

/// A literal over variable slots; slot == -1 marks the new variable.
struct Candidate {
  std::size_t relation;
  std::array<int, 2> slots;
};

struct Extension {
  std::vector<Tuple> pos, neg;
  std::size_t pos_origins = 0;  // positive tuples with at least one extension
  bool determinate = false;
};

inline void extend(const Relation& r, const Candidate& c, const std::vector<Tuple>& in, std::vector<Tuple>& out,
                   std::size_t& survivors, bool& at_most_one, bool& exactly_one) {
  for (const auto& t : in) {
    std::size_t n = 0;
    if (c.slots[0] >= 0 && c.slots[1] >= 0) {
      if (r.contains(t.values[c.slots[0]], t.values[c.slots[1]])) {
        out.push_back(t);
        n = 1;
      }
    } else {
      const auto& vals = c.slots[0] >= 0 ? r.seconds(t.values[c.slots[0]]) : r.firsts(t.values[c.slots[1]]);
      for (int v : vals) {
        Tuple e = t;
        e.values.push_back(v);
        out.push_back(std::move(e));
      }
      n = vals.size();
    }
    if (n > 0) ++survivors;
    if (n > 1) at_most_one = false;
    if (n != 1) exactly_one = false;
  }
}

inline Extension apply(const Relation& r, const Candidate& c, const std::vector<Tuple>& pos,
                       const std::vector<Tuple>& neg) {
  Extension e;
  bool pos_le1 = true, pos_eq1 = true, neg_le1 = true, neg_eq1 = true;
  extend(r, c, pos, e.pos, e.pos_origins, pos_le1, pos_eq1);
  std::size_t neg_survivors = 0;
  extend(r, c, neg, e.neg, neg_survivors, neg_le1, neg_eq1);
  bool introduces = c.slots[0] < 0 || c.slots[1] < 0;
  e.determinate = introduces && pos_eq1 && neg_le1;
  return e;
}

/// The new variable duplicates an existing one of the same type everywhere.
inline bool redundant(const Extension& e, const std::vector<Var>& vars, ArgType type) {
  std::size_t fresh = vars.size();
  for (std::size_t v = 0; v < vars.size(); ++v) {
    if (vars[v].type != type) continue;
    auto same = [&](const std::vector<Tuple>& ts) {
      return std::all_of(ts.begin(), ts.end(), [&](const Tuple& t) { return t.values[v] == t.values[fresh]; });
    };
    if (same(e.pos) && same(e.neg)) return true;
  }
  return false;
}

inline Var fresh_var(const std::vector<Var>& vars, ArgType type) {
  std::set<int> used;
  for (const auto& v : vars) {
    if (v.type == type) used.insert(v.index);
  }
  if (used.empty()) return {type, 0};
  int lo = *used.begin();
  if (lo > 0) return {type, lo - 1};
  return {type, *used.rbegin() + 1};
}

/// Argument placements in lexicographic order: each slot takes an existing
/// variable of its type (in variable order) or the new variable, which
/// comes last; the placement with no existing variable is skipped.
inline std::vector<Candidate> placements(const std::vector<Relation>& rels, const std::vector<Var>& vars) {
  std::vector<Candidate> out;
  for (std::size_t ri = 0; ri < rels.size(); ++ri) {
    const auto& r = rels[ri];
    auto options = [&](ArgType t) {
      std::vector<int> o;
      for (std::size_t v = 0; v < vars.size(); ++v) {
        if (vars[v].type == t) o.push_back(static_cast<int>(v));
      }
      std::sort(o.begin(), o.end(), [&](int a, int b) { return vars[a].index < vars[b].index; });
      o.push_back(-1);
      return o;
    };
    for (int a : options(r.a)) {
      for (int b : options(r.b)) {
        if (a < 0 && b < 0) continue;
        if (a >= 0 && b >= 0 && a == b) continue;
        out.push_back({ri, {a, b}});
      }
    }
  }
  return out;
}

}  // namespace foil_detail

/// Learns clauses for spray(pos, time) from the store's labelled examples.
inline FoilResult foil(const ExampleStore& store, const FoilConfig& cfg = {}) {
  using namespace foil_detail;
  FoilResult result;
  auto rels = background(store);
  std::vector<Tuple> all_pos, all_neg;
  for (const auto& e : store.examples()) {
    Tuple t{{cell_code(e.cell), e.time}, 0};
    if (e.positive) {
      t.origin = all_pos.size();
      all_pos.push_back(std::move(t));
    } else {
      t.origin = all_neg.size();
      all_neg.push_back(std::move(t));
    }
  }
  const std::vector<Var> head_vars{{ArgType::kPos, 1}, {ArgType::kTime, 2}};
  std::vector<bool> covered(all_pos.size(), false);
  std::size_t remaining = all_pos.size();

  while (remaining > 0) {
    std::vector<Tuple> pos, neg = all_neg;
    for (const auto& t : all_pos) {
      if (!covered[t.origin]) pos.push_back(t);
    }
    auto vars = head_vars;
    std::vector<std::pair<std::size_t, BodyLiteral>> body;

    while (!neg.empty() && body.size() < cfg.max_body_length) {
      auto cands = placements(rels, vars);
      double best_gain = 0.0;
      std::optional<std::size_t> best, first_det;
      std::vector<Extension> exts;
      exts.reserve(cands.size());
      for (std::size_t i = 0; i < cands.size(); ++i) {
        exts.push_back(apply(rels[cands[i].relation], cands[i], pos, neg));
        const auto& e = exts.back();
        double g = foil_gain(static_cast<double>(pos.size()), static_cast<double>(neg.size()),
                             static_cast<double>(e.pos.size()), static_cast<double>(e.neg.size()),
                             static_cast<double>(e.pos_origins));
        if (g > best_gain + 1e-12) {
          best_gain = g;
          best = i;
        }
        if (!first_det && e.determinate) {
          const auto& c = cands[i];
          const auto& r = rels[c.relation];
          ArgType nt = c.slots[0] < 0 ? r.a : r.b;
          if (!redundant(e, vars, nt)) first_det = i;
        }
      }
      auto pick = best ? best : first_det;
      if (!pick) break;
      const auto& c = cands[*pick];
      const auto& r = rels[c.relation];
      BodyLiteral lit{r.name, {}};
      Var nv{};
      bool introduces = c.slots[0] < 0 || c.slots[1] < 0;
      if (introduces) nv = fresh_var(vars, c.slots[0] < 0 ? r.a : r.b);
      for (int s : c.slots) lit.args.push_back(s < 0 ? nv : vars[s]);
      if (introduces) vars.push_back(nv);
      std::size_t rel_index = c.relation;
      if (const auto* d = find_direction(Symbol(lit.predicate)); d && lit.args[1].index < lit.args[0].index) {
        const auto& o = opposite(*d);
        lit.predicate = o.predicate;
        std::swap(lit.args[0], lit.args[1]);
        rel_index = static_cast<std::size_t>(std::find_if(rels.begin(), rels.end(), [&](auto& r) {
                                                return r.name == o.predicate;
                                              }) - rels.begin());
      }
      body.emplace_back(rel_index, std::move(lit));
      pos = std::move(exts[*pick].pos);
      neg = std::move(exts[*pick].neg);
    }

    std::set<std::size_t> newly;
    for (const auto& t : pos) newly.insert(t.origin);
    if (!neg.empty() || newly.empty()) {
      result.complete = false;
      break;
    }
    std::stable_sort(body.begin(), body.end(), [](auto& a, auto& b) { return a.first < b.first; });
    HornClause clause{{"spray", head_vars}, {}};
    for (auto& [ri, lit] : body) clause.body.push_back(std::move(lit));
    result.clauses.push_back(std::move(clause));
    for (auto o : newly) {
      covered[o] = true;
      --remaining;
    }
  }
  return result;
}

/// True iff `clause` derives spray(cell, time) from the store's background.
inline bool clause_covers(const HornClause& clause, const ExampleStore& store, Cell cell, int time) {
  using namespace foil_detail;
  auto rels = background(store);
  std::map<std::string, const Relation*> by_name;
  for (const auto& r : rels) by_name[r.name] = &r;
  std::vector<std::pair<std::string, int>> binding{{clause.head.args[0].str(), cell_code(cell)},
                                                   {clause.head.args[1].str(), time}};
  auto lookup = [&](const Var& v) -> std::optional<int> {
    for (auto& [k, val] : binding) {
      if (k == v.str()) return val;
    }
    return std::nullopt;
  };
  std::function<bool(std::size_t)> solve = [&](std::size_t i) -> bool {
    if (i == clause.body.size()) return true;
    const auto& lit = clause.body[i];
    auto it = by_name.find(lit.predicate);
    if (it == by_name.end()) return false;
    const auto& r = *it->second;
    auto a = lookup(lit.args[0]);
    auto b = lookup(lit.args[1]);
    if (a && b) return r.contains(*a, *b) && solve(i + 1);
    if (!a && !b) {
      for (const auto& [x, y] : r.pairs) {
        binding.push_back({lit.args[0].str(), x});
        binding.push_back({lit.args[1].str(), y});
        bool ok = solve(i + 1);
        binding.resize(binding.size() - 2);
        if (ok) return true;
      }
      return false;
    }
    const auto& vals = a ? r.seconds(*a) : r.firsts(*b);
    const auto& free = a ? lit.args[1] : lit.args[0];
    for (int v : vals) {
      binding.push_back({free.str(), v});
      bool ok = solve(i + 1);
      binding.pop_back();
      if (ok) return true;
    }
    return false;
  };
  return solve(0);
}

// --- compilation and repair -------------------------------------------------

inline ConditionalEffect neighbour_effect(const Direction& d) {
  const Symbol pos("?pos"), to("?to");
  return ConditionalEffect{{{pos, garden_pred::kMapgrid}},
                           {{Atom(Symbol(d.predicate), {to, pos}), true}},
                           {{Atom(garden_pred::kNativeAt, {pos}), false}, {Atom(garden_pred::kInvasiveAt, {pos}), false}}};
}

inline std::string effect_key(const ConditionalEffect& ce) {
  std::string k;
  for (const auto& l : ce.condition) k += l.str();
  for (const auto& l : ce.effects) k += l.str();
  return k;
}

/// Maps each clause's adjacency literal between the sprayed cell and the
/// head cell to a quantified conditional effect on spray's ?to. Clauses
/// without one are skipped and reported through `skipped`.
inline std::vector<ConditionalEffect> compile_effects(const std::vector<HornClause>& clauses,
                                                      std::vector<std::string>* skipped = nullptr) {
  std::map<std::string, ConditionalEffect> out;
  for (const auto& c : clauses) {
    const Var& head_pos = c.head.args.at(0);
    std::optional<Var> sprayed;
    for (const auto& l : c.body) {
      if (l.predicate == "spray" && !(l.args[0] == head_pos)) sprayed = l.args[0];
    }
    const Direction* dir = nullptr;
    for (const auto& l : c.body) {
      const auto* d = find_direction(Symbol(l.predicate));
      if (!d || !sprayed) continue;
      if (l.args[0] == *sprayed && l.args[1] == head_pos) {
        dir = d;
      } else if (l.args[0] == head_pos && l.args[1] == *sprayed) {
        dir = &opposite(*d);
      }
      if (dir) break;
    }
    if (!dir) {
      if (skipped) skipped->push_back(c.str());
      continue;
    }
    out.emplace(std::string(dir->predicate), neighbour_effect(*dir));
  }
  std::vector<ConditionalEffect> v;
  for (auto& [k, ce] : out) v.push_back(std::move(ce));
  return v;
}

struct UnknownOperator : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Copy of `d` whose `op` schema carries the union of its conditional
/// effects and `effects`, ordered by condition text.
inline Domain repair_operator(const Domain& d, Symbol op, const std::vector<ConditionalEffect>& effects) {
  Domain out = d;
  auto it = std::find_if(out.schemas.begin(), out.schemas.end(), [&](auto& s) { return s.name == op; });
  if (it == out.schemas.end()) throw UnknownOperator("no operator named " + op.name());
  std::map<std::string, ConditionalEffect> merged;
  for (const auto& ce : it->cond_effects) merged.emplace(effect_key(ce), ce);
  for (const auto& ce : effects) merged.emplace(effect_key(ce), ce);
  it->cond_effects.clear();
  for (auto& [k, ce] : merged) it->cond_effects.push_back(std::move(ce));
  return out;
}

/// Rendered domains installed by successive repairs.
class RepairLog {
 public:
  void append(const Domain& d) { entries_.push_back(render_domain(d)); }
  const std::vector<std::string>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  void write(std::ostream& os) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) os << "; repair " << i + 1 << "\n" << entries_[i];
  }

 private:
  std::vector<std::string> entries_;
};

struct LearningOutcome {
  bool learned = false;
  bool model_changed = false;
  FoilResult induction;
  std::vector<ConditionalEffect> effects;
};

/// The perform-learning executor. Owns the example store and the repair
/// log; both persist across episodes.
class RuleLearner {
 public:
  explicit RuleLearner(Domain base = garden_domain(), FoilConfig cfg = {}) : base_(std::move(base)), cfg_(cfg) {}

  void begin_episode() {
    cursor_ = 0;
    act_index_ = 0;
  }
  void end_episode(int steps) { store_.time_base += steps + 2; }

  /// Harvests the unseen part of `trace`, re-induces from the whole store
  /// and installs the repaired spray schema in `model`.
  LearningOutcome learn(const Trace& trace, AgentModel& model, GroundingCache& cache) {
    cursor_ = harvest_examples(trace, cursor_, act_index_, cache.get(model), store_);
    LearningOutcome out;
    if (store_.positives() == 0) return out;
    out.induction = foil(store_, cfg_);
    out.effects = compile_effects(out.induction.clauses);
    if (out.effects.empty()) return out;
    out.learned = true;
    Domain repaired = repair_operator(base_, garden_pred::kSpray, out.effects);
    if (!(repaired == model.domain())) {
      model.set_domain(repaired);
      log_.append(repaired);
      out.model_changed = true;
    }
    return out;
  }

  const ExampleStore& store() const { return store_; }
  ExampleStore& store() { return store_; }
  const RepairLog& repair_log() const { return log_; }
  const Domain& base_domain() const { return base_; }

 private:
  Domain base_;
  FoilConfig cfg_;
  ExampleStore store_;
  RepairLog log_;
  std::size_t cursor_ = 0;
  int act_index_ = 0;
};

}  // namespace metagarden
