#pragma once

// Grounding and greedy best-first forward search for STRIPS tasks with
// (universally quantified) conditional effects.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "metagarden/logic.hpp"
#include "metagarden/pddl.hpp"

namespace metagarden {

struct InapplicableAction : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GroundEffectBlock {
  std::vector<Literal> condition;
  std::vector<Atom> adds;
  std::vector<Atom> dels;
  friend bool operator==(const GroundEffectBlock&, const GroundEffectBlock&) = default;
};

struct GroundAction {
  Symbol schema;
  std::vector<Symbol> args;
  std::vector<Literal> pre;
  std::vector<Atom> adds;
  std::vector<Atom> dels;
  std::vector<GroundEffectBlock> cond;

  /// "(spray pos3-2)"
  std::string str() const {
    std::string out = "(" + schema.name();
    for (auto a : args) out += " " + a.name();
    return out + ")";
  }

  friend bool operator==(const GroundAction&, const GroundAction&) = default;
};

struct GroundedTask {
  std::vector<GroundAction> actions;
  State init;
  GoalFormula goal;
};

struct Plan {
  std::vector<GroundAction> steps;

  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }
  friend bool operator==(const Plan&, const Plan&) = default;
};

struct SearchConfig {
  std::size_t node_cap = 200'000;
};

enum class PlanStatus { kSolved, kUnsolvable, kNodeLimit };

struct PlanResult {
  PlanStatus status = PlanStatus::kUnsolvable;
  Plan plan;
  std::size_t expanded = 0;
  std::size_t generated = 0;

  bool solved() const { return status == PlanStatus::kSolved; }
};

inline bool preconditions_hold(const State& s, const GroundAction& a) {
  return std::all_of(a.pre.begin(), a.pre.end(), [&](const Literal& l) { return holds(s, l); });
}

/// Applies `a` to `s`. Conditional triggers are evaluated against the
/// pre-state; deletes are applied before adds.
inline State successor(const State& s, const GroundAction& a) {
  if (!preconditions_hold(s, a)) {
    throw InapplicableAction("precondition of " + a.str() + " does not hold");
  }
  std::vector<const GroundEffectBlock*> fired;
  for (const auto& b : a.cond) {
    if (std::all_of(b.condition.begin(), b.condition.end(), [&](const Literal& l) { return holds(s, l); })) {
      fired.push_back(&b);
    }
  }
  State next = s;
  for (const auto& d : a.dels) next.erase(d);
  for (const auto* b : fired) {
    for (const auto& d : b->dels) next.erase(d);
  }
  for (const auto& ad : a.adds) next.insert(ad);
  for (const auto* b : fired) {
    for (const auto& ad : b->adds) next.insert(ad);
  }
  return next;
}

inline bool validate(const Plan& plan, const GroundedTask& task) {
  State s = task.init;
  for (const auto& step : plan.steps) {
    if (!preconditions_hold(s, step)) return false;
    s = successor(s, step);
  }
  return entails(s, task.goal);
}

namespace planner_detail {

/// Enumerates every type-consistent assignment of objects to `vars`.
inline void for_each_binding(const std::vector<TypedVar>& vars,
                             const std::vector<std::vector<Symbol>>& candidates, Binding base,
                             const std::function<void(const Binding&)>& fn, std::size_t i = 0) {
  if (i == vars.size()) {
    fn(base);
    return;
  }
  for (auto obj : candidates[i]) {
    Binding b = base;
    b.bind(vars[i].name, obj);
    for_each_binding(vars, candidates, std::move(b), fn, i + 1);
  }
}

inline std::vector<std::vector<Symbol>> candidates_for(const std::vector<TypedVar>& vars,
                                                       const Domain& d, const Problem& p) {
  std::vector<std::vector<Symbol>> out;
  for (const auto& v : vars) {
    std::vector<Symbol> objs;
    for (const auto& o : p.objects) {
      if (d.is_subtype(o.kind, v.type)) objs.push_back(o.name);
    }
    out.push_back(std::move(objs));
  }
  return out;
}

inline void split_effects(const std::vector<Literal>& lits, const Binding& b, std::vector<Atom>& adds,
                          std::vector<Atom>& dels) {
  for (const auto& l : lits) {
    auto g = substitute(l.atom, b);
    auto& target = l.positive ? adds : dels;
    if (std::find(target.begin(), target.end(), g) == target.end()) target.push_back(g);
  }
  // Under delete-before-add an atom both added and deleted ends up true.
  std::erase_if(dels, [&](const Atom& a) { return std::find(adds.begin(), adds.end(), a) != adds.end(); });
}

}  // namespace planner_detail

/// Predicates that appear in no effect of any schema.
inline std::unordered_set<Symbol> static_predicates(const Domain& d) {
  std::unordered_set<Symbol> fluent;
  for (const auto& s : d.schemas) {
    for (const auto& l : s.effects) fluent.insert(l.atom.predicate());
    for (const auto& ce : s.cond_effects) {
      for (const auto& l : ce.effects) fluent.insert(l.atom.predicate());
    }
  }
  std::unordered_set<Symbol> out;
  for (const auto& p : d.predicates) {
    if (!fluent.contains(p.name)) out.insert(p.name);
  }
  return out;
}

/// One ground action per type-consistent parameter binding. Quantified
/// conditional effects are expanded over all objects of the quantified
/// types; blocks whose static condition is false in the initial state are
/// dropped and satisfied static condition literals are removed.
inline GroundedTask ground(const Domain& d, const Problem& p) {
  using namespace planner_detail;
  GroundedTask task{{}, p.init, p.goal};
  auto statics = static_predicates(d);
  for (const auto& schema : d.schemas) {
    auto cands = candidates_for(schema.params, d, p);
    std::vector<std::vector<std::vector<Symbol>>> ce_cands;
    for (const auto& ce : schema.cond_effects) ce_cands.push_back(candidates_for(ce.quantified, d, p));
    for_each_binding(schema.params, cands, Binding{}, [&](const Binding& b) {
      GroundAction a;
      a.schema = schema.name;
      for (const auto& v : schema.params) a.args.push_back(*b.lookup(v.name));
      for (const auto& l : schema.precondition) a.pre.push_back(substitute(l, b));
      split_effects(schema.effects, b, a.adds, a.dels);
      for (std::size_t k = 0; k < schema.cond_effects.size(); ++k) {
        const auto& ce = schema.cond_effects[k];
        for_each_binding(ce.quantified, ce_cands[k], b, [&](const Binding& qb) {
          GroundEffectBlock blk;
          for (const auto& l : ce.condition) {
            auto g = substitute(l, qb);
            if (statics.contains(g.atom.predicate())) {
              if (!holds(p.init, g)) return;
              continue;
            }
            blk.condition.push_back(g);
          }
          split_effects(ce.effects, qb, blk.adds, blk.dels);
          a.cond.push_back(std::move(blk));
        });
      }
      task.actions.push_back(std::move(a));
    });
  }
  return task;
}

/// Compiled form of a grounded action set: fluent atoms become bit indices,
/// static literals are resolved against a reference initial state, and
/// actions with false static preconditions are pruned. Reusable across
/// searches whose initial states share that static part.
class SearchSpace {
 public:
  SearchSpace(const std::vector<GroundAction>& actions, const State& reference_init) : source_(actions) {
    for (const auto& a : actions) {
      for (const auto& x : a.adds) intern(x);
      for (const auto& x : a.dels) intern(x);
      for (const auto& b : a.cond) {
        for (const auto& x : b.adds) intern(x);
        for (const auto& x : b.dels) intern(x);
      }
    }
    std::unordered_set<Symbol> fluent_preds;
    for (const auto& a : fluents_) fluent_preds.insert(a.predicate());
    for (const auto& a : actions) {
      for (const auto& l : a.pre) {
        if (fluent_preds.contains(l.atom.predicate())) intern(l.atom);
      }
      for (const auto& b : a.cond) {
        for (const auto& l : b.condition) {
          if (fluent_preds.contains(l.atom.predicate())) intern(l.atom);
        }
      }
    }
    words_ = (fluents_.size() + 63) / 64;
    addable_.assign(words_, 0);
    deletable_.assign(words_, 0);
    triggered_.resize(fluents_.size());

    for (std::size_t ai = 0; ai < actions.size(); ++ai) {
      const auto& a = actions[ai];
      Compiled c;
      c.source = static_cast<std::uint32_t>(ai);
      bool viable = true;
      for (const auto& l : a.pre) {
        auto idx = index_of(l.atom);
        if (idx < 0) {
          if (!holds(reference_init, l)) viable = false;
          continue;
        }
        (l.positive ? c.pre_pos : c.pre_neg).push_back(idx);
      }
      if (!viable) continue;
      for (const auto& x : a.adds) c.adds.push_back(index_of(x));
      for (const auto& x : a.dels) c.dels.push_back(index_of(x));
      for (const auto& b : a.cond) {
        CompiledBlock cb;
        bool live = true;
        for (const auto& l : b.condition) {
          auto idx = index_of(l.atom);
          if (idx < 0) {
            if (!holds(reference_init, l)) live = false;
            continue;
          }
          (l.positive ? cb.pos : cb.neg).push_back(idx);
        }
        if (!live) continue;
        for (const auto& x : b.adds) cb.adds.push_back(index_of(x));
        for (const auto& x : b.dels) cb.dels.push_back(index_of(x));
        c.cond.push_back(std::move(cb));
      }
      auto mark = [&](std::vector<std::uint64_t>& bits, const std::vector<int>& idx) {
        for (int i : idx) bits[i / 64] |= std::uint64_t{1} << (i % 64);
      };
      mark(addable_, c.adds);
      mark(deletable_, c.dels);
      for (const auto& cb : c.cond) {
        mark(addable_, cb.adds);
        mark(deletable_, cb.dels);
      }
      auto slot = static_cast<std::uint32_t>(compiled_.size());
      if (c.pre_pos.empty()) {
        untriggered_.push_back(slot);
      } else {
        triggered_[c.pre_pos.front()].push_back(slot);
      }
      compiled_.push_back(std::move(c));
    }
  }

  std::size_t fluent_count() const { return fluents_.size(); }
  std::size_t viable_action_count() const { return compiled_.size(); }

  PlanResult search(const State& init, const GoalFormula& goal, const SearchConfig& cfg) const {
    if (cfg.node_cap == 0) throw ContractViolation("node_cap must be positive");
    PlanResult result;
    std::vector<int> goal_pos, goal_neg;
    for (const auto& l : goal) {
      if (!l.is_ground()) throw ContractViolation("non-ground goal conjunct " + l.str());
      auto idx = index_of(l.atom);
      if (idx < 0) {
        if (!holds(init, l)) return result;  // static goal literal is false forever
        continue;
      }
      (l.positive ? goal_pos : goal_neg).push_back(idx);
    }

    Pool pool{words_, {}};
    std::vector<std::uint64_t> bits(words_, 0);
    for (const auto& a : init) {
      auto idx = index_of(a);
      if (idx >= 0) set(bits.data(), idx);
    }

    auto h_of = [&](const std::uint64_t* s) {
      int h = 0;
      for (int i : goal_pos) h += !test(s, i);
      for (int i : goal_neg) h += test(s, i);
      return h;
    };
    auto dead_end = [&](const std::uint64_t* s) {
      for (int i : goal_pos) {
        if (!test(s, i) && !test(addable_.data(), i)) return true;
      }
      for (int i : goal_neg) {
        if (test(s, i) && !test(deletable_.data(), i)) return true;
      }
      return false;
    };

    struct Node {
      std::uint32_t parent;
      std::uint32_t action;
    };
    std::vector<Node> nodes;
    auto hash = [&](std::uint32_t id) { return pool.hash(id); };
    auto eq = [&](std::uint32_t a, std::uint32_t b) { return pool.equal(a, b); };
    std::unordered_set<std::uint32_t, decltype(hash), decltype(eq)> seen(1024, hash, eq);

    auto extract = [&](std::uint32_t id) {
      std::vector<std::uint32_t> rev;
      while (nodes[id].parent != id) {
        rev.push_back(nodes[id].action);
        id = nodes[id].parent;
      }
      for (auto it = rev.rbegin(); it != rev.rend(); ++it) result.plan.steps.push_back(source_[*it]);
      result.status = PlanStatus::kSolved;
    };

    pool.push(bits.data());
    nodes.push_back({0, 0});
    seen.insert(0);
    int h0 = h_of(pool.at(0));
    if (h0 == 0) {
      result.status = PlanStatus::kSolved;
      return result;
    }
    if (dead_end(pool.at(0))) return result;

    std::vector<std::deque<std::uint32_t>> open(goal_pos.size() + goal_neg.size() + 1);
    open[h0].push_back(0);
    std::vector<std::uint32_t> applicable;
    std::vector<std::uint64_t> next(words_);

    for (;;) {
      auto bucket = std::find_if(open.begin(), open.end(), [](auto& q) { return !q.empty(); });
      if (bucket == open.end()) return result;
      std::uint32_t id = bucket->front();
      bucket->pop_front();
      ++result.expanded;

      const std::uint64_t* cur = pool.at(id);
      applicable.clear();
      for (auto slot : untriggered_) {
        if (applicable_in(compiled_[slot], cur)) applicable.push_back(slot);
      }
      for (std::size_t w = 0; w < words_; ++w) {
        for (std::uint64_t word = cur[w]; word; word &= word - 1) {
          int bit = static_cast<int>(w * 64 + __builtin_ctzll(word));
          for (auto slot : triggered_[bit]) {
            if (applicable_in(compiled_[slot], cur)) applicable.push_back(slot);
          }
        }
      }
      std::sort(applicable.begin(), applicable.end());

      for (auto slot : applicable) {
        apply(compiled_[slot], pool.at(id), next.data());
        auto nid = static_cast<std::uint32_t>(nodes.size());
        pool.push(next.data());
        if (!seen.insert(nid).second) {
          pool.pop();
          continue;
        }
        nodes.push_back({id, compiled_[slot].source});
        ++result.generated;
        const std::uint64_t* ns = pool.at(nid);
        int h = h_of(ns);
        if (h == 0) {
          extract(nid);
          return result;
        }
        if (nodes.size() > cfg.node_cap) {
          result.status = PlanStatus::kNodeLimit;
          return result;
        }
        if (!dead_end(ns)) open[h].push_back(nid);
      }
    }
  }

 private:
  struct CompiledBlock {
    std::vector<int> pos, neg, adds, dels;
  };
  struct Compiled {
    std::uint32_t source = 0;
    std::vector<int> pre_pos, pre_neg, adds, dels;
    std::vector<CompiledBlock> cond;
  };

  struct Pool {
    std::size_t words;
    std::vector<std::uint64_t> data;
    void push(const std::uint64_t* s) { data.insert(data.end(), s, s + words); }
    void pop() { data.resize(data.size() - words); }
    const std::uint64_t* at(std::uint32_t id) const { return data.data() + id * words; }
    std::size_t hash(std::uint32_t id) const {
      std::uint64_t h = 1469598103934665603ull;
      for (std::size_t i = 0; i < words; ++i) h = (h ^ at(id)[i]) * 1099511628211ull;
      return static_cast<std::size_t>(h ^ (h >> 29));
    }
    bool equal(std::uint32_t a, std::uint32_t b) const {
      return std::equal(at(a), at(a) + words, at(b));
    }
  };

  static bool test(const std::uint64_t* s, int i) { return (s[i / 64] >> (i % 64)) & 1u; }
  static void set(std::uint64_t* s, int i) { s[i / 64] |= std::uint64_t{1} << (i % 64); }
  static void clear(std::uint64_t* s, int i) { s[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }

  bool applicable_in(const Compiled& c, const std::uint64_t* s) const {
    for (int i : c.pre_pos) {
      if (!test(s, i)) return false;
    }
    for (int i : c.pre_neg) {
      if (test(s, i)) return false;
    }
    return true;
  }

  void apply(const Compiled& c, const std::uint64_t* s, std::uint64_t* out) const {
    std::copy(s, s + words_, out);
    auto fires = [&](const CompiledBlock& b) {
      for (int i : b.pos) {
        if (!test(s, i)) return false;
      }
      for (int i : b.neg) {
        if (test(s, i)) return false;
      }
      return true;
    };
    thread_local std::vector<const CompiledBlock*> fired;
    fired.clear();
    for (const auto& b : c.cond) {
      if (fires(b)) fired.push_back(&b);
    }
    for (int i : c.dels) clear(out, i);
    for (const auto* b : fired) {
      for (int i : b->dels) clear(out, i);
    }
    for (int i : c.adds) set(out, i);
    for (const auto* b : fired) {
      for (int i : b->adds) set(out, i);
    }
  }

  void intern(const Atom& a) {
    if (index_.contains(a)) return;
    index_.emplace(a, static_cast<int>(fluents_.size()));
    fluents_.push_back(a);
  }
  int index_of(const Atom& a) const {
    auto it = index_.find(a);
    return it == index_.end() ? -1 : it->second;
  }

  std::vector<GroundAction> source_;
  std::vector<Atom> fluents_;
  std::unordered_map<Atom, int> index_;
  std::size_t words_ = 0;
  std::vector<Compiled> compiled_;
  std::vector<std::vector<std::uint32_t>> triggered_;
  std::vector<std::uint32_t> untriggered_;
  std::vector<std::uint64_t> addable_, deletable_;
};

/// Greedy best-first search with the goal-count heuristic, FIFO tie-break
/// and duplicate-state pruning.
inline PlanResult plan(const GroundedTask& task, const SearchConfig& cfg = {}) {
  return SearchSpace(task.actions, task.init).search(task.init, task.goal, cfg);
}

}  // namespace metagarden
