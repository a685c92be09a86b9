#pragma once

// Ground relational logic: atoms, literals, closed-world states, goals.

#include <algorithm>
#include <array>
#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "metagarden/symbol.hpp"

namespace metagarden {

inline constexpr std::size_t kMaxArity = 4;

struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct SubstitutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Object {
  Symbol name;
  Symbol kind;

  friend bool operator==(const Object&, const Object&) = default;
};

/// Predicate applied to up to kMaxArity terms. Terms are objects or
/// variables (symbols spelled with a leading '?').
class Atom {
 public:
  Atom() = default;
  Atom(Symbol predicate, std::span<const Symbol> args) : predicate_(predicate) {
    if (args.size() > kMaxArity) {
      throw ContractViolation("atom arity exceeds " + std::to_string(kMaxArity));
    }
    arity_ = static_cast<std::uint8_t>(args.size());
    std::copy(args.begin(), args.end(), args_.begin());
  }
  Atom(Symbol predicate, std::initializer_list<Symbol> args)
      : Atom(predicate, std::span<const Symbol>(args.begin(), args.size())) {}
  Atom(std::string_view predicate, std::initializer_list<std::string_view> args)
      : predicate_(predicate), arity_(static_cast<std::uint8_t>(args.size())) {
    if (args.size() > kMaxArity) {
      throw ContractViolation("atom arity exceeds " + std::to_string(kMaxArity));
    }
    std::size_t i = 0;
    for (auto a : args) args_[i++] = Symbol(a);
  }

  Symbol predicate() const { return predicate_; }
  std::size_t arity() const { return arity_; }
  std::span<const Symbol> args() const { return {args_.data(), arity_}; }
  Symbol arg(std::size_t i) const { return args_[i]; }
  void set_arg(std::size_t i, Symbol s) { args_[i] = s; }

  bool is_ground() const {
    return std::none_of(args_.begin(), args_.begin() + arity_,
                        [](Symbol s) { return s.is_variable(); });
  }

  /// PDDL spelling: "(native-at pos3-3)".
  std::string str() const {
    std::string out = "(" + predicate_.name();
    for (auto a : args()) out += " " + a.name();
    return out + ")";
  }

  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom&, const Atom&) = default;

 private:
  Symbol predicate_;
  std::array<Symbol, kMaxArity> args_{};
  std::uint8_t arity_ = 0;
};

/// Name-based ordering for deterministic printing.
inline bool atom_less_by_name(const Atom& a, const Atom& b) {
  if (a.predicate() != b.predicate()) return a.predicate().name() < b.predicate().name();
  for (std::size_t i = 0; i < std::min(a.arity(), b.arity()); ++i) {
    if (a.arg(i) != b.arg(i)) return a.arg(i).name() < b.arg(i).name();
  }
  return a.arity() < b.arity();
}

struct Literal {
  Atom atom;
  bool positive = true;

  bool is_ground() const { return atom.is_ground(); }
  Literal negated() const { return {atom, !positive}; }
  std::string str() const { return positive ? atom.str() : "(not " + atom.str() + ")"; }

  friend bool operator==(const Literal&, const Literal&) = default;
  friend auto operator<=>(const Literal&, const Literal&) = default;
};

/// Closed-world set of ground atoms, stored sorted.
class State {
 public:
  State() = default;
  State(std::initializer_list<Atom> atoms) : facts_(atoms) { normalize(); }
  explicit State(std::vector<Atom> atoms) : facts_(std::move(atoms)) { normalize(); }

  bool contains(const Atom& a) const {
    return std::binary_search(facts_.begin(), facts_.end(), a);
  }
  bool insert(const Atom& a) {
    auto it = std::lower_bound(facts_.begin(), facts_.end(), a);
    if (it != facts_.end() && *it == a) return false;
    facts_.insert(it, a);
    return true;
  }
  bool erase(const Atom& a) {
    auto it = std::lower_bound(facts_.begin(), facts_.end(), a);
    if (it == facts_.end() || *it != a) return false;
    facts_.erase(it);
    return true;
  }

  std::size_t size() const { return facts_.size(); }
  bool empty() const { return facts_.empty(); }
  auto begin() const { return facts_.begin(); }
  auto end() const { return facts_.end(); }
  const std::vector<Atom>& facts() const { return facts_; }

  /// Facts whose predicate satisfies pred.
  template <class Pred>
  State filter(Pred&& pred) const {
    State out;
    std::copy_if(facts_.begin(), facts_.end(), std::back_inserter(out.facts_), pred);
    return out;
  }

  std::vector<Atom> sorted_by_name() const {
    auto v = facts_;
    std::sort(v.begin(), v.end(), atom_less_by_name);
    return v;
  }

  friend bool operator==(const State&, const State&) = default;

 private:
  void normalize() {
    std::sort(facts_.begin(), facts_.end());
    facts_.erase(std::unique(facts_.begin(), facts_.end()), facts_.end());
  }

  std::vector<Atom> facts_;
};

/// Conjunction of ground literals.
class GoalFormula {
 public:
  GoalFormula() = default;
  GoalFormula(std::initializer_list<Literal> lits) : GoalFormula(std::vector<Literal>(lits)) {}
  explicit GoalFormula(std::vector<Literal> lits) {
    for (auto& l : lits) add(l);
  }

  /// Adds a conjunct; duplicates are ignored, contradictions rejected.
  void add(const Literal& l) {
    if (std::find(conjuncts_.begin(), conjuncts_.end(), l) != conjuncts_.end()) return;
    if (std::find(conjuncts_.begin(), conjuncts_.end(), l.negated()) != conjuncts_.end()) {
      throw ContractViolation("contradictory goal conjuncts on " + l.atom.str());
    }
    conjuncts_.push_back(l);
  }

  const std::vector<Literal>& conjuncts() const { return conjuncts_; }
  std::size_t size() const { return conjuncts_.size(); }
  bool empty() const { return conjuncts_.empty(); }
  auto begin() const { return conjuncts_.begin(); }
  auto end() const { return conjuncts_.end(); }

  friend bool operator==(const GoalFormula&, const GoalFormula&) = default;

 private:
  std::vector<Literal> conjuncts_;
};

/// Variable -> object substitution.
class Binding {
 public:
  void bind(Symbol var, Symbol value) {
    for (auto& [k, v] : entries_) {
      if (k == var) {
        v = value;
        return;
      }
    }
    entries_.emplace_back(var, value);
  }
  std::optional<Symbol> lookup(Symbol var) const {
    for (const auto& [k, v] : entries_) {
      if (k == var) return v;
    }
    return std::nullopt;
  }
  bool empty() const { return entries_.empty(); }
  const auto& entries() const { return entries_; }

 private:
  std::vector<std::pair<Symbol, Symbol>> entries_;
};

struct DiscrepancySet {
  std::vector<Atom> missing;  // expected but not observed
  std::vector<Atom> extra;    // observed but not expected

  bool empty() const { return missing.empty() && extra.empty(); }
  friend bool operator==(const DiscrepancySet&, const DiscrepancySet&) = default;
};

inline bool holds(const State& s, const Literal& l) {
  return s.contains(l.atom) == l.positive;
}

inline bool entails(const State& s, const GoalFormula& g) {
  for (const auto& l : g) {
    if (!l.is_ground()) throw ContractViolation("non-ground goal conjunct " + l.str());
  }
  return std::all_of(g.begin(), g.end(), [&](const Literal& l) { return holds(s, l); });
}

inline DiscrepancySet diff_states(const State& expected, const State& observed) {
  DiscrepancySet d;
  std::set_difference(expected.begin(), expected.end(), observed.begin(), observed.end(),
                      std::back_inserter(d.missing));
  std::set_difference(observed.begin(), observed.end(), expected.begin(), expected.end(),
                      std::back_inserter(d.extra));
  return d;
}

inline Atom substitute(const Atom& a, const Binding& b) {
  Atom out = a;
  for (std::size_t i = 0; i < a.arity(); ++i) {
    Symbol t = a.arg(i);
    if (!t.is_variable()) continue;
    auto v = b.lookup(t);
    if (!v) throw SubstitutionError("unbound variable " + t.name() + " in " + a.str());
    out.set_arg(i, *v);
  }
  return out;
}

inline Literal substitute(const Literal& l, const Binding& b) {
  return {substitute(l.atom, b), l.positive};
}

}  // namespace metagarden

template <>
struct std::hash<metagarden::Atom> {
  std::size_t operator()(const metagarden::Atom& a) const noexcept {
    std::size_t h = a.predicate().id();
    for (auto s : a.args()) h = h * 1000003u ^ s.id();
    return h;
  }
};
