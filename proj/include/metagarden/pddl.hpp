#pragma once

// Parser and canonical printer for the PDDL subset used by the garden and
// meta-level domains: typing, negative preconditions, and universally
// quantified conditional effects.

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "metagarden/logic.hpp"

namespace metagarden {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& message)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct TypedVar {
  Symbol name;
  Symbol type;
  friend bool operator==(const TypedVar&, const TypedVar&) = default;
};

struct TypeDecl {
  Symbol name;
  Symbol parent;
  friend bool operator==(const TypeDecl&, const TypeDecl&) = default;
};

struct PredicateDecl {
  Symbol name;
  std::vector<TypedVar> params;
  friend bool operator==(const PredicateDecl&, const PredicateDecl&) = default;
};

struct ConditionalEffect {
  std::vector<TypedVar> quantified;
  std::vector<Literal> condition;
  std::vector<Literal> effects;
  friend bool operator==(const ConditionalEffect&, const ConditionalEffect&) = default;
};

struct ActionSchema {
  Symbol name;
  std::vector<TypedVar> params;
  std::vector<Literal> precondition;
  std::vector<Literal> effects;
  std::vector<ConditionalEffect> cond_effects;
  friend bool operator==(const ActionSchema&, const ActionSchema&) = default;
};

inline const Symbol kObjectType{"object"};

struct Domain {
  Symbol name;
  std::vector<Symbol> requirements;
  std::vector<TypeDecl> types;
  std::vector<PredicateDecl> predicates;
  std::vector<ActionSchema> schemas;

  const ActionSchema* find_schema(Symbol n) const {
    auto it = std::find_if(schemas.begin(), schemas.end(), [&](auto& s) { return s.name == n; });
    return it == schemas.end() ? nullptr : &*it;
  }
  const PredicateDecl* find_predicate(Symbol n) const {
    auto it = std::find_if(predicates.begin(), predicates.end(), [&](auto& p) { return p.name == n; });
    return it == predicates.end() ? nullptr : &*it;
  }
  bool has_type(Symbol t) const {
    return t == kObjectType ||
           std::any_of(types.begin(), types.end(), [&](auto& d) { return d.name == t; });
  }
  /// True if `sub` equals `super` or descends from it.
  bool is_subtype(Symbol sub, Symbol super) const {
    for (int guard = 0; guard < 64; ++guard) {
      if (sub == super || super == kObjectType) return true;
      auto it = std::find_if(types.begin(), types.end(), [&](auto& d) { return d.name == sub; });
      if (it == types.end()) return false;
      sub = it->parent;
    }
    return false;
  }

  friend bool operator==(const Domain&, const Domain&) = default;
};

struct Problem {
  Symbol name;
  Symbol domain_name;
  std::vector<Object> objects;
  State init;
  GoalFormula goal;

  const Object* find_object(Symbol n) const {
    auto it = std::find_if(objects.begin(), objects.end(), [&](auto& o) { return o.name == n; });
    return it == objects.end() ? nullptr : &*it;
  }

  friend bool operator==(const Problem&, const Problem&) = default;
};

namespace pddl_detail {

struct SExpr {
  bool is_list = false;
  std::string token;  // lowercased
  std::vector<SExpr> items;
  int line = 1;
  int column = 1;

  bool is_token(std::string_view t) const { return !is_list && token == t; }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line, column, msg); }
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  SExpr read_document() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError(line_, col_, "empty input");
    SExpr e = read();
    skip_space();
    if (pos_ < text_.size()) throw ParseError(line_, col_, "trailing content after top-level form");
    return e;
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  SExpr read() {
    skip_space();
    SExpr e;
    e.line = line_;
    e.column = col_;
    if (pos_ >= text_.size()) throw ParseError(line_, col_, "unexpected end of input");
    char c = text_[pos_];
    if (c == ')') throw ParseError(line_, col_, "unbalanced ')'");
    if (c == '(') {
      e.is_list = true;
      advance();
      for (;;) {
        skip_space();
        if (pos_ >= text_.size()) throw ParseError(e.line, e.column, "unterminated list");
        if (text_[pos_] == ')') {
          advance();
          return e;
        }
        e.items.push_back(read());
      }
    }
    while (pos_ < text_.size()) {
      char ch = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(ch)) || ch == '(' || ch == ')' || ch == ';') break;
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || std::string_view("-_?:.=").find(ch) != std::string_view::npos)) {
        throw ParseError(line_, col_, std::string("unexpected character '") + ch + "'");
      }
      e.token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      advance();
    }
    return e;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

inline const SExpr& expect_list(const SExpr& e, const char* what) {
  if (!e.is_list) e.fail(std::string("expected ") + what);
  return e;
}

inline std::string expect_token(const SExpr& e, const char* what) {
  if (e.is_list) e.fail(std::string("expected ") + what);
  return e.token;
}

/// Parses "a b - t c - u d" style lists; untyped entries default to object.
template <class Out>
void parse_typed_list(const std::vector<SExpr>& items, std::size_t start, bool want_vars, Out&& out) {
  std::vector<const SExpr*> pending;
  for (std::size_t i = start; i < items.size(); ++i) {
    const auto& it = items[i];
    if (it.is_list) it.fail("unexpected list in typed list");
    if (it.token == "-") {
      if (pending.empty()) it.fail("type annotation without names");
      if (i + 1 >= items.size() || items[i + 1].is_list) it.fail("missing type after '-'");
      if (items[i + 1].token == "(either") it.fail("unsupported construct: either-types");
      Symbol type(items[i + 1].token);
      for (auto* p : pending) out(*p, type);
      pending.clear();
      ++i;
      continue;
    }
    if (want_vars != (it.token.front() == '?')) {
      it.fail(want_vars ? "expected variable, got '" + it.token + "'"
                        : "unexpected variable '" + it.token + "'");
    }
    pending.push_back(&it);
  }
  for (auto* p : pending) out(*p, kObjectType);
}

inline bool is_unsupported_keyword(std::string_view t) {
  static constexpr std::string_view kUnsupported[] = {
      "or", "imply", "exists", "=", "increase", "decrease", "assign", "scale-up", "scale-down",
      ">", "<", ">=", "<=", "at", "over", "preference"};
  return std::find(std::begin(kUnsupported), std::end(kUnsupported), t) != std::end(kUnsupported);
}

class DomainParser {
 public:
  Domain parse(const SExpr& root) {
    expect_list(root, "(define ...)");
    if (root.items.empty() || !root.items[0].is_token("define")) root.fail("expected 'define'");
    if (root.items.size() < 2) root.fail("missing domain header");
    const auto& header = expect_list(root.items[1], "(domain NAME)");
    if (header.items.size() != 2 || !header.items[0].is_token("domain")) header.fail("expected (domain NAME)");
    d_.name = Symbol(expect_token(header.items[1], "domain name"));

    for (std::size_t i = 2; i < root.items.size(); ++i) {
      const auto& sec = expect_list(root.items[i], "domain section");
      if (sec.items.empty() || sec.items[0].is_list) sec.fail("empty domain section");
      const auto& key = sec.items[0].token;
      if (key == ":requirements") {
        parse_requirements(sec);
      } else if (key == ":types") {
        parse_typed_list(sec.items, 1, false, [&](const SExpr& e, Symbol parent) {
          if (parent != kObjectType && !d_.has_type(parent)) {
            d_.types.push_back({parent, kObjectType});
          }
          d_.types.push_back({Symbol(e.token), parent});
        });
      } else if (key == ":predicates") {
        for (std::size_t j = 1; j < sec.items.size(); ++j) parse_predicate(sec.items[j]);
      } else if (key == ":action") {
        d_.schemas.push_back(parse_action(sec));
      } else if (key == ":constants" || key == ":functions" || key == ":durative-action" ||
                 key == ":derived" || key == ":axiom" || key == ":timeless") {
        sec.fail("unsupported construct: " + key);
      } else {
        sec.items[0].fail("unknown domain section '" + key + "'");
      }
    }
    return std::move(d_);
  }

 private:
  void parse_requirements(const SExpr& sec) {
    static constexpr std::string_view kSupported[] = {
        ":strips", ":typing", ":negative-preconditions", ":conditional-effects",
        ":universal-effects"};
    for (std::size_t j = 1; j < sec.items.size(); ++j) {
      auto tok = expect_token(sec.items[j], "requirement flag");
      if (std::find(std::begin(kSupported), std::end(kSupported), tok) == std::end(kSupported)) {
        sec.items[j].fail("unsupported requirement " + tok);
      }
      d_.requirements.emplace_back(tok);
    }
  }

  void check_type(const SExpr& at, Symbol t) const {
    if (!d_.has_type(t)) at.fail("undeclared type '" + t.name() + "'");
  }

  void parse_predicate(const SExpr& e) {
    expect_list(e, "predicate declaration");
    if (e.items.empty()) e.fail("empty predicate declaration");
    PredicateDecl p;
    p.name = Symbol(expect_token(e.items[0], "predicate name"));
    if (d_.find_predicate(p.name)) e.fail("duplicate predicate '" + p.name.name() + "'");
    parse_typed_list(e.items, 1, true, [&](const SExpr& v, Symbol t) {
      check_type(v, t);
      p.params.push_back({Symbol(v.token), t});
    });
    if (p.params.size() > kMaxArity) e.fail("predicate arity exceeds " + std::to_string(kMaxArity));
    d_.predicates.push_back(std::move(p));
  }

  std::vector<TypedVar> parse_vars(const SExpr& list) {
    expect_list(list, "variable list");
    std::vector<TypedVar> vars;
    parse_typed_list(list.items, 0, true, [&](const SExpr& v, Symbol t) {
      check_type(v, t);
      vars.push_back({Symbol(v.token), t});
    });
    return vars;
  }

  Literal parse_literal(const SExpr& e, const std::vector<TypedVar>& scope) const {
    expect_list(e, "literal");
    if (e.items.empty()) e.fail("empty literal");
    if (e.items[0].is_token("not")) {
      if (e.items.size() != 2) e.fail("'not' takes exactly one argument");
      auto inner = parse_literal(e.items[1], scope);
      if (!inner.positive) e.fail("unsupported construct: nested negation");
      return inner.negated();
    }
    if (e.items[0].is_list) e.fail("expected predicate name");
    const auto& head = e.items[0].token;
    if (is_unsupported_keyword(head) || head == "and" || head == "forall" || head == "when") {
      e.fail("unsupported construct: '" + head + "' in this position");
    }
    Symbol pred(head);
    const auto* decl = d_.find_predicate(pred);
    if (!decl) e.items[0].fail("undeclared predicate '" + head + "'");
    if (decl->params.size() != e.items.size() - 1) {
      e.fail("arity mismatch for '" + head + "': expected " + std::to_string(decl->params.size()) +
             ", got " + std::to_string(e.items.size() - 1));
    }
    std::vector<Symbol> args;
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      const auto& a = e.items[i];
      auto tok = expect_token(a, "term");
      Symbol s(tok);
      auto it = std::find_if(scope.begin(), scope.end(), [&](auto& v) { return v.name == s; });
      if (it == scope.end()) {
        a.fail(s.is_variable() ? "undeclared variable '" + tok + "'"
                               : "undeclared object '" + tok + "' (constants are unsupported)");
      }
      if (!d_.is_subtype(it->type, decl->params[i - 1].type)) {
        a.fail("type mismatch: '" + tok + "' is " + it->type.name() + ", expected " +
               decl->params[i - 1].type.name());
      }
      args.push_back(s);
    }
    return {Atom(pred, args), true};
  }

  std::vector<Literal> parse_conjunction(const SExpr& e, const std::vector<TypedVar>& scope) const {
    expect_list(e, "formula");
    if (!e.items.empty() && e.items[0].is_token("and")) {
      std::vector<Literal> out;
      for (std::size_t i = 1; i < e.items.size(); ++i) out.push_back(parse_literal(e.items[i], scope));
      return out;
    }
    if (e.items.empty()) return {};
    if (!e.items[0].is_list && (is_unsupported_keyword(e.items[0].token) || e.items[0].token == "forall")) {
      e.fail("unsupported construct: '" + e.items[0].token + "'");
    }
    return {parse_literal(e, scope)};
  }

  void parse_effect(const SExpr& e, std::vector<TypedVar> scope, ActionSchema& a,
                    const std::vector<TypedVar>* quantified) {
    expect_list(e, "effect");
    if (e.items.empty()) return;
    const auto& head = e.items[0];
    if (head.is_token("and")) {
      for (std::size_t i = 1; i < e.items.size(); ++i) parse_effect(e.items[i], scope, a, quantified);
      return;
    }
    if (head.is_token("forall")) {
      if (quantified) e.fail("unsupported construct: nested forall");
      if (e.items.size() != 3) e.fail("forall takes a variable list and an effect");
      auto vars = parse_vars(e.items[1]);
      auto inner_scope = scope;
      inner_scope.insert(inner_scope.end(), vars.begin(), vars.end());
      const auto& body = e.items[2];
      expect_list(body, "effect");
      if (!body.items.empty() && (body.items[0].is_token("when") || body.items[0].is_token("and"))) {
        parse_effect(body, inner_scope, a, &vars);
      } else {
        ConditionalEffect ce{vars, {}, parse_conjunction(body, inner_scope)};
        a.cond_effects.push_back(std::move(ce));
      }
      return;
    }
    if (head.is_token("when")) {
      if (e.items.size() != 3) e.fail("when takes a condition and an effect");
      ConditionalEffect ce;
      if (quantified) ce.quantified = *quantified;
      ce.condition = parse_conjunction(e.items[1], scope);
      const auto& body = e.items[2];
      expect_list(body, "effect");
      if (!body.items.empty() && (body.items[0].is_token("when") || body.items[0].is_token("forall"))) {
        body.fail("unsupported construct: nested conditional effect");
      }
      ce.effects = parse_conjunction(body, scope);
      a.cond_effects.push_back(std::move(ce));
      return;
    }
    auto lit = parse_literal(e, scope);
    if (quantified) {
      a.cond_effects.push_back({*quantified, {}, {lit}});
    } else {
      a.effects.push_back(lit);
    }
  }

  ActionSchema parse_action(const SExpr& sec) {
    if (sec.items.size() < 2) sec.fail("action without a name");
    ActionSchema a;
    a.name = Symbol(expect_token(sec.items[1], "action name"));
    if (d_.find_schema(a.name)) sec.items[1].fail("duplicate action '" + a.name.name() + "'");
    const SExpr* pre = nullptr;
    const SExpr* eff = nullptr;
    for (std::size_t i = 2; i < sec.items.size(); i += 2) {
      auto key = expect_token(sec.items[i], "action keyword");
      if (i + 1 >= sec.items.size()) sec.items[i].fail("missing value for " + key);
      const auto& val = sec.items[i + 1];
      if (key == ":parameters") {
        a.params = parse_vars(val);
      } else if (key == ":precondition") {
        pre = &val;
      } else if (key == ":effect") {
        eff = &val;
      } else {
        sec.items[i].fail("unsupported action keyword " + key);
      }
    }
    if (pre) a.precondition = parse_conjunction(*pre, a.params);
    if (eff) parse_effect(*eff, a.params, a, nullptr);
    for (const auto& l : a.effects) {
      if (std::find(a.effects.begin(), a.effects.end(), l.negated()) != a.effects.end()) {
        sec.fail("effect " + l.atom.str() + " appears with both polarities");
      }
    }
    return a;
  }

  Domain d_;
};

class ProblemParser {
 public:
  explicit ProblemParser(const Domain& d) : d_(d) {}

  Problem parse(const SExpr& root) {
    expect_list(root, "(define ...)");
    if (root.items.empty() || !root.items[0].is_token("define")) root.fail("expected 'define'");
    if (root.items.size() < 2) root.fail("missing problem header");
    const auto& header = expect_list(root.items[1], "(problem NAME)");
    if (header.items.size() != 2 || !header.items[0].is_token("problem")) header.fail("expected (problem NAME)");
    p_.name = Symbol(expect_token(header.items[1], "problem name"));

    for (std::size_t i = 2; i < root.items.size(); ++i) {
      const auto& sec = expect_list(root.items[i], "problem section");
      if (sec.items.empty() || sec.items[0].is_list) sec.fail("empty problem section");
      const auto& key = sec.items[0].token;
      if (key == ":domain") {
        if (sec.items.size() != 2) sec.fail("expected (:domain NAME)");
        p_.domain_name = Symbol(expect_token(sec.items[1], "domain name"));
        if (p_.domain_name != d_.name) {
          sec.items[1].fail("problem targets domain '" + p_.domain_name.name() + "', not '" +
                            d_.name.name() + "'");
        }
      } else if (key == ":objects") {
        parse_typed_list(sec.items, 1, false, [&](const SExpr& e, Symbol t) {
          if (!d_.has_type(t)) e.fail("undeclared type '" + t.name() + "'");
          Symbol n(e.token);
          if (p_.find_object(n)) e.fail("duplicate object '" + e.token + "'");
          p_.objects.push_back({n, t});
        });
      } else if (key == ":init") {
        std::vector<Atom> facts;
        for (std::size_t j = 1; j < sec.items.size(); ++j) {
          const auto& f = sec.items[j];
          auto lit = ground_literal(f);
          if (!lit.positive) f.fail("negative literal in :init (closed world)");
          facts.push_back(lit.atom);
        }
        p_.init = State(std::move(facts));
      } else if (key == ":goal") {
        if (sec.items.size() != 2) sec.fail("expected (:goal FORMULA)");
        const auto& g = expect_list(sec.items[1], "goal formula");
        std::vector<const SExpr*> parts;
        if (!g.items.empty() && g.items[0].is_token("and")) {
          for (std::size_t j = 1; j < g.items.size(); ++j) parts.push_back(&g.items[j]);
        } else if (!g.items.empty()) {
          parts.push_back(&g);
        }
        for (auto* part : parts) {
          auto lit = ground_literal(*part);
          try {
            p_.goal.add(lit);
          } catch (const ContractViolation& ex) {
            part->fail(ex.what());
          }
        }
      } else if (key == ":metric" || key == ":constraints" || key == ":length") {
        sec.fail("unsupported construct: " + key);
      } else {
        sec.items[0].fail("unknown problem section '" + key + "'");
      }
    }
    return std::move(p_);
  }

 private:
  Literal ground_literal(const SExpr& e) const {
    expect_list(e, "literal");
    if (e.items.empty()) e.fail("empty literal");
    if (e.items[0].is_token("not")) {
      if (e.items.size() != 2) e.fail("'not' takes exactly one argument");
      auto inner = ground_literal(e.items[1]);
      if (!inner.positive) e.fail("unsupported construct: nested negation");
      return inner.negated();
    }
    auto head = expect_token(e.items[0], "predicate name");
    if (is_unsupported_keyword(head) || head == "and" || head == "forall") {
      e.fail("unsupported construct: '" + head + "'");
    }
    Symbol pred(head);
    const auto* decl = d_.find_predicate(pred);
    if (!decl) e.items[0].fail("undeclared predicate '" + head + "'");
    if (decl->params.size() != e.items.size() - 1) {
      e.fail("arity mismatch for '" + head + "': expected " + std::to_string(decl->params.size()) +
             ", got " + std::to_string(e.items.size() - 1));
    }
    std::vector<Symbol> args;
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      auto tok = expect_token(e.items[i], "object");
      Symbol s(tok);
      if (s.is_variable()) e.items[i].fail("variable '" + tok + "' in ground formula");
      const auto* obj = p_.find_object(s);
      if (!obj) e.items[i].fail("undeclared object '" + tok + "'");
      if (!d_.is_subtype(obj->kind, decl->params[i - 1].type)) {
        e.items[i].fail("type mismatch: '" + tok + "' is " + obj->kind.name() + ", expected " +
                        decl->params[i - 1].type.name());
      }
      args.push_back(s);
    }
    return {Atom(pred, args), true};
  }

  const Domain& d_;
  Problem p_;
};

inline void render_typed(std::ostream& os, const std::vector<TypedVar>& vars) {
  bool first = true;
  for (const auto& v : vars) {
    if (!first) os << ' ';
    first = false;
    os << v.name.name() << " - " << v.type.name();
  }
}

inline void render_conj_inline(std::ostream& os, const std::vector<Literal>& lits) {
  os << "(and";
  for (const auto& l : lits) os << ' ' << l.str();
  os << ')';
}

}  // namespace pddl_detail

inline Domain parse_domain(std::string_view text) {
  pddl_detail::Reader reader(text);
  return pddl_detail::DomainParser{}.parse(reader.read_document());
}

inline Problem parse_problem(std::string_view text, const Domain& domain) {
  pddl_detail::Reader reader(text);
  return pddl_detail::ProblemParser{domain}.parse(reader.read_document());
}

inline std::string render_domain(const Domain& d) {
  using namespace pddl_detail;
  std::ostringstream os;
  os << "(define (domain " << d.name.name() << ")\n";
  if (!d.requirements.empty()) {
    os << "  (:requirements";
    for (auto r : d.requirements) os << ' ' << r.name();
    os << ")\n";
  }
  if (!d.types.empty()) {
    os << "  (:types";
    for (const auto& t : d.types) {
      os << ' ' << t.name.name();
      if (t.parent != kObjectType) os << " - " << t.parent.name();
    }
    os << ")\n";
  }
  os << "  (:predicates";
  for (const auto& p : d.predicates) {
    os << "\n    (" << p.name.name();
    if (!p.params.empty()) {
      os << ' ';
      render_typed(os, p.params);
    }
    os << ')';
  }
  os << ")\n";
  for (const auto& a : d.schemas) {
    os << "\n  (:action " << a.name.name() << "\n";
    os << "    :parameters (";
    render_typed(os, a.params);
    os << ")\n";
    os << "    :precondition\n    (and";
    for (const auto& l : a.precondition) os << "\n      " << l.str();
    os << ")\n";
    os << "    :effect\n    (and";
    for (const auto& l : a.effects) os << "\n      " << l.str();
    for (const auto& ce : a.cond_effects) {
      std::string indent = "\n      ";
      if (!ce.quantified.empty()) {
        os << indent << "(forall (";
        render_typed(os, ce.quantified);
        os << ')';
        indent += "  ";
      }
      os << indent << "(when ";
      render_conj_inline(os, ce.condition);
      os << indent << "  ";
      render_conj_inline(os, ce.effects);
      os << ')';
      if (!ce.quantified.empty()) os << ')';
    }
    os << "))\n";
  }
  os << ")\n";
  return os.str();
}

inline std::string render_problem(const Problem& p) {
  std::ostringstream os;
  os << "(define (problem " << p.name.name() << ")\n";
  os << "  (:domain " << p.domain_name.name() << ")\n";
  os << "  (:objects";
  for (const auto& o : p.objects) os << "\n    " << o.name.name() << " - " << o.kind.name();
  os << ")\n";
  os << "  (:init";
  for (const auto& a : p.init.sorted_by_name()) os << "\n    " << a.str();
  os << ")\n";
  os << "  (:goal\n    (and";
  for (const auto& l : p.goal) os << "\n      " << l.str();
  os << "))\n";
  os << ")\n";
  return os.str();
}

}  // namespace metagarden
