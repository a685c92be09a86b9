#pragma once

// The metacognitive cycle: monitor the trace, check metacognitive
// expectations, explain violations with Meta-XPs, formulate a learning goal,
// plan at the meta level and hand perform-learning to the rule learner.

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "metagarden/cognitive.hpp"
#include "metagarden/domains.hpp"
#include "metagarden/learner.hpp"
#include "metagarden/planner.hpp"
#include "metagarden/trace.hpp"

namespace metagarden {

// --- expectations -------------------------------------------------------------

struct MetaExpectation {
  std::string id;
  MentalAction action;
  std::function<bool(const MentalState&)> pre;
  std::function<bool(const MentalState&)> post;
};

using ExpectationLibrary = std::vector<MetaExpectation>;

/// E1: planning with goals yields a plan. E2: a discrepancy gets explained.
inline ExpectationLibrary default_expectations() {
  return {
      {"E1", MentalAction::kPlan, [](const MentalState& s) { return !s.current_goals.empty(); },
       [](const MentalState& s) { return s.plan && !s.plan->empty(); }},
      {"E2", MentalAction::kExplanation, [](const MentalState& s) { return !s.discrepancies.empty(); },
       [](const MentalState& s) { return s.explanation.has_value(); }},
  };
}

struct MetaDiscrepancy {
  std::string expectation;
  std::size_t index;  // trace action index of the offending triple
};

inline std::vector<MetaDiscrepancy> check_meta_expectations(const TraceSegment& seg, const ExpectationLibrary& lib) {
  std::vector<MetaDiscrepancy> out;
  for (std::size_t k = 0; k < seg.size(); ++k) {
    auto tr = seg.triple(k);
    for (const auto& e : lib) {
      if (e.action == tr.action && e.pre(tr.pre) && !e.post(tr.post)) out.push_back({e.id, tr.index});
    }
  }
  return out;
}

// --- Meta-XP library ------------------------------------------------------------

inline constexpr std::string_view kMetaXpLibraryText = R"({
  "xps": [
    {
      "id": "poor-action-model",
      "nodes": [
        {"id": "phase", "kind": "pre-xp", "pattern": "current-phase Interpret"},
        {"id": "lost-goal", "kind": "pre-xp", "pattern": "goal-atom-missing native-at"},
        {"id": "no-explanation", "kind": "pre-xp", "pattern": "explanation-failed"},
        {"id": "executed", "kind": "xp-asserted", "pattern": "executed ?op"},
        {"id": "alone", "kind": "xp-asserted", "pattern": "no-agent-nearby"},
        {"id": "knowledge", "kind": "xp-asserted", "pattern": "incomplete-knowledge ?op"},
        {"id": "outcome", "kind": "internal", "pattern": "unexpected-outcome ?op"},
        {"id": "failure", "kind": "explains", "pattern": "explanation-failure"}
      ],
      "links": [
        ["executed", "outcome"],
        ["knowledge", "outcome"],
        ["outcome", "lost-goal"],
        ["outcome", "failure"],
        ["alone", "failure"]
      ],
      "actionable": "knowledge",
      "goal_template": {"predicate": "learned", "args": ["?op", "?state"]},
      "meta_init": [
        ["has-discrepancy", "?state"],
        ["outdated", "?op"],
        ["caused_discrepancy", "?op"]
      ]
    }
  ]
}
)";

struct XpNode {
  std::string id;
  std::string kind;
  std::string pattern;
};

struct MetaXP {
  std::string id;
  std::vector<XpNode> nodes;
  std::vector<std::pair<std::string, std::string>> links;
  std::string actionable;
  std::string goal_predicate;
  std::vector<std::string> goal_args;
  std::vector<std::vector<std::string>> meta_init;

  const XpNode* node(std::string_view nid) const {
    for (const auto& n : nodes) {
      if (n.id == nid) return &n;
    }
    return nullptr;
  }
};

struct XpLibraryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Structural checks. Returns an empty string when the XP is well formed.
inline std::string validate_xp(const MetaXP& xp) {
  std::size_t explains = 0;
  std::string explains_id;
  for (const auto& n : xp.nodes) {
    if (n.kind != "pre-xp" && n.kind != "explains" && n.kind != "internal" && n.kind != "xp-asserted") {
      return "node " + n.id + " has unknown kind " + n.kind;
    }
    if (n.kind == "explains") {
      ++explains;
      explains_id = n.id;
    }
  }
  if (explains != 1) return "expected exactly one explains node";
  std::map<std::string, std::vector<std::string>> succ;
  for (const auto& [a, b] : xp.links) {
    const auto* from = xp.node(a);
    if (!from || !xp.node(b)) return "link " + a + " -> " + b + " names an unknown node";
    if (from->kind == "explains" || from->kind == "pre-xp") return from->kind + " node " + a + " must be a sink";
    succ[a].push_back(b);
  }
  for (const auto& n : xp.nodes) {
    if (n.kind != "xp-asserted") continue;
    std::vector<std::string> stack{n.id};
    std::set<std::string> seen;
    bool reached = false;
    while (!stack.empty() && !reached) {
      auto cur = stack.back();
      stack.pop_back();
      if (!seen.insert(cur).second) continue;
      if (cur == explains_id) reached = true;
      for (const auto& nx : succ[cur]) stack.push_back(nx);
    }
    if (!reached) return "xp-asserted node " + n.id + " does not reach the explains node";
  }
  const auto* act = xp.node(xp.actionable);
  if (!act || act->kind != "xp-asserted") return "actionable node must be xp-asserted";
  if (xp.goal_predicate.empty()) return "missing goal template";
  return {};
}

inline std::vector<MetaXP> load_xp_library(const nlohmann::json& j) {
  std::vector<MetaXP> out;
  try {
    for (const auto& x : j.at("xps")) {
      MetaXP xp;
      xp.id = x.at("id").get<std::string>();
      for (const auto& n : x.at("nodes")) {
        xp.nodes.push_back({n.at("id").get<std::string>(), n.at("kind").get<std::string>(),
                            n.at("pattern").get<std::string>()});
      }
      for (const auto& l : x.at("links")) xp.links.emplace_back(l.at(0).get<std::string>(), l.at(1).get<std::string>());
      xp.actionable = x.at("actionable").get<std::string>();
      xp.goal_predicate = x.at("goal_template").at("predicate").get<std::string>();
      xp.goal_args = x.at("goal_template").at("args").get<std::vector<std::string>>();
      if (x.contains("meta_init")) xp.meta_init = x.at("meta_init").get<std::vector<std::vector<std::string>>>();
      if (auto err = validate_xp(xp); !err.empty()) throw XpLibraryError(xp.id + ": " + err);
      out.push_back(std::move(xp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw XpLibraryError(std::string("malformed Meta-XP library: ") + e.what());
  }
  return out;
}

inline const std::vector<MetaXP>& default_xp_library() {
  static const auto lib = load_xp_library(nlohmann::json::parse(kMetaXpLibraryText));
  return lib;
}

// --- explanation and goal formulation ------------------------------------------

struct MetaXPInstance {
  std::string xp_id;
  std::map<std::string, std::string> bindings;  // "?op" -> "spray", "?state" -> "s12"
  std::size_t index = 0;
  std::string actionable;
};

namespace meta_detail {

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> w;
  for (std::string x; is >> x;) w.push_back(x);
  return w;
}

/// Pre-XP applicability test over the offending triple.
inline bool pre_xp_holds(const std::string& pattern, const TraceSegment::Triple& tr) {
  auto w = words(pattern);
  if (w.empty()) return false;
  if (w[0] == "current-phase") return w.size() == 2 && phase_of(tr.action) == w[1];
  if (w[0] == "goal-atom-missing") {
    if (w.size() != 2) return false;
    for (const auto& a : tr.pre.discrepancies.missing) {
      if (a.predicate().name() != w[1]) continue;
      for (const auto& r : tr.pre.agenda) {
        if (r.formula.positive && r.formula.atom == a) return true;
      }
    }
    return false;
  }
  if (w[0] == "explanation-failed") return !tr.post.explanation;
  return false;
}

/// Binds the xp-asserted node against the triple; false if it cannot hold.
inline bool assert_node(const std::string& pattern, const TraceSegment::Triple& tr, const Domain& domain,
                        std::map<std::string, std::string>& b) {
  auto w = words(pattern);
  if (w.empty()) return false;
  auto bind = [&](const std::string& var, const std::string& val) {
    auto [it, fresh] = b.emplace(var, val);
    return fresh || it->second == val;
  };
  if (w[0] == "executed") {
    if (w.size() != 2 || !tr.pre.last_action) return false;
    return bind(w[1], tr.pre.last_action->schema.name());
  }
  if (w[0] == "no-agent-nearby") {
    return std::none_of(tr.pre.believed.begin(), tr.pre.believed.end(),
                        [](const Atom& a) { return a.predicate() == garden_pred::kOtherAgentAt; });
  }
  if (w[0] == "incomplete-knowledge") {
    if (w.size() != 2) return false;
    auto it = b.find(w[1]);
    return it != b.end() && domain.find_schema(Symbol(it->second)) != nullptr;
  }
  return false;
}

}  // namespace meta_detail

/// First XP whose pre-XP nodes all hold and whose xp-asserted nodes bind.
inline std::optional<MetaXPInstance> meta_explain(const MetaDiscrepancy& md, const Trace& trace,
                                                  const std::vector<MetaXP>& xps, const Domain& domain) {
  TraceSegment whole{&trace, 0, trace.action_count()};
  auto tr = whole.triple(md.index);
  for (const auto& xp : xps) {
    bool ok = true;
    for (const auto& n : xp.nodes) {
      if (n.kind == "pre-xp" && !meta_detail::pre_xp_holds(n.pattern, tr)) ok = false;
    }
    if (!ok) continue;
    MetaXPInstance inst{xp.id, {{"?state", "s" + std::to_string(md.index + 1)}}, md.index, xp.actionable};
    for (const auto& n : xp.nodes) {
      if (n.kind == "xp-asserted" && !meta_detail::assert_node(n.pattern, tr, domain, inst.bindings)) ok = false;
    }
    if (ok) return inst;
  }
  return std::nullopt;
}

struct MetaGoal {
  std::string predicate;
  std::string op;
  std::string state;

  std::string str() const { return "(" + predicate + " " + op + " " + state + ")"; }
  friend bool operator==(const MetaGoal&, const MetaGoal&) = default;
};

inline const MetaXP* find_xp(const std::vector<MetaXP>& xps, const std::string& id) {
  for (const auto& x : xps) {
    if (x.id == id) return &x;
  }
  return nullptr;
}

inline MetaGoal formulate_meta_goal(const MetaXPInstance& inst, const std::vector<MetaXP>& xps) {
  const auto* xp = find_xp(xps, inst.xp_id);
  if (!xp || inst.actionable.empty()) throw ContractViolation("XP instance has no actionable node");
  auto value = [&](const std::string& a) {
    auto it = inst.bindings.find(a);
    return it == inst.bindings.end() ? a : it->second;
  };
  if (xp->goal_args.size() != 2) throw ContractViolation("goal template must name an operator and a state");
  return {xp->goal_predicate, value(xp->goal_args[0]), value(xp->goal_args[1])};
}

/// FIFO meta-level agenda. A goal for an operator that already has a
/// pending learning goal is not queued twice.
class MetaAgenda {
 public:
  struct Entry {
    MetaGoal goal;
    MetaXPInstance instance;
  };

  bool insert(const MetaGoal& g, const MetaXPInstance& inst) {
    for (const auto& e : pending_) {
      if (e.goal.predicate == g.predicate && e.goal.op == g.op) return false;
    }
    pending_.push_back({g, inst});
    return true;
  }
  const std::deque<Entry>& pending() const { return pending_; }
  bool empty() const { return pending_.empty(); }
  void pop_front() { pending_.pop_front(); }
  void clear() { pending_.clear(); }

 private:
  std::deque<Entry> pending_;
};

/// Singleton selection, oldest first.
inline std::optional<MetaAgenda::Entry> meta_intend(const MetaAgenda& agenda) {
  if (agenda.empty()) return std::nullopt;
  return agenda.pending().front();
}

/// The meta problem always names its state object current-state.
inline Problem meta_problem(const MetaGoal& g, const MetaXPInstance& inst, const std::vector<MetaXP>& xps) {
  const auto* xp = find_xp(xps, inst.xp_id);
  const Symbol state("current-state"), op(g.op);
  auto value = [&](const std::string& a) { return a == "?state" ? state : a == "?op" ? op : Symbol(a); };
  Problem p;
  p.name = Symbol("meta-task");
  p.domain_name = Symbol("meta");
  p.objects = {{op, Symbol("operator")}, {state, Symbol("state")}};
  std::vector<Atom> init;
  if (xp) {
    for (const auto& f : xp->meta_init) {
      if (f.empty()) continue;
      std::vector<Symbol> args;
      for (std::size_t i = 1; i < f.size(); ++i) args.push_back(value(f[i]));
      init.emplace_back(Symbol(f[0]), std::span<const Symbol>(args));
    }
  }
  p.init = State(std::move(init));
  p.goal = GoalFormula{{Atom(Symbol(g.predicate), {op, state}), true}};
  return p;
}

inline PlanResult meta_plan(const Problem& p, const Domain& meta = meta_domain()) {
  return plan(ground(meta, p));
}

struct ControlOutcome {
  bool success = false;
  std::vector<LearningOutcome> learning;
};

/// Runs each meta-action. perform-learning drives the rule learner against
/// the agent's model; a step that learns nothing fails the plan.
inline ControlOutcome control(const Plan& meta_plan, RuleLearner& learner, AgentModel& model, const Trace& trace,
                              GroundingCache& cache) {
  ControlOutcome out;
  out.success = true;
  for (const auto& step : meta_plan.steps) {
    if (step.schema.name() == "perform-learning") {
      auto r = learner.learn(trace, model, cache);
      out.learning.push_back(r);
      if (!r.learned) {
        out.success = false;
        return out;
      }
    } else {
      out.success = false;
      return out;
    }
  }
  return out;
}

// --- controller ---------------------------------------------------------------

/// The meta-level hook: one metacognitive cycle after every cognitive phase.
class MetaController : public MetaHook {
 public:
  explicit MetaController(RuleLearner& learner, std::vector<MetaXP> xps = default_xp_library(),
                          ExpectationLibrary expectations = default_expectations())
      : learner_(learner), xps_(std::move(xps)), expectations_(std::move(expectations)) {}

  void begin_episode(Episode&) override {
    monitor_.reset();
    agenda_.clear();
    learner_.begin_episode();
  }

  void end_episode(Episode& ep) override { learner_.end_episode(ep.world.clock); }

  void after_phase(Episode& ep) override {
    auto seg = monitor_.monitor(ep.trace);
    for (const auto& md : check_meta_expectations(seg, expectations_)) {
      ++violations_;
      auto inst = meta_explain(md, ep.trace, xps_, ep.model.domain());
      if (!inst) {
        log("expectation " + md.expectation + " violated at action " + std::to_string(md.index) +
            "; no applicable Meta-XP");
        continue;
      }
      agenda_.insert(formulate_meta_goal(*inst, xps_), *inst);
    }
    auto selected = meta_intend(agenda_);
    if (!selected) return;
    auto r = meta_plan(meta_problem(selected->goal, selected->instance, xps_));
    if (!r.solved()) {
      log("meta goal " + selected->goal.str() + " unsolvable; dropped");
      agenda_.pop_front();
      return;
    }
    auto c = control(r.plan, learner_, ep.model, ep.trace, ep.cache);
    if (!c.success) return;
    agenda_.pop_front();
    ++ep.learn_events;
    ep.ctx.discard_plan();
  }

  const std::vector<std::string>& log() const { return log_; }
  std::size_t violations() const { return violations_; }
  const MetaAgenda& agenda() const { return agenda_; }

 private:
  void log(std::string msg) {
    if (log_.size() < kLogLimit) log_.push_back(std::move(msg));
  }

  static constexpr std::size_t kLogLimit = 1000;

  RuleLearner& learner_;
  std::vector<MetaXP> xps_;
  ExpectationLibrary expectations_;
  Monitor monitor_;
  MetaAgenda agenda_;
  std::vector<std::string> log_;
  std::size_t violations_ = 0;
};

}  // namespace metagarden
