#pragma once

// The cognitive cycle: Perceive, Interpret (detect discrepancies, explain,
// insert goals), Evaluate, Intend, Plan, Act. A meta-level hook runs after
// every phase and sees the introspective trace.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "metagarden/agenda.hpp"
#include "metagarden/domains.hpp"
#include "metagarden/garden.hpp"
#include "metagarden/planner.hpp"
#include "metagarden/trace.hpp"

namespace metagarden {

enum class AgentMode { kStandard, kLearning };

inline const char* to_string(AgentMode m) { return m == AgentMode::kStandard ? "standard" : "learning"; }

/// The agent's believed dynamics and its current picture of the world.
class AgentModel {
 public:
  explicit AgentModel(Domain d = garden_domain()) { set_domain(std::move(d)); }

  void set_domain(Domain d) {
    domain_ = std::move(d);
    fingerprint_ = fingerprint(render_domain(domain_));
  }
  const Domain& domain() const { return domain_; }
  std::uint64_t domain_fingerprint() const { return fingerprint_; }

  State believed_state;

 private:
  Domain domain_;
  std::uint64_t fingerprint_ = 0;
};

/// Grounded garden actions and their compiled search space, one entry per
/// believed-domain version. Garden problems share objects and static facts.
class GroundingCache {
 public:
  struct Entry {
    GroundedTask task;
    std::unique_ptr<SearchSpace> space;
    std::unordered_map<std::string, std::size_t> by_name;

    const GroundAction* find(const std::string& name) const {
      auto it = by_name.find(name);
      return it == by_name.end() ? nullptr : &task.actions[it->second];
    }
  };

  const Entry& get(const AgentModel& m) {
    auto it = entries_.find(m.domain_fingerprint());
    if (it != entries_.end()) return *it->second;
    auto e = std::make_unique<Entry>();
    e->task = ground(m.domain(), make_problem(observe(GardenWorld{}), {}));
    e->space = std::make_unique<SearchSpace>(e->task.actions, e->task.init);
    for (std::size_t i = 0; i < e->task.actions.size(); ++i) e->by_name.emplace(e->task.actions[i].str(), i);
    return *entries_.emplace(m.domain_fingerprint(), std::move(e)).first->second;
  }

 private:
  std::unordered_map<std::uint64_t, std::unique_ptr<Entry>> entries_;
};

inline std::string spray_name(Cell c) { return "(spray " + cell_symbol(c).name() + ")"; }

/// Plant atoms the believed model says spray(c) removes from `believed`
/// (a full state) once the agent stands on c. Empty if spray(c) is illegal.
inline std::vector<Atom> believed_kill_set(const GroundingCache::Entry& g, State believed, Cell c) {
  const auto* a = g.find(spray_name(c));
  if (!a) return {};
  for (const auto& f : std::vector<Atom>(believed.begin(), believed.end())) {
    if (f.predicate() == garden_pred::kAgentAt) believed.erase(f);
  }
  believed.insert(Atom(garden_pred::kAgentAt, {cell_symbol(c)}));
  if (!preconditions_hold(believed, *a)) return {};
  auto after = successor(believed, *a);
  std::vector<Atom> killed;
  for (const auto& f : believed) {
    if (is_plant_atom(f) && !after.contains(f)) killed.push_back(f);
  }
  return killed;
}

struct CycleContext {
  std::vector<Literal> current_goals;
  std::shared_ptr<const Plan> plan;
  std::size_t cursor = 0;
  DiscrepancySet discrepancies;
  std::optional<Explanation> explanation;
  std::optional<ActionRef> last_action;
  std::optional<State> expected;
  State observed;
  State observed_fluents;
  bool replan = true;
  std::uint64_t rejection_checked_for = 0;

  bool has_next_step() const { return plan && cursor < plan->size(); }
  void discard_plan() {
    plan.reset();
    cursor = 0;
    replan = true;
  }
};

/// Cognitive-level explanation pattern: returns an explanation if it
/// accounts for the discrepancy in the observed state.
struct CognitiveXp {
  std::string id;
  std::function<std::optional<Explanation>(const DiscrepancySet&, const State&)> match;
};

using CognitiveXpLibrary = std::vector<CognitiveXp>;

/// One pattern: a lost plant is explained by another agent observed within
/// one cell of it.
inline CognitiveXpLibrary default_cognitive_library() {
  CognitiveXp other_agent{"other-agent-interference", [](const DiscrepancySet& d, const State& s) -> std::optional<Explanation> {
    for (const auto& lost : d.missing) {
      if (!is_plant_atom(lost)) continue;
      auto plant = parse_cell(lost.arg(0));
      if (!plant) continue;
      for (const auto& f : s) {
        if (f.predicate() != garden_pred::kOtherAgentAt) continue;
        auto at = parse_cell(f.arg(0));
        if (at && chebyshev(*at, *plant) <= 1) {
          Binding b;
          b.bind(Symbol("?plant"), lost.arg(0));
          b.bind(Symbol("?agent-cell"), f.arg(0));
          return Explanation{"other-agent-interference", b, "other-agent"};
        }
      }
    }
    return std::nullopt;
  }};
  return {other_agent};
}

// --- phases -------------------------------------------------------------

inline State perceive(const GardenWorld& w, CycleContext& ctx) {
  ctx.observed = observe(w);
  ctx.observed_fluents = fluent_facts(w);
  return ctx.observed;
}

/// Compares the projection of the last executed action with the
/// observation. Without a projection there is nothing to compare.
inline DiscrepancySet detect_discrepancies(CycleContext& ctx) {
  ctx.explanation.reset();
  if (!ctx.expected) {
    ctx.discrepancies = {};
  } else {
    ctx.discrepancies = diff_states(*ctx.expected, ctx.observed);
    ctx.expected.reset();
  }
  return ctx.discrepancies;
}

inline std::optional<Explanation> explain_cognitive(const DiscrepancySet& d, const State& observed,
                                                    const CognitiveXpLibrary& kb) {
  if (d.empty()) throw ContractViolation("explain_cognitive requires a non-empty discrepancy set");
  for (const auto& xp : kb) {
    if (auto e = xp.match(d, observed)) return e;
  }
  return std::nullopt;
}

inline Agenda& insert_goals(const GoalFormula& goals, Agenda& agenda) {
  for (const auto& g : goals) agenda.insert(g);
  return agenda;
}

inline bool is_removal_goal(const Literal& g) { return !g.positive; }

/// Marks the current goal set achieved when the state entails it. Removal
/// goals are also marked one by one, since removed plants never return;
/// preservation goals are only settled by the whole set or at episode end.
inline Agenda& evaluate(const State& state, CycleContext& ctx, Agenda& agenda) {
  if (ctx.current_goals.empty()) return agenda;
  GoalFormula gc(ctx.current_goals);
  auto index_of = [&](const Literal& l) {
    const auto& rs = agenda.records();
    return static_cast<std::size_t>(std::find_if(rs.begin(), rs.end(), [&](auto& r) { return r.formula == l; }) - rs.begin());
  };
  if (entails(state, gc)) {
    for (const auto& l : ctx.current_goals) {
      auto i = index_of(l);
      if (i < agenda.size() && agenda.records()[i].status == GoalStatus::kCurrent) {
        agenda.set_status(i, GoalStatus::kAchieved);
      }
    }
    ctx.current_goals.clear();
    return agenda;
  }
  std::vector<Literal> still;
  for (const auto& l : ctx.current_goals) {
    auto i = index_of(l);
    if (is_removal_goal(l) && holds(state, l) && agenda.records()[i].status == GoalStatus::kCurrent) {
      agenda.set_status(i, GoalStatus::kAchieved);
    } else {
      still.push_back(l);
    }
  }
  ctx.current_goals = std::move(still);
  return agenda;
}

/// True iff some legal spray removes the invasive at `target` without
/// removing any native, according to the believed model.
inline bool has_safe_spray(const GroundingCache::Entry& g, const State& believed, const Atom& target) {
  for (int x = 0; x < kMapSize; ++x) {
    for (int y = 0; y < kMapSize; ++y) {
      auto kills = believed_kill_set(g, believed, {x, y});
      bool hits = std::find(kills.begin(), kills.end(), target) != kills.end();
      bool harms = std::any_of(kills.begin(), kills.end(), [](const Atom& a) {
        return a.predicate() == garden_pred::kNativeAt;
      });
      if (hits && !harms) return true;
    }
  }
  return false;
}

/// Commits pending goals when no goal set is current. In learning mode,
/// removal goals that cannot be met without harming a native under the
/// believed model are rejected first; the check is repeated for current
/// goals whenever the believed domain has changed since it last ran.
inline std::vector<Literal> intend(Agenda& agenda, CycleContext& ctx, const AgentModel& model, AgentMode mode,
                                   GroundingCache& cache) {
  if (mode == AgentMode::kLearning) {
    bool model_changed = ctx.rejection_checked_for != model.domain_fingerprint();
    const auto& g = cache.get(model);
    for (std::size_t i = 0; i < agenda.size(); ++i) {
      const auto& r = agenda.records()[i];
      if (!is_removal_goal(r.formula)) continue;
      bool eligible = (r.status == GoalStatus::kPending && ctx.current_goals.empty()) ||
                      (r.status == GoalStatus::kCurrent && model_changed);
      if (!eligible || !model.believed_state.contains(r.formula.atom)) continue;
      if (!has_safe_spray(g, model.believed_state, r.formula.atom)) {
        agenda.set_status(i, GoalStatus::kRejected);
        std::erase(ctx.current_goals, r.formula);
        ctx.replan = true;
      }
    }
    ctx.rejection_checked_for = model.domain_fingerprint();
  }
  if (ctx.current_goals.empty()) {
    for (std::size_t i = 0; i < agenda.size(); ++i) {
      if (agenda.records()[i].status == GoalStatus::kPending) {
        agenda.set_status(i, GoalStatus::kCurrent);
        ctx.current_goals.push_back(agenda.records()[i].formula);
        ctx.replan = true;
      }
    }
  }
  return ctx.current_goals;
}

/// Plans for the current goals minus preservation goals whose plant is
/// already gone. An unsolvable task rejects the remaining removal goals.
inline PlanResult plan_phase(const AgentModel& model, const State& state, CycleContext& ctx, Agenda& agenda,
                             GroundingCache& cache, const SearchConfig& cfg = {}) {
  GoalFormula target;
  for (const auto& l : ctx.current_goals) {
    if (l.positive && !state.contains(l.atom)) continue;
    target.add(l);
  }
  PlanResult r;
  if (entails(state, target)) {
    r.status = PlanStatus::kSolved;
  } else {
    r = cache.get(model).space->search(state, target, cfg);
  }
  ctx.cursor = 0;
  ctx.replan = false;
  if (r.status == PlanStatus::kSolved) {
    ctx.plan = std::make_shared<const Plan>(r.plan);
  } else {
    ctx.plan = std::make_shared<const Plan>();
  }
  if (r.status == PlanStatus::kUnsolvable) {
    for (std::size_t i = 0; i < agenda.size(); ++i) {
      const auto& rec = agenda.records()[i];
      if (rec.status == GoalStatus::kCurrent && is_removal_goal(rec.formula)) {
        agenda.set_status(i, GoalStatus::kRejected);
        std::erase(ctx.current_goals, rec.formula);
      }
    }
  }
  return r;
}

/// Executes the next plan step: projects it through the believed model,
/// then applies it to the world. Returns false when nothing was executed.
inline bool act(CycleContext& ctx, const AgentModel& model, GardenWorld& world, GroundingCache& cache) {
  if (!ctx.has_next_step()) return false;
  const auto& step = ctx.plan->steps[ctx.cursor];
  if (!preconditions_hold(model.believed_state, step)) {
    ctx.discard_plan();
    return false;
  }
  auto wa = to_world_action(step.schema, step.args, world);
  if (!wa) {
    ctx.discard_plan();
    return false;
  }
  auto res = env_step(world, *wa);
  if (!res.ok()) {
    ctx.discard_plan();
    return false;
  }
  (void)cache;
  ctx.expected = successor(model.believed_state, step);
  world = std::move(res.world);
  ctx.last_action = ActionRef{step.schema, step.args};
  ++ctx.cursor;
  return true;
}

// --- episode --------------------------------------------------------------

struct Episode;

/// Called around and inside an episode. The meta level implements this.
class MetaHook {
 public:
  virtual ~MetaHook() = default;
  virtual void begin_episode(Episode&) {}
  virtual void after_phase(Episode&) = 0;
  virtual void end_episode(Episode&) {}
};

struct Episode {
  AgentModel& model;
  GroundingCache& cache;
  AgentMode mode;
  GardenWorld world;
  GoalFormula goals;
  Agenda agenda;
  CycleContext ctx;
  Trace trace;
  int learn_events = 0;

  MentalState snapshot() const {
    MentalState s;
    s.current_goals = ctx.current_goals;
    s.agenda = agenda.records();
    s.plan = ctx.plan;
    s.plan_cursor = ctx.cursor;
    s.believed = ctx.observed_fluents;
    s.domain_fingerprint = model.domain_fingerprint();
    s.discrepancies = ctx.discrepancies;
    s.explanation = ctx.explanation;
    s.last_action = ctx.last_action;
    return s;
  }

  void record(MentalAction a) { trace.append(a, snapshot()); }
};

struct EpisodeOptions {
  int cycle_cap = 500;
  SearchConfig search;
  CognitiveXpLibrary cognitive_library = default_cognitive_library();
};

struct EpisodeResult {
  int achieved = 0;
  int rejected = 0;
  int total = 0;
  int steps = 0;
  int cycles = 0;
  int learn_events = 0;
  bool step_cap_hit = false;
  bool resource_limit = false;
  GardenWorld final_world;
  Agenda agenda;
  Trace trace;
};

class CognitiveAgent {
 public:
  explicit CognitiveAgent(AgentMode mode, Domain domain = garden_domain())
      : mode_(mode), model_(std::move(domain)) {}

  AgentMode mode() const { return mode_; }
  AgentModel& model() { return model_; }
  const AgentModel& model() const { return model_; }
  GroundingCache& cache() { return cache_; }

  EpisodeResult run_episode(const GardenWorld& world, const GoalFormula& goals, MetaHook* hook = nullptr,
                            const EpisodeOptions& opts = {}) {
    Episode ep{model_, cache_, mode_, world, goals, {}, {}, {}, 0};
    EpisodeResult result;
    ep.ctx.observed = observe(ep.world);
    ep.ctx.observed_fluents = fluent_facts(ep.world);
    model_.believed_state = ep.ctx.observed;
    ep.trace.start(ep.snapshot());
    if (hook) hook->begin_episode(ep);
    auto after = [&](MentalAction a) { ep.record(a); };
    auto meta = [&] {
      if (hook) hook->after_phase(ep);
    };

    for (;;) {
      if (result.cycles >= opts.cycle_cap) {
        result.step_cap_hit = true;
        break;
      }
      ++result.cycles;

      perceive(ep.world, ep.ctx);
      model_.believed_state = ep.ctx.observed;
      after(MentalAction::kPerceive);
      meta();

      auto d = detect_discrepancies(ep.ctx);
      after(MentalAction::kDetectDiscrepancies);
      if (!d.empty()) {
        ep.ctx.explanation = explain_cognitive(d, ep.ctx.observed, opts.cognitive_library);
        ep.ctx.discard_plan();
        after(MentalAction::kExplanation);
      }
      insert_goals(ep.goals, ep.agenda);
      after(MentalAction::kGoalInsertion);
      meta();

      evaluate(model_.believed_state, ep.ctx, ep.agenda);
      after(MentalAction::kEvaluate);
      meta();
      if (finished(ep.agenda)) break;

      intend(ep.agenda, ep.ctx, model_, mode_, cache_);
      after(MentalAction::kIntend);
      meta();

      if (ep.ctx.replan || !ep.ctx.has_next_step()) {
        auto r = plan_phase(model_, model_.believed_state, ep.ctx, ep.agenda, cache_, opts.search);
        if (r.status == PlanStatus::kNodeLimit) result.resource_limit = true;
      }
      after(MentalAction::kPlan);
      meta();
      if (result.resource_limit || finished(ep.agenda)) break;

      act(ep.ctx, model_, ep.world, cache_);
      after(MentalAction::kAct);
      meta();
    }

    score(ep, result);
    if (hook) hook->end_episode(ep);
    result.learn_events = ep.learn_events;
    result.final_world = ep.world;
    result.agenda = ep.agenda;
    result.trace = std::move(ep.trace);
    return result;
  }

 private:
  /// Done once no removal goal is pending or current.
  static bool finished(const Agenda& agenda) {
    return std::none_of(agenda.records().begin(), agenda.records().end(), [](const GoalRecord& r) {
      return is_removal_goal(r.formula) && (r.status == GoalStatus::kPending || r.status == GoalStatus::kCurrent);
    });
  }

  /// A preservation goal counts iff its plant survives; a removal goal iff
  /// the plant is gone. Rejected goals never count.
  static void score(Episode& ep, EpisodeResult& result) {
    State final_state = observe(ep.world);
    for (std::size_t i = 0; i < ep.agenda.size(); ++i) {
      const auto& r = ep.agenda.records()[i];
      if (r.status == GoalStatus::kRejected) continue;
      if (!holds(final_state, r.formula)) continue;
      if (r.status == GoalStatus::kPending) ep.agenda.set_status(i, GoalStatus::kCurrent);
      if (ep.agenda.records()[i].status == GoalStatus::kCurrent) ep.agenda.set_status(i, GoalStatus::kAchieved);
    }
    result.total = static_cast<int>(ep.agenda.size());
    result.achieved = static_cast<int>(ep.agenda.count(GoalStatus::kAchieved));
    result.rejected = static_cast<int>(ep.agenda.count(GoalStatus::kRejected));
    result.steps = ep.world.clock;
  }

  AgentMode mode_;
  AgentModel model_;
  GroundingCache cache_;
};

}  // namespace metagarden
