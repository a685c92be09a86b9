#include <gtest/gtest.h>

#include <random>

#include "metagarden/cognitive.hpp"
#include "metagarden/learner.hpp"

using namespace metagarden;

namespace {

Domain full_repair() {
  std::vector<ConditionalEffect> all;
  for (const auto& d : kDirections) all.push_back(neighbour_effect(d));
  return repair_operator(garden_domain(), garden_pred::kSpray, all);
}

Literal removal(Cell c) { return {Atom(garden_pred::kInvasiveAt, {cell_symbol(c)}), false}; }
Literal keep(Cell c) { return {Atom(garden_pred::kNativeAt, {cell_symbol(c)}), true}; }

int count_kind(const GardenWorld& w, PlantKind k) {
  return static_cast<int>(std::count_if(w.plants.begin(), w.plants.end(), [&](auto& p) { return p.second == k; }));
}

}  // namespace

TEST(StandardAgent, HazardLosesTheNative) {
  CognitiveAgent agent(AgentMode::kStandard);
  auto f = hazard_problem();
  auto r = agent.run_episode(f.world, f.goals);
  EXPECT_EQ(r.total, 3);
  EXPECT_EQ(r.achieved, 2);
  EXPECT_EQ(r.rejected, 0);
  EXPECT_TRUE(r.final_world.plants.empty());
  EXPECT_FALSE(r.step_cap_hit);
  EXPECT_EQ(r.agenda.find(keep({3, 3}))->status, GoalStatus::kCurrent);
}

TEST(LearningAgent, ConvergedModelRejectsTheUnsafeInvasive) {
  CognitiveAgent agent(AgentMode::kLearning, full_repair());
  auto f = hazard_problem();
  auto r = agent.run_episode(f.world, f.goals);
  EXPECT_EQ(r.achieved, 2);
  EXPECT_EQ(r.rejected, 1);
  EXPECT_EQ(r.agenda.find(removal({3, 2}))->status, GoalStatus::kRejected);
  EXPECT_EQ(r.agenda.find(removal({2, 5}))->status, GoalStatus::kAchieved);
  EXPECT_EQ(r.agenda.find(keep({3, 3}))->status, GoalStatus::kAchieved);
  EXPECT_TRUE(r.final_world.plants.contains({3, 3}));
  EXPECT_TRUE(r.final_world.plants.contains({3, 2}));
  EXPECT_FALSE(r.final_world.plants.contains({2, 5}));
}

TEST(LearningAgent, ConvergedModelReachesTheSafeCeiling) {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 25; ++trial) {
    auto p = generate_problem({rng(), 1 + static_cast<int>(rng() % 14), 0.6});
    CognitiveAgent agent(AgentMode::kLearning, full_repair());
    auto r = agent.run_episode(p.world, p.goals);
    int natives = count_kind(p.world, PlantKind::kNative);
    int invasives = count_kind(p.world, PlantKind::kInvasive);
    int safe = static_cast<int>(safe_kill_oracle(p.world).size());
    EXPECT_EQ(r.achieved, natives + safe) << "trial " << trial;
    EXPECT_EQ(r.rejected, invasives - safe) << "trial " << trial;
    EXPECT_EQ(count_kind(r.final_world, PlantKind::kNative), natives);
  }
}

TEST(StandardAgent, RemovesEveryInvasiveAndSparesDistantNatives) {
  std::mt19937_64 rng(321);
  for (int trial = 0; trial < 25; ++trial) {
    auto p = generate_problem({rng(), 1 + static_cast<int>(rng() % 14), 0.6});
    CognitiveAgent agent(AgentMode::kStandard);
    auto r = agent.run_episode(p.world, p.goals);
    EXPECT_EQ(count_kind(r.final_world, PlantKind::kInvasive), 0);
    EXPECT_EQ(r.rejected, 0);
    for (const auto& [c, k] : p.world.plants) {
      if (k != PlantKind::kNative) continue;
      bool exposed = std::any_of(p.world.plants.begin(), p.world.plants.end(), [&](auto& q) {
        return q.second == PlantKind::kInvasive && chebyshev(q.first, c) <= 1;
      });
      if (!exposed) {
        EXPECT_TRUE(r.final_world.plants.contains(c));
      }
    }
  }
}

TEST(Episode, NoGoalsEndsImmediately) {
  CognitiveAgent agent(AgentMode::kStandard);
  auto r = agent.run_episode(GardenWorld{}, {});
  EXPECT_EQ(r.total, 0);
  EXPECT_EQ(r.steps, 0);
  EXPECT_EQ(r.cycles, 1);
}

TEST(Episode, CycleCapStopsTheLoop) {
  CognitiveAgent agent(AgentMode::kStandard);
  auto f = hazard_problem();
  EpisodeOptions opts;
  opts.cycle_cap = 3;
  auto r = agent.run_episode(f.world, f.goals, nullptr, opts);
  EXPECT_TRUE(r.step_cap_hit);
  EXPECT_EQ(r.cycles, 3);
}

TEST(Episode, NodeCapIsReportedAsResourceLimit) {
  CognitiveAgent agent(AgentMode::kStandard);
  auto f = hazard_problem();
  EpisodeOptions opts;
  opts.search.node_cap = 2;
  auto r = agent.run_episode(f.world, f.goals, nullptr, opts);
  EXPECT_TRUE(r.resource_limit);
  EXPECT_EQ(r.steps, 0);
}

TEST(Trace, PhasesAndExplanationsAreWellFormed) {
  CognitiveAgent agent(AgentMode::kStandard);
  auto f = hazard_problem();
  auto r = agent.run_episode(f.world, f.goals);
  const auto& acts = r.trace.actions();
  const auto& states = r.trace.states();
  ASSERT_EQ(states.size(), acts.size() + 1);
  EXPECT_EQ(validate_trace_json(export_trace(r.trace)), "");
  EXPECT_EQ(acts.front(), MentalAction::kPerceive);
  int explanations = 0, executed = 0;
  for (std::size_t i = 0; i < acts.size(); ++i) {
    if (acts[i] == MentalAction::kExplanation) {
      ++explanations;
      ASSERT_GT(i, 0u);
      EXPECT_EQ(acts[i - 1], MentalAction::kDetectDiscrepancies);
      EXPECT_FALSE(states[i].discrepancies.empty());
    }
    if (acts[i] == MentalAction::kDetectDiscrepancies && states[i + 1].discrepancies.empty()) {
      EXPECT_NE(i + 1 < acts.size() ? acts[i + 1] : MentalAction::kPerceive, MentalAction::kExplanation);
    }
    if (acts[i] == MentalAction::kAct && states[i + 1].plan_cursor == states[i].plan_cursor + 1) ++executed;
  }
  EXPECT_GE(explanations, 1);
  EXPECT_EQ(executed, r.steps);
}

TEST(Phases, DiscrepancyAfterFlawedSpray) {
  AgentModel model;
  GroundingCache cache;
  CycleContext ctx;
  auto w = hazard_problem().world;
  w.agent = {3, 2};
  model.believed_state = perceive(w, ctx);
  Plan p;
  p.steps.push_back(*cache.get(model).find("(spray pos3-2)"));
  ctx.plan = std::make_shared<const Plan>(p);
  ASSERT_TRUE(act(ctx, model, w, cache));
  EXPECT_EQ(ctx.last_action->str(), "(spray pos3-2)");
  perceive(w, ctx);
  auto d = detect_discrepancies(ctx);
  EXPECT_EQ(d.missing, std::vector<Atom>{Atom("native-at", {"pos3-3"})});
  EXPECT_TRUE(d.extra.empty());
  EXPECT_TRUE(detect_discrepancies(ctx).empty());
  EXPECT_FALSE(explain_cognitive(d, ctx.observed, default_cognitive_library()).has_value());
}

TEST(Phases, OtherAgentExplainsANearbyLoss) {
  DiscrepancySet d;
  d.missing = {Atom("native-at", {"pos3-3"})};
  State s{Atom("other-agent-at", {"pos4-4"})};
  auto e = explain_cognitive(d, s, default_cognitive_library());
  ASSERT_TRUE(e.has_value());
  EXPECT_EQ(e->pattern, "other-agent-interference");
  EXPECT_FALSE(explain_cognitive(d, State{Atom("other-agent-at", {"pos6-6"})}, default_cognitive_library()));
  EXPECT_THROW(explain_cognitive(DiscrepancySet{}, s, default_cognitive_library()), ContractViolation);
}

TEST(Phases, ActDiscardsAPlanWhoseStepIsInapplicable) {
  AgentModel model;
  GroundingCache cache;
  CycleContext ctx;
  GardenWorld w;
  model.believed_state = perceive(w, ctx);
  Plan p;
  p.steps.push_back(*cache.get(model).find("(spray pos3-2)"));
  ctx.plan = std::make_shared<const Plan>(p);
  EXPECT_FALSE(act(ctx, model, w, cache));
  EXPECT_FALSE(ctx.plan);
  EXPECT_TRUE(ctx.replan);
  EXPECT_EQ(w, GardenWorld{});
}

TEST(Phases, IntendRejectsOnlyInLearningMode) {
  auto f = hazard_problem();
  for (auto mode : {AgentMode::kStandard, AgentMode::kLearning}) {
    AgentModel model(full_repair());
    GroundingCache cache;
    CycleContext ctx;
    Agenda agenda;
    model.believed_state = perceive(f.world, ctx);
    insert_goals(f.goals, agenda);
    auto gc = intend(agenda, ctx, model, mode, cache);
    if (mode == AgentMode::kLearning) {
      EXPECT_EQ(agenda.find(removal({3, 2}))->status, GoalStatus::kRejected);
      EXPECT_EQ(gc.size(), 2u);
    } else {
      EXPECT_EQ(agenda.count(GoalStatus::kRejected), 0u);
      EXPECT_EQ(gc.size(), 3u);
    }
  }
}

TEST(Phases, IntendRechecksCurrentGoalsAfterARepair) {
  auto f = hazard_problem();
  AgentModel model;
  GroundingCache cache;
  CycleContext ctx;
  Agenda agenda;
  model.believed_state = perceive(f.world, ctx);
  insert_goals(f.goals, agenda);
  intend(agenda, ctx, model, AgentMode::kLearning, cache);
  EXPECT_EQ(agenda.count(GoalStatus::kCurrent), 3u);
  model.set_domain(full_repair());
  intend(agenda, ctx, model, AgentMode::kLearning, cache);
  EXPECT_EQ(agenda.find(removal({3, 2}))->status, GoalStatus::kRejected);
}

TEST(Phases, UnsolvablePlanRejectsCurrentRemovalGoals) {
  auto f = hazard_problem();
  AgentModel model(full_repair());
  GroundingCache cache;
  CycleContext ctx;
  Agenda agenda;
  model.believed_state = perceive(f.world, ctx);
  insert_goals(f.goals, agenda);
  intend(agenda, ctx, model, AgentMode::kStandard, cache);
  auto r = plan_phase(model, model.believed_state, ctx, agenda, cache);
  EXPECT_EQ(r.status, PlanStatus::kUnsolvable);
  EXPECT_EQ(agenda.count(GoalStatus::kRejected), 2u);
  EXPECT_EQ(ctx.current_goals, std::vector<Literal>{keep({3, 3})});
  ASSERT_TRUE(ctx.plan);
  EXPECT_TRUE(ctx.plan->empty());
}

TEST(Phases, EvaluateSettlesRemovalGoalsOneByOne) {
  CycleContext ctx;
  Agenda agenda;
  insert_goals(hazard_problem().goals, agenda);
  for (std::size_t i = 0; i < agenda.size(); ++i) {
    agenda.set_status(i, GoalStatus::kCurrent);
    ctx.current_goals.push_back(agenda.records()[i].formula);
  }
  GardenWorld w;
  w.plants[{2, 5}] = PlantKind::kInvasive;
  evaluate(observe(w), ctx, agenda);
  EXPECT_EQ(agenda.find(removal({3, 2}))->status, GoalStatus::kAchieved);
  EXPECT_EQ(agenda.find(removal({2, 5}))->status, GoalStatus::kCurrent);
  EXPECT_EQ(agenda.find(keep({3, 3}))->status, GoalStatus::kCurrent);
  EXPECT_EQ(ctx.current_goals.size(), 2u);
}

TEST(Agenda, IllegalTransitionsThrow) {
  Agenda a;
  EXPECT_TRUE(a.insert(keep({3, 3})));
  EXPECT_FALSE(a.insert(keep({3, 3})));
  EXPECT_THROW(a.set_status(0, GoalStatus::kAchieved), ContractViolation);
  a.set_status(0, GoalStatus::kRejected);
  EXPECT_THROW(a.set_status(0, GoalStatus::kCurrent), ContractViolation);
}

TEST(Trace, RecordChecksPreState) {
  Trace t;
  MentalState s0, s1;
  s1.plan_cursor = 1;
  t.record(s0, MentalAction::kPerceive, s1);
  EXPECT_THROW(t.record(s0, MentalAction::kAct, s1), TraceError);
  EXPECT_THROW(t.start(s0), TraceError);
}
