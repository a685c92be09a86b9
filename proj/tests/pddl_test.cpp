#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "metagarden/domains.hpp"
#include "metagarden/garden.hpp"
#include "metagarden/learner.hpp"
#include "metagarden/pddl.hpp"

using namespace metagarden;

namespace {

std::string read_file(const std::string& rel) {
  std::ifstream in(std::string(METAGARDEN_SOURCE_DIR) + "/" + rel);
  EXPECT_TRUE(in) << rel;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kMetaTableText = R"(
(define (domain meta-table)
  (:requirements :strips :typing)
  (:types operator state)
  (:predicates (has-discrepancy ?s - state) (outdated ?op - operator)
               (caused_discrepancy ?op - operator) (learned ?op - operator ?s - state))
  (:action perform-learning
    :parameters (?op - operator ?current-state - state)
    :precondition (and (has-discrepancy ?current-state)
                       (outdated ?op)
                       (caused_discrepancy ?op))
    :effect (and (learned ?op ?current-state))))
)";

std::string spray_domain(const std::string& effect) {
  return R"((define (domain g)
  (:requirements :strips :typing :conditional-effects :universal-effects)
  (:types mapgrid)
  (:predicates (agent-at ?p - mapgrid) (native-at ?p - mapgrid) (invasive-at ?p - mapgrid)
               (adj_north ?a - mapgrid ?b - mapgrid))
  (:action spray
    :parameters (?to - mapgrid)
    :precondition (and (agent-at ?to))
    :effect (and (not (invasive-at ?to))
      )" + effect + R"())))";
}

Domain garden_like(const std::string& action) {
  return parse_domain(R"((define (domain g)
  (:requirements :strips :typing :negative-preconditions)
  (:types mapgrid)
  (:predicates (agent-at ?p - mapgrid) (native-at ?p - mapgrid))
  )" + action + ")");
}

int parse_error_line(const std::string& text) {
  try {
    parse_domain(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST(ParseDomain, MetaTableAction) {
  auto d = parse_domain(kMetaTableText);
  ASSERT_EQ(d.schemas.size(), 1u);
  const auto& s = d.schemas[0];
  EXPECT_EQ(s.name.name(), "perform-learning");
  ASSERT_EQ(s.params.size(), 2u);
  EXPECT_EQ(s.params[0].name.name(), "?op");
  EXPECT_EQ(s.params[0].type.name(), "operator");
  EXPECT_EQ(s.params[1].name.name(), "?current-state");
  EXPECT_EQ(s.params[1].type.name(), "state");
  ASSERT_EQ(s.precondition.size(), 3u);
  EXPECT_EQ(s.precondition[0].str(), "(has-discrepancy ?current-state)");
  EXPECT_EQ(s.precondition[1].str(), "(outdated ?op)");
  EXPECT_EQ(s.precondition[2].str(), "(caused_discrepancy ?op)");
  ASSERT_EQ(s.effects.size(), 1u);
  EXPECT_EQ(s.effects[0].str(), "(learned ?op ?current-state)");
  EXPECT_TRUE(s.cond_effects.empty());
}

TEST(ParseDomain, QuantifiedConditionalEffect) {
  auto d = parse_domain(spray_domain(R"((forall (?pos - mapgrid)
        (when (and (adj_north ?to ?pos))
          (and (not (native-at ?pos)) (not (invasive-at ?pos))))))"));
  const auto& s = d.schemas.at(0);
  ASSERT_EQ(s.cond_effects.size(), 1u);
  const auto& ce = s.cond_effects[0];
  ASSERT_EQ(ce.quantified.size(), 1u);
  EXPECT_EQ(ce.quantified[0].name.name(), "?pos");
  EXPECT_EQ(ce.quantified[0].type.name(), "mapgrid");
  ASSERT_EQ(ce.condition.size(), 1u);
  EXPECT_EQ(ce.condition[0].str(), "(adj_north ?to ?pos)");
  ASSERT_EQ(ce.effects.size(), 2u);
  EXPECT_EQ(ce.effects[0].str(), "(not (native-at ?pos))");
  EXPECT_EQ(ce.effects[1].str(), "(not (invasive-at ?pos))");
}

TEST(ParseDomain, EmptyPrecondition) {
  auto d = garden_like("(:action noop :parameters (?p - mapgrid) :precondition (and ) :effect (and (agent-at ?p)))");
  EXPECT_TRUE(d.schemas.at(0).precondition.empty());
}

TEST(ParseDomain, KeywordsAreCaseInsensitive) {
  std::string upper = kMetaTableText;
  for (auto key : {":action", ":parameters", ":precondition", ":effect", "define", "domain"}) {
    std::string k(key), u;
    for (char c : k) u += static_cast<char>(std::toupper(c));
    for (auto pos = upper.find(k); pos != std::string::npos; pos = upper.find(k, pos + u.size())) {
      upper.replace(pos, k.size(), u);
    }
  }
  EXPECT_EQ(parse_domain(upper), parse_domain(kMetaTableText));
}

TEST(ParseDomain, RejectsUnsupportedConstructsWithPosition) {
  EXPECT_THROW(garden_like("(:action a :parameters (?p - mapgrid) :precondition (or (agent-at ?p) (native-at ?p)) "
                           ":effect (and (agent-at ?p)))"),
               ParseError);
  EXPECT_THROW(garden_like("(:action a :parameters (?p - mapgrid) :precondition (and) :effect (increase (total) 1))"),
               ParseError);
  EXPECT_THROW(garden_like("(:action a :parameters (?p - mapgrid) :precondition (and (ghost ?p)) :effect (and))"),
               ParseError);
  EXPECT_THROW(garden_like("(:action a :parameters (?p - mapgrid) :precondition (and (agent-at ?p ?p)) :effect (and))"),
               ParseError);
  EXPECT_THROW(garden_like("(:action a :parameters (?p - tree) :precondition (and) :effect (and))"), ParseError);
  EXPECT_THROW(garden_like("(:action a :parameters (?p - mapgrid) :precondition (and (agent-at ?q)) :effect (and))"),
               ParseError);
  EXPECT_THROW(parse_domain("(define (domain x) (:requirements :fluents))"), ParseError);
  EXPECT_THROW(parse_domain("(define (domain x)"), ParseError);

  std::string text = "(define (domain g)\n  (:requirements :strips)\n  (:predicates (p))\n"
                     "  (:action a :parameters () :precondition (and (q)) :effect (and (p))))";
  EXPECT_EQ(parse_error_line(text), 4);
}

TEST(ParseDomain, RejectsContradictoryEffects) {
  EXPECT_THROW(garden_like("(:action a :parameters (?p - mapgrid) :precondition (and) "
                           ":effect (and (agent-at ?p) (not (agent-at ?p))))"),
               ParseError);
}

TEST(ParseProblem, HazardGoal) {
  auto p = parse_problem(read_file("domains/garden-problem-hazard.pddl"), garden_domain());
  GoalFormula want{{Atom("native-at", {"pos3-3"}), true},
                   {Atom("invasive-at", {"pos2-5"}), false},
                   {Atom("invasive-at", {"pos3-2"}), false}};
  EXPECT_EQ(p.goal, want);
  EXPECT_EQ(p.objects.size(), 100u);
  EXPECT_TRUE(p.init.contains(Atom("agent-at", {"pos0-0"})));
}

TEST(ParseProblem, EmptyInit) {
  auto p = parse_problem("(define (problem e) (:domain meta) (:objects spray - operator cs - state) (:init) "
                         "(:goal (and (learned spray cs))))",
                         meta_domain());
  EXPECT_TRUE(p.init.empty());
}

TEST(ParseProblem, UndeclaredObjectInGoal) {
  EXPECT_THROW(parse_problem("(define (problem e) (:domain garden) (:objects pos3-3 - mapgrid) (:init) "
                             "(:goal (and (native-at pos9-99))))",
                             garden_domain()),
               ParseError);
}

TEST(RenderDomain, MetaTableRoundTripIsAFixpoint) {
  auto d = parse_domain(kMetaTableText);
  auto text = render_domain(d);
  EXPECT_EQ(parse_domain(text), d);
  EXPECT_EQ(render_domain(parse_domain(text)), text);
}

TEST(RenderDomain, ZeroSchemas) {
  auto d = parse_domain("(define (domain empty) (:requirements :strips) (:predicates (p)))");
  auto text = render_domain(d);
  EXPECT_EQ(parse_domain(text), d);
  EXPECT_EQ(text.find(":action"), std::string::npos);
}

TEST(RenderDomain, RepairedSprayHasEightBlocks) {
  std::vector<ConditionalEffect> all;
  for (const auto& d : kDirections) all.push_back(neighbour_effect(d));
  auto text = render_domain(repair_operator(garden_domain(), garden_pred::kSpray, all));
  std::size_t foralls = 0, whens = 0;
  for (auto p = text.find("(forall"); p != std::string::npos; p = text.find("(forall", p + 1)) ++foralls;
  for (auto p = text.find("(when"); p != std::string::npos; p = text.find("(when", p + 1)) ++whens;
  EXPECT_EQ(foralls, 8u);
  EXPECT_EQ(whens, 8u);
}

TEST(GoldenFiles, MatchBuiltInTexts) {
  EXPECT_EQ(read_file("domains/garden.pddl"), kGardenDomainText);
  EXPECT_EQ(read_file("domains/meta.pddl"), kMetaDomainText);
}

TEST(GoldenFiles, AreRenderFixpoints) {
  for (auto path : {"domains/garden.pddl", "domains/meta.pddl", "domains/garden-repaired.pddl"}) {
    auto text = read_file(path);
    auto d = parse_domain(text);
    EXPECT_EQ(render_domain(d), text) << path;
    EXPECT_EQ(parse_domain(render_domain(d)), d) << path;
  }
  auto text = read_file("domains/garden-problem-hazard.pddl");
  auto p = parse_problem(text, garden_domain());
  EXPECT_EQ(render_problem(p), text);
  EXPECT_EQ(parse_problem(render_problem(p), garden_domain()), p);
}

TEST(GoldenFiles, HazardProblemMatchesGenerator) {
  auto f = hazard_problem();
  auto p = make_problem(observe(f.world), f.goals, "garden-hazard");
  EXPECT_EQ(render_problem(p), read_file("domains/garden-problem-hazard.pddl"));
}

TEST(GoldenFiles, RepairedDomainMatchesFullRepair) {
  std::vector<ConditionalEffect> all;
  for (const auto& d : kDirections) all.push_back(neighbour_effect(d));
  EXPECT_EQ(render_domain(repair_operator(garden_domain(), garden_pred::kSpray, all)),
            read_file("domains/garden-repaired.pddl"));
}
