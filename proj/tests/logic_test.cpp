#include <gtest/gtest.h>

#include <random>

#include "metagarden/garden.hpp"
#include "metagarden/logic.hpp"

using namespace metagarden;

namespace {

Atom native(std::string_view cell) { return Atom("native-at", {cell}); }
Atom invasive(std::string_view cell) { return Atom("invasive-at", {cell}); }
Atom agent(std::string_view cell) { return Atom("agent-at", {cell}); }

}  // namespace

TEST(Symbol, InternsByName) {
  Symbol a("pos3-3"), b(std::string("pos3-3"));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.name(), "pos3-3");
  EXPECT_TRUE(Symbol("?to").is_variable());
  EXPECT_FALSE(a.is_variable());
}

TEST(Atom, PrintsInPddlSpelling) {
  EXPECT_EQ(native("pos3-3").str(), "(native-at pos3-3)");
  EXPECT_EQ((Literal{invasive("pos2-5"), false}).str(), "(not (invasive-at pos2-5))");
  EXPECT_THROW(Atom("p", {"a", "b", "c", "d", "e"}), ContractViolation);
}

TEST(Entails, Membership) {
  State s{native("pos3-3")};
  EXPECT_TRUE(entails(s, GoalFormula{{native("pos3-3"), true}}));
}

TEST(Entails, ClosedWorldAbsence) {
  State s{native("pos3-3")};
  EXPECT_TRUE(entails(s, GoalFormula{{invasive("pos3-2"), false}}));
}

TEST(Entails, StandardAgentHazardOutcomeFails) {
  // After both sprays the invasives are gone and so is the native.
  State s{agent("pos2-5")};
  GoalFormula g{{native("pos3-3"), true}, {invasive("pos2-5"), false}, {invasive("pos3-2"), false}};
  EXPECT_FALSE(entails(s, g));
}

TEST(Entails, NonGroundGoalIsAContractViolation) {
  State s;
  EXPECT_THROW(entails(s, GoalFormula{{native("?p"), true}}), ContractViolation);
}

TEST(Entails, ConjunctSubsetsStayEntailed) {
  std::mt19937 rng(5);
  std::vector<Atom> universe;
  for (int i = 0; i < 8; ++i) universe.push_back(native("c" + std::to_string(i)));
  for (int trial = 0; trial < 200; ++trial) {
    State s;
    GoalFormula g;
    for (const auto& a : universe) {
      if (rng() % 2) s.insert(a);
      switch (rng() % 3) {
        case 0: g.add({a, s.contains(a)}); break;
        case 1: g.add({a, !s.contains(a)}); break;
        default: break;
      }
    }
    if (!entails(s, g)) continue;
    std::vector<Literal> sub;
    for (const auto& l : g) {
      if (rng() % 2) sub.push_back(l);
    }
    EXPECT_TRUE(entails(s, GoalFormula(sub)));
  }
}

TEST(GoalFormula, RejectsContradictions) {
  GoalFormula g;
  g.add({native("pos3-3"), true});
  g.add({native("pos3-3"), true});
  EXPECT_EQ(g.size(), 1u);
  EXPECT_THROW(g.add({native("pos3-3"), false}), ContractViolation);
}

TEST(DiffStates, IdenticalStatesHaveNoDiscrepancy) {
  State s{native("pos3-3"), agent("pos3-2")};
  EXPECT_TRUE(diff_states(s, s).empty());
}

TEST(DiffStates, LostNativeIsMissing) {
  State expected{native("pos3-3"), agent("pos3-2")};
  State observed{agent("pos3-2")};
  auto d = diff_states(expected, observed);
  EXPECT_EQ(d.missing, std::vector<Atom>{native("pos3-3")});
  EXPECT_TRUE(d.extra.empty());
}

TEST(DiffStates, OneSidedExtra) {
  auto d = diff_states(State{}, State{invasive("pos2-5")});
  EXPECT_TRUE(d.missing.empty());
  EXPECT_EQ(d.extra, std::vector<Atom>{invasive("pos2-5")});
}

TEST(DiffStates, IsAntisymmetricAndZeroOnlyForEqualStates) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    State a, b;
    for (int i = 0; i < 6; ++i) {
      if (rng() % 2) a.insert(invasive("c" + std::to_string(i)));
      if (rng() % 2) b.insert(invasive("c" + std::to_string(i)));
    }
    auto ab = diff_states(a, b), ba = diff_states(b, a);
    EXPECT_EQ(ab.missing, ba.extra);
    EXPECT_EQ(ab.extra, ba.missing);
    EXPECT_EQ(ab.empty(), a == b);
  }
}

TEST(Substitute, BindsVariables) {
  Binding b;
  b.bind(Symbol("?from"), Symbol("pos3-2"));
  b.bind(Symbol("?to"), Symbol("pos3-3"));
  Literal l{Atom("adj_north", {"?from", "?to"}), true};
  auto g = substitute(l, b);
  EXPECT_EQ(g.atom, Atom("adj_north", {"pos3-2", "pos3-3"}));
  EXPECT_TRUE(g.positive);
}

TEST(Substitute, GroundLiteralIsUnchangedAndIdempotent) {
  Literal l{invasive("pos2-5"), false};
  EXPECT_EQ(substitute(l, Binding{}), l);
  EXPECT_EQ(substitute(substitute(l, Binding{}), Binding{}), l);
}

TEST(Substitute, UnboundVariableFails) {
  EXPECT_THROW(substitute(Literal{Atom("spray", {"?p"}), true}, Binding{}), SubstitutionError);
}

TEST(State, PrintsSortedByName) {
  State s{native("pos3-3"), agent("pos0-0"), invasive("pos2-5")};
  auto v = s.sorted_by_name();
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0], agent("pos0-0"));
  EXPECT_EQ(v[1], invasive("pos2-5"));
  EXPECT_EQ(v[2], native("pos3-3"));
}
