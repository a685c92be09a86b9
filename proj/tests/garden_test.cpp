#include <gtest/gtest.h>

#include <random>

#include "metagarden/garden.hpp"

using namespace metagarden;

namespace {

GardenWorld random_world(std::mt19937_64& rng, int plants) {
  auto p = generate_problem({rng(), plants, 0.5});
  p.world.agent = {2 + static_cast<int>(rng() % 6), 2 + static_cast<int>(rng() % 6)};
  return p.world;
}

}  // namespace

TEST(Cells, NamingRoundTrips) {
  EXPECT_EQ(cell_symbol({3, 2}).name(), "pos3-2");
  EXPECT_EQ(parse_cell(Symbol("pos2-5")), (Cell{2, 5}));
  EXPECT_FALSE(parse_cell(Symbol("spray")).has_value());
  EXPECT_FALSE(parse_cell(Symbol("pos3-")).has_value());
  EXPECT_EQ(garden_cells().size(), 36u);
}

TEST(Directions, NorthIncreasesY) {
  const auto* n = find_direction(Symbol("adj_north"));
  ASSERT_NE(n, nullptr);
  EXPECT_EQ(n->dx, 0);
  EXPECT_EQ(n->dy, 1);
  EXPECT_STREQ(opposite(*n).predicate, "adj_south");
  for (const auto& d : kDirections) {
    EXPECT_EQ(opposite(d).dx, -d.dx);
    EXPECT_EQ(opposite(d).dy, -d.dy);
  }
}

TEST(StaticFacts, AdjacencyMatchesOffsets) {
  const auto& s = static_facts();
  EXPECT_TRUE(s.contains(Atom("adj_north", {"pos3-2", "pos3-3"})));
  EXPECT_FALSE(s.contains(Atom("adj_north", {"pos3-3", "pos3-2"})));
  EXPECT_TRUE(s.contains(Atom("connected", {"pos0-0", "pos1-0"})));
  EXPECT_FALSE(s.contains(Atom("connected", {"pos0-0", "pos1-1"})));
  EXPECT_TRUE(s.contains(Atom("in-garden", {"pos2-2"})));
  EXPECT_FALSE(s.contains(Atom("in-garden", {"pos1-2"})));
  std::size_t adj = 0, in = 0;
  for (const auto& a : s) {
    if (find_direction(a.predicate())) ++adj;
    if (a.predicate() == garden_pred::kInGarden) ++in;
  }
  // Ordered on-map neighbour pairs of a 10x10 grid.
  std::size_t pairs = 0;
  for (int x = 0; x < 10; ++x) {
    for (int y = 0; y < 10; ++y) {
      for (const auto& d : kDirections) pairs += on_map({x + d.dx, y + d.dy});
    }
  }
  EXPECT_EQ(adj, pairs);
  EXPECT_EQ(in, 36u);
}

TEST(EnvStep, SprayOnWalkwayIsRejected) {
  GardenWorld w;
  w.agent = {3, 1};
  w.plants[{3, 2}] = PlantKind::kInvasive;
  auto r = env_step(w, WorldAction::spray());
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.world, w);
}

TEST(EnvStep, MoveMustBeOrthogonalAndOnMap) {
  GardenWorld w;
  EXPECT_FALSE(env_step(w, WorldAction::move({1, 1})).ok());
  EXPECT_FALSE(env_step(w, WorldAction::move({-1, 0})).ok());
  auto r = env_step(w, WorldAction::move({0, 1}));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.world.agent, (Cell{0, 1}));
  EXPECT_EQ(r.world.clock, 1);
}

TEST(EnvStep, HazardSprayAtThreeTwoKillsTheNative) {
  auto w = hazard_problem().world;
  w.agent = {3, 2};
  auto r = env_step(w, WorldAction::spray());
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.world.plants.size(), 1u);
  EXPECT_TRUE(r.world.plants.contains({2, 5}));
}

TEST(EnvStep, SprayKillsExactlyTheMooreNeighbourhood) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    auto w = random_world(rng, 1 + static_cast<int>(rng() % 20));
    auto r = env_step(w, WorldAction::spray());
    ASSERT_TRUE(r.ok());
    for (const auto& [c, k] : w.plants) {
      bool near = std::abs(c.x - w.agent.x) <= 1 && std::abs(c.y - w.agent.y) <= 1;
      EXPECT_EQ(r.world.plants.contains(c), !near);
    }
    EXPECT_EQ(r.world.agent, w.agent);
  }
}

TEST(SafeKillOracle, Hazard) {
  EXPECT_EQ(safe_kill_oracle(hazard_problem().world), (std::set<Cell>{{2, 5}}));
}

TEST(SafeKillOracle, MatchesEnumerationOfSprays) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    auto w = random_world(rng, 1 + static_cast<int>(rng() % 25));
    std::set<Cell> expected;
    for (Cell at : garden_cells()) {
      GardenWorld probe = w;
      probe.agent = at;
      auto r = env_step(probe, WorldAction::spray());
      bool native_lost = false;
      for (Cell k : r.killed) native_lost |= w.plants.at(k) == PlantKind::kNative;
      if (native_lost) continue;
      for (Cell k : r.killed) expected.insert(k);
    }
    EXPECT_EQ(safe_kill_oracle(w), expected);
  }
}

TEST(Generate, TwentyGoalsAtThreeQuarters) {
  auto p = generate_problem({42, 20, 0.75});
  int natives = 0, invasives = 0;
  for (const auto& [c, k] : p.world.plants) {
    EXPECT_TRUE(in_garden(c));
    (k == PlantKind::kNative ? natives : invasives)++;
  }
  EXPECT_EQ(natives, 15);
  EXPECT_EQ(invasives, 5);
  EXPECT_EQ(p.goals.size(), 20u);
  EXPECT_EQ(p.world.agent, (Cell{0, 0}));
}

TEST(Generate, RoundsHalfUp) {
  EXPECT_EQ(native_count(3, 0.5), 2);
  EXPECT_EQ(native_count(5, 0.6), 3);
  EXPECT_EQ(native_count(1, 0.6), 1);
  EXPECT_EQ(native_count(0, 0.75), 0);
}

TEST(Generate, IsDeterministicAndBounded) {
  EXPECT_EQ(generate_problem({9, 12, 0.6}).world, generate_problem({9, 12, 0.6}).world);
  EXPECT_NE(generate_problem({9, 12, 0.6}).world, generate_problem({10, 12, 0.6}).world);
  EXPECT_EQ(generate_problem({1, 36, 0.5}).world.plants.size(), 36u);
  EXPECT_THROW(generate_problem({1, 37, 0.5}), ContractViolation);
  EXPECT_THROW(generate_problem({1, 3, 1.5}), ContractViolation);
}

TEST(Generate, CanReproduceHazardLayout) {
  // Some seed yields the running example's three plants; search a bounded range.
  auto want = hazard_problem().world;
  bool found = false;
  for (std::uint64_t seed = 0; seed < 200000 && !found; ++seed) {
    found = generate_problem({seed, 3, 0.4}).world == want;
  }
  EXPECT_TRUE(found);
}

TEST(ToWorldAction, RequiresAgentPosition) {
  GardenWorld w;
  EXPECT_TRUE(to_world_action(garden_pred::kMove, {cell_symbol({0, 0}), cell_symbol({0, 1})}, w).has_value());
  EXPECT_FALSE(to_world_action(garden_pred::kMove, {cell_symbol({1, 0}), cell_symbol({1, 1})}, w).has_value());
  EXPECT_FALSE(to_world_action(garden_pred::kSpray, {cell_symbol({3, 3})}, w).has_value());
}

TEST(Observe, ContainsFluentsAndStatics) {
  auto s = observe(hazard_problem().world);
  EXPECT_TRUE(s.contains(Atom("agent-at", {"pos0-0"})));
  EXPECT_TRUE(s.contains(Atom("native-at", {"pos3-3"})));
  EXPECT_TRUE(s.contains(Atom("invasive-at", {"pos3-2"})));
  EXPECT_TRUE(s.contains(Atom("in-garden", {"pos7-7"})));
}
