#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace gacm;
using testing_support::Closure;

namespace {

CategoryHierarchy chain_fixture() {
  return CategoryHierarchy({"clinician", "intern", "resident", "specialist"},
                           {{"specialist", "resident"}, {"resident", "intern"}, {"intern", "clinician"}});
}

// top <- left, right <- bottom, plus a long way round through "mid".
CategoryHierarchy diamond() {
  return CategoryHierarchy({"bottom", "left", "right", "top", "mid"},
                           {{"bottom", "right"}, {"bottom", "left"}, {"left", "top"},
                            {"right", "top"}, {"bottom", "mid"}, {"mid", "left"}});
}

CategoryHierarchy random_dag(std::mt19937_64& rng, std::size_t n, double density) {
  std::set<EntityId> nodes;
  std::vector<HierarchyEdge> edges;
  for (std::size_t i = 0; i < n; ++i) nodes.insert("c" + std::to_string(i));
  std::bernoulli_distribution keep(density);
  for (std::size_t c = 1; c < n; ++c)
    for (std::size_t p = 0; p < c; ++p)
      if (keep(rng)) edges.push_back({"c" + std::to_string(c), "c" + std::to_string(p)});
  return CategoryHierarchy(nodes, edges);
}

}  // namespace

TEST(Hierarchy, ContainsOrEqualsOnChain) {
  auto h = chain_fixture();
  EXPECT_TRUE(h.contains_or_equals("intern", "specialist"));
  EXPECT_TRUE(h.contains_or_equals("clinician", "specialist"));
  EXPECT_TRUE(h.contains_or_equals("resident", "resident"));
  EXPECT_FALSE(h.contains_or_equals("specialist", "intern"));
  EXPECT_THROW(h.contains_or_equals("nobody", "intern"), UnknownIdError);
}

TEST(Hierarchy, PermissionChainOnChain) {
  auto h = chain_fixture();
  EXPECT_EQ(h.permission_chain("specialist", "intern"),
            (std::vector<EntityId>{"specialist", "resident", "intern"}));
  EXPECT_EQ(h.permission_chain("intern", "intern"), (std::vector<EntityId>{"intern"}));
  EXPECT_THROW(h.permission_chain("intern", "specialist"), NoPathError);
}

TEST(Hierarchy, ProhibitionChainRunsDownwards) {
  auto h = chain_fixture();
  EXPECT_EQ(h.prohibition_chain("resident", "specialist"),
            (std::vector<EntityId>{"resident", "specialist"}));
  EXPECT_THROW(h.prohibition_chain("specialist", "resident"), NoPathError);
}

TEST(Hierarchy, DiamondPicksShortestThenLeastIds) {
  auto h = diamond();
  // bottom->left->top and bottom->right->top tie at length 3; "left" < "right".
  EXPECT_EQ(h.permission_chain("bottom", "top"), (std::vector<EntityId>{"bottom", "left", "top"}));
  // The direct edge beats bottom->mid->left.
  EXPECT_EQ(h.permission_chain("bottom", "left"), (std::vector<EntityId>{"bottom", "left"}));
  EXPECT_EQ(h.prohibition_chain("top", "bottom"), (std::vector<EntityId>{"top", "left", "bottom"}));
}

TEST(Hierarchy, RejectsCyclesAndSelfEdges) {
  EXPECT_THROW(CategoryHierarchy({"a", "b"}, {{"a", "b"}, {"b", "a"}}), HierarchyError);
  EXPECT_THROW(CategoryHierarchy({"a"}, {{"a", "a"}}), HierarchyError);
  EXPECT_THROW(CategoryHierarchy({"a"}, {{"a", "b"}}), HierarchyError);
  auto cycle = check_acyclic({{"a", "b"}, {"b", "c"}, {"c", "a"}});
  ASSERT_TRUE(cycle);
  EXPECT_EQ(cycle->front(), cycle->back());
  EXPECT_EQ(cycle->size(), 4u);
  EXPECT_FALSE(check_acyclic({{"a", "b"}, {"b", "c"}, {"a", "c"}}));
}

TEST(Hierarchy, EmptyHierarchy) {
  CategoryHierarchy h({"x"}, {});
  EXPECT_TRUE(h.contains_or_equals("x", "x"));
  EXPECT_EQ(h.permission_chain("x", "x"), (std::vector<EntityId>{"x"}));
}

// Property: contains_or_equals matches a Floyd-Warshall closure, chains are
// the brute-force shortest-least path, and prohibition chains reverse
// permission chains.
TEST(HierarchyProperty, MatchesBruteForceOnRandomDags) {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 200; ++round) {
    const std::size_t n = 1 + rng() % 9;
    auto h = random_dag(rng, n, 0.45);
    Closure cl(h.nodes(), h.edges());
    for (const auto& a : h.nodes()) {
      for (const auto& b : h.nodes()) {
        ASSERT_EQ(h.contains_or_equals(a, b), cl.above(a, b)) << a << " " << b;
        if (cl.above(b, a)) {
          auto chain = h.permission_chain(a, b);
          ASSERT_EQ(chain, testing_support::expected_chain(h, a, b));
          auto down = h.prohibition_chain(b, a);
          std::reverse(down.begin(), down.end());
          ASSERT_EQ(down, chain);
        } else {
          ASSERT_THROW(h.permission_chain(a, b), NoPathError);
        }
      }
    }
  }
}

TEST(HierarchyProperty, ClosureIsReflexiveAndTransitive) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 50; ++round) {
    auto h = random_dag(rng, 8, 0.3);
    for (const auto& a : h.nodes()) {
      EXPECT_TRUE(h.contains_or_equals(a, a));
      for (const auto& b : h.nodes())
        for (const auto& c : h.nodes())
          if (h.contains_or_equals(a, b) && h.contains_or_equals(b, c))
            EXPECT_TRUE(h.contains_or_equals(a, c));
    }
  }
}
