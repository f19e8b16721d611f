#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "test_support.hpp"

using namespace gacm;

TEST(Graph, SingleDirectPar) {
  ParSet pars{{"p1", {"c1"}, {"read", "r1"}, Sign::grant}};
  auto g = build_graph(pars);
  EXPECT_EQ(g.nodes.size(), 4u);
  ASSERT_EQ(g.edges.size(), 3u);
  std::set<EdgeType> types;
  for (const auto& e : g.edges) types.insert(e.type);
  EXPECT_EQ(types, (std::set<EdgeType>{kPC, kCA, kAR}));
  for (const auto& e : g.edges)
    EXPECT_EQ(e.sign, e.type == kAR ? EdgeSign::grant : EdgeSign::neutral);
  EXPECT_TRUE(check_well_typed(g).empty());
  auto doc = to_node_link(g);
  EXPECT_EQ(doc["nodes"].size(), 4u);
  EXPECT_EQ(doc["links"].size(), 3u);
}

TEST(Graph, InheritedChainAddsCcEdges) {
  ParSet pars{{"p1", {"specialist", "resident", "intern"}, {"read", "record"}, Sign::grant}};
  auto g = build_graph(pars);
  std::size_t cc = 0;
  for (const auto& e : g.edges)
    if (e.type == kCC) ++cc;
  EXPECT_EQ(cc, 2u);
  EXPECT_EQ(g.edges.size(), 5u);  // PC, CC, CC, CA, AR
  EXPECT_TRUE(testing_support::has_grant_path(g, "p1", "read", "record"));
}

TEST(Graph, DenyChainsStillPointUpwards) {
  ParSet pars{{"p1", {"rn", "aprn"}, {"create", "prescription"}, Sign::deny}};
  auto g = build_graph(pars);
  bool found = false;
  for (const auto& e : g.edges)
    if (e.type == kCC) {
      EXPECT_EQ(e.from, "C:aprn");
      EXPECT_EQ(e.to, "C:rn");
      found = true;
    }
  EXPECT_TRUE(found);
  EXPECT_FALSE(testing_support::has_grant_path(g, "p1", "create", "prescription"));
}

TEST(Graph, GrantAndDenyOnTheSamePermissionStayApart) {
  ParSet pars{{"u1", {"staff"}, {"read", "record"}, Sign::grant},
              {"u1", {"staff"}, {"read", "record"}, Sign::deny}};
  auto g = build_graph(pars);
  std::set<EdgeSign> signs;
  for (const auto& e : g.edges)
    if (e.type == kAR) signs.insert(e.sign);
  EXPECT_EQ(signs, (std::set<EdgeSign>{EdgeSign::grant, EdgeSign::deny}));
  auto dot = to_dot(g);
  EXPECT_NE(dot.find("style=dashed"), std::string::npos);
}

TEST(Graph, EmptyParSet) {
  auto g = build_graph({});
  EXPECT_TRUE(check_well_typed(g).empty());
  EXPECT_EQ(export_graph(g, GraphFormat::node_link), "{\n  \"nodes\": [],\n  \"links\": []\n}\n");
}

TEST(Graph, ForbiddenEdgeTypeIsReported) {
  PolicyGraph g;
  g.nodes = {{"A:read", "read", "read", NodeType::A}, {"P:p1", "p1", "p1", NodeType::P}};
  g.edges = {{"P:p1", "A:read", EdgeType{NodeType::P, NodeType::A}, EdgeSign::neutral}};
  auto v = check_well_typed(g);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].edge.from, "P:p1");
  EXPECT_NE(v[0].reason.find("PA"), std::string::npos);
}

TEST(Graph, MismatchedEndpointsAreReported) {
  PolicyGraph g;
  g.nodes = {{"A:read", "read", "read", NodeType::A}, {"P:p1", "p1", "p1", NodeType::P}};
  g.edges = {{"P:p1", "A:read", kPC, EdgeSign::neutral}};
  EXPECT_EQ(check_well_typed(g).size(), 1u);
  g.edges = {{"P:p1", "P:p1", kPC, EdgeSign::neutral}};
  EXPECT_FALSE(check_well_typed(g).empty());
  g.edges = {{"P:p1", "C:ghost", kPC, EdgeSign::neutral}};
  EXPECT_FALSE(check_well_typed(g).empty());
}

TEST(Graph, LabelsComeFromTheRegistry) {
  auto policy = testing_support::load_fixture("hospital");
  auto result = evaluate(policy, {}, Priority::permissions);
  auto g = build_graph(result.pars, &policy.registry);
  const auto* cox = g.find("P:000001");
  ASSERT_NE(cox, nullptr);
  EXPECT_EQ(cox->label, "P. Cox");
  EXPECT_EQ(cox->entity, "000001");
}

TEST(Graph, DotExportMatchesGolden) {
  auto policy = testing_support::load_fixture("hospital");
  auto result = evaluate(policy, {}, Priority::permissions);
  auto dot = export_graph(build_graph(result.pars, &policy.registry), GraphFormat::dot);
  std::ifstream in(testing_support::test_data("golden/hospital.dot"));
  ASSERT_TRUE(in) << "golden file missing";
  std::stringstream golden;
  golden << in.rdbuf();
  EXPECT_EQ(dot, golden.str());
}

TEST(Graph, DotQuoting) {
  ParSet pars{{"p\"1", {"c"}, {"a", "r"}, Sign::grant}};
  auto dot = to_dot(build_graph(pars));
  EXPECT_NE(dot.find("\"P:p\\\"1\""), std::string::npos);
}

// Property: graphs of random evaluations are well typed and carry a path
// for every grant.
TEST(GraphProperty, RandomPoliciesGiveWellTypedGraphs) {
  std::mt19937_64 rng(41);
  for (int round = 0; round < 100; ++round) {
    auto policy = random_policy(rng);
    for (auto priority : {Priority::permissions, Priority::prohibitions}) {
      auto result = evaluate(policy, {}, priority);
      auto g = build_graph(result.pars, &policy.registry);
      ASSERT_TRUE(check_well_typed(g).empty());
      for (const auto& par : result.pars)
        if (par.sign == Sign::grant)
          ASSERT_TRUE(testing_support::has_grant_path(g, par.principal, par.permission.action,
                                                      par.permission.resource));
    }
  }
}
