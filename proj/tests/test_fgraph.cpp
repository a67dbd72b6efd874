#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "figlab/rng.hpp"
#include "figlab/strata.hpp"
#include "figlab/synth.hpp"

using namespace figlab;

TEST_CASE("null and complete graphs") {
  CHECK(null_graph(6).edges.empty());
  CHECK(complete_graph(6).edges.size() == 15);
  CHECK(complete_graph(95).edges.size() == 4465);
  CHECK(max_edges(95) == 4465);
}

TEST_CASE("make_graph normalizes and validates") {
  auto g = make_graph(4, {{3, 1}, {0, 2}, {1, 3}});
  CHECK(g.edges == std::vector<std::pair<int, int>>{{0, 2}, {1, 3}});
  CHECK(g.has_edge(3, 1));
  CHECK_FALSE(g.has_edge(0, 1));
  CHECK_THROWS_AS(make_graph(3, {{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_graph(3, {{0, 3}}), std::invalid_argument);
  CHECK_THROWS_AS(without_edge(null_graph(3), 0, 1), std::invalid_argument);
}

TEST_CASE("shortest_hops BFS and sentinel") {
  auto g = make_graph(3, {{0, 2}, {2, 1}});
  CHECK(shortest_hops(g, 0, 1) == 2);
  CHECK(shortest_hops(make_graph(2, {{0, 1}}), 0, 1) == 1);
  CHECK(shortest_hops(null_graph(2), 0, 1) == kUnreachableHops);
  CHECK_THROWS_AS(shortest_hops(null_graph(2), 1, 1), std::invalid_argument);
}

TEST_CASE("hops is 1 exactly on edges and never increases when edges are added") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 5 + static_cast<int>(bounded_rand(rng, 4));
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        if (bounded_rand(rng, 3) == 0) edges.emplace_back(i, j);
    auto g = make_graph(d, edges);
    for (int u = 0; u < d; ++u)
      for (int v = u + 1; v < d; ++v)
        CHECK((shortest_hops(g, u, v) == 1) == g.has_edge(u, v));
    // add one edge, no pair gets farther
    int a = static_cast<int>(bounded_rand(rng, static_cast<std::uint64_t>(d)));
    int b = (a + 1 + static_cast<int>(bounded_rand(rng, static_cast<std::uint64_t>(d - 1)))) % d;
    auto bigger = g.has_edge(a, b) ? g : with_edge(g, a, b);
    for (int u = 0; u < d; ++u)
      for (int v = u + 1; v < d; ++v)
        CHECK(shortest_hops(bigger, u, v) <= shortest_hops(g, u, v));
  }
}

TEST_CASE("edge list io round trip") {
  auto g = make_graph(6, {{0, 1}, {2, 3}, {4, 5}});
  std::ostringstream out;
  save_edge_list(g, out);
  std::istringstream in(out.str());
  CHECK(load_edge_list(in) == g);
  CHECK(graph_key(g) == "d=6;0-1,2-3,4-5");
}

TEST_CASE("ground_truth_graph from pairwise expressions") {
  auto e = parse_expression("x0*x1 + x2*x3 + x4 + x5");
  auto g = ground_truth_graph(e);
  CHECK(g.edges == std::vector<std::pair<int, int>>{{0, 1}, {2, 3}});

  CHECK(ground_truth_graph(parse_expression("x0 + x1 + x2")).edges.empty());
  CHECK_THROWS_AS(ground_truth_graph(parse_expression("x0*x1*x2")), std::invalid_argument);

  auto ten = pairwise_layout(10, 2);
  CHECK(ground_truth_graph(ten).edges.size() == 10);
}

TEST_CASE("label_edges splits interaction from noise edges") {
  auto e = parse_expression("x0*x1 + x2*x3 + x4 + x5");
  auto full = label_edges(complete_graph(6), e);
  CHECK(full.interaction_edges.size() == 2);
  CHECK(full.non_interaction_edges.size() == 13);

  auto truth_only = label_edges(ground_truth_graph(e), e);
  CHECK(truth_only.interaction_edges.size() == 2);
  CHECK(truth_only.non_interaction_edges.empty());

  auto none = label_edges(null_graph(6), e);
  CHECK(none.interaction_edges.empty());
  CHECK(none.non_interaction_edges.empty());
}

TEST_CASE("sibling_set toggles interaction edges only") {
  auto e = parse_expression("x0*x1 + x2*x3 + x4 + x5");
  auto g = make_graph(6, {{0, 1}, {2, 3}, {0, 4}, {1, 5}});
  auto sibs = sibling_set(g, e);
  REQUIRE(sibs.size() == 4);
  std::set<std::string> members;
  for (const auto& s : sibs) {
    members.insert(member_code(s, e));
    // non-interaction part identical
    auto labeling = label_edges(s, e);
    CHECK(labeling.non_interaction_edges ==
          std::vector<std::pair<int, int>>{{0, 4}, {1, 5}});
  }
  CHECK(members == std::set<std::string>{"00", "01", "10", "11"});

  // a graph without interaction edges reaches the same four-set by addition
  auto bare = make_graph(6, {{0, 4}, {1, 5}});
  auto sibs2 = sibling_set(bare, e);
  std::set<std::string> keys1, keys2;
  for (const auto& s : sibs) keys1.insert(graph_key(s));
  for (const auto& s : sibs2) keys2.insert(graph_key(s));
  CHECK(keys1 == keys2);

  auto single = parse_expression("x0*x1 + x2");
  CHECK(sibling_set(make_graph(3, {{0, 1}}), single).size() == 2);
}

TEST_CASE("removal_lattice covers one-edge removals") {
  auto e = parse_expression("x0*x1 + x2*x3 + x4 + x5");
  auto g = make_graph(6, {{0, 1}, {2, 3}, {4, 5}});
  auto lattice = removal_lattice(g, e);
  CHECK(lattice.size() == 4);
  for (const auto& [parent, child] : lattice) {
    auto ps = compute_strata(parent, e);
    auto cs = compute_strata(child, e);
    CHECK(ps.interaction_edges == cs.interaction_edges + 1);
    CHECK(ps.non_interaction_edges == cs.non_interaction_edges);
  }

  auto one = make_graph(6, {{0, 1}, {4, 5}});
  CHECK(removal_lattice(one, e).size() == 1);
  CHECK(removal_lattice(make_graph(6, {{4, 5}}), e).empty());
}

TEST_CASE("sample_stratified honors quotas and recomputed strata match") {
  auto e = parse_expression("x0*x1 + x2*x3 + x4 + x5");
  StrataPlan plan;
  plan.cells.push_back({5, std::nullopt, 2, 4, std::nullopt});
  plan.sibling_closure = false;
  std::mt19937_64 rng(7);
  auto sampled = sample_stratified(e, plan, rng);
  CHECK(sampled.size() == 5);
  std::set<std::string> keys;
  for (const auto& sg : sampled) {
    keys.insert(graph_key(sg.graph));
    CHECK(sg.strata.interaction_edges == 2);
    CHECK(sg.strata.non_interaction_edges == 4);
    CHECK(sg.graph.has_edge(0, 1));
    CHECK(sg.graph.has_edge(2, 3));
    CHECK(compute_strata(sg.graph, e) == sg.strata);
    CHECK(sg.member == "11");
  }
  CHECK(keys.size() == 5);
}

TEST_CASE("sample_stratified edge cases") {
  auto e = parse_expression("x0*x1 + x2*x3 + x4 + x5");

  StrataPlan null_plan;
  null_plan.cells.push_back({1, 0, std::nullopt, std::nullopt, std::nullopt});
  null_plan.sibling_closure = false;
  std::mt19937_64 rng(3);
  auto only_null = sample_stratified(e, null_plan, rng);
  REQUIRE(only_null.size() == 1);
  CHECK(only_null[0].graph == null_graph(6));

  StrataPlan impossible;
  impossible.cells.push_back({1, std::nullopt, 3, std::nullopt, std::nullopt});
  CHECK_THROWS_AS(sample_stratified(e, impossible, rng), InfeasibleStratum);

  StrataPlan too_many;
  too_many.cells.push_back({5, 0, 2, std::nullopt, std::nullopt});
  too_many.cells.back().total_edges = 0;  // contradicts interaction+non = 2
  CHECK_THROWS_AS(sample_stratified(e, too_many, rng), InfeasibleStratum);
}

TEST_CASE("sibling closure fills every interaction subset per group") {
  auto e = parse_expression("x0*x1 + x2*x3 + x4 + x5");
  StrataPlan plan;
  plan.cells.push_back({3, std::nullopt, 2, 3, std::nullopt});
  plan.sibling_closure = true;
  std::mt19937_64 rng(19);
  auto sampled = sample_stratified(e, plan, rng);
  std::map<std::string, std::set<std::string>> groups;
  for (const auto& sg : sampled) groups[sg.group_key].insert(sg.member);
  for (const auto& [group, members] : groups)
    CHECK(members == std::set<std::string>{"00", "01", "10", "11"});
}

TEST_CASE("hop-profile sampling by rejection") {
  auto e = parse_expression("x0*x1 + x2*x3 + x4 + x5");
  StrataPlan plan;
  StrataCell cell;
  cell.count = 3;
  cell.interaction_edges = 0;
  cell.hops = std::vector<int>{2, 2};
  plan.cells.push_back(cell);
  plan.sibling_closure = false;
  std::mt19937_64 rng(23);
  auto sampled = sample_stratified(e, plan, rng);
  CHECK(sampled.size() == 3);
  for (const auto& sg : sampled) {
    CHECK(sg.strata.hops == std::vector<int>{2, 2});
    CHECK_FALSE(sg.graph.has_edge(0, 1));
    CHECK_FALSE(sg.graph.has_edge(2, 3));
  }
}
