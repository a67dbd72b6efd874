#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "figlab/dmie.hpp"

using namespace figlab;

namespace {

// Bell numbers via the Bell triangle; the oracle for class counts.
std::vector<long> bell_numbers(int up_to) {
  std::vector<long> bell{1};
  std::vector<long> row{1};
  for (int n = 1; n <= up_to; ++n) {
    std::vector<long> next{row.back()};
    for (std::size_t i = 0; i < row.size(); ++i) next.push_back(next[i] + row[i]);
    bell.push_back(next.front());
    row = std::move(next);
  }
  return bell;
}

}  // namespace

TEST_CASE("parse_expression canonical examples") {
  auto e = parse_expression("x0*x1*x2 + x3*x4 + x5 + x6");
  CHECK(e.num_features == 7);
  REQUIRE(e.terms.size() == 4);
  CHECK(e.terms[0] == std::vector<int>{0, 1, 2});
  CHECK(e.terms[1] == std::vector<int>{3, 4});
  CHECK(e.terms[2] == std::vector<int>{5});
  CHECK(e.terms[3] == std::vector<int>{6});

  auto single = parse_expression("x0");
  CHECK(single.num_features == 1);
  CHECK(single.terms == std::vector<std::vector<int>>{{0}});

  CHECK(to_string(e) == "x0*x1*x2 + x3*x4 + x5 + x6");
}

TEST_CASE("parse_expression rejects repeated variables and bad syntax") {
  CHECK_THROWS_AS(parse_expression("x0*x1 + x1*x2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_expression("x0*x0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_expression("x0 + + x1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_expression("y0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_expression(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_expression("x0*x5", 3), std::invalid_argument);
}

TEST_CASE("expression_to_partition adds singleton blocks") {
  auto e = parse_expression("x0*x1*x2 + x3*x4 + x5 + x6");
  auto p = expression_to_partition(e);
  CHECK(p.blocks == std::vector<std::vector<int>>{{0, 1, 2}, {3, 4}, {5}, {6}});

  auto empty = make_expression(3, {});
  CHECK(expression_to_partition(empty).blocks ==
        std::vector<std::vector<int>>{{0}, {1}, {2}});

  auto paired = make_expression(4, {{0, 1}, {2, 3}});
  CHECK(expression_to_partition(paired).blocks == std::vector<std::vector<int>>{{0, 1}, {2, 3}});
}

TEST_CASE("graph_to_partition uses connected components") {
  auto e1 = make_graph(7, {{0, 1}, {0, 2}, {1, 2}, {3, 4}});
  auto e2 = make_graph(7, {{0, 1}, {1, 2}, {3, 4}});
  auto expected = std::vector<std::vector<int>>{{0, 1, 2}, {3, 4}, {5}, {6}};
  CHECK(graph_to_partition(e1).blocks == expected);
  CHECK(graph_to_partition(e2).blocks == expected);

  auto n = null_graph(5);
  CHECK(graph_to_partition(n).blocks.size() == 5);
}

TEST_CASE("partition_to_expression inverts expression_to_partition") {
  auto p = make_partition(7, {{0, 1, 2}, {3, 4}, {5}, {6}});
  auto e = partition_to_expression(p);
  CHECK(to_string(e) == "x0*x1*x2 + x3*x4 + x5 + x6");

  auto pair = make_partition(2, {{0, 1}});
  CHECK(to_string(partition_to_expression(pair)) == "x0*x1");
}

TEST_CASE("graphs_equivalent matches partition equality") {
  auto e1 = make_graph(5, {{0, 1}, {0, 2}, {1, 2}, {3, 4}});
  auto e2 = make_graph(5, {{0, 1}, {1, 2}, {3, 4}});
  CHECK(graphs_equivalent(e1, e2));
  CHECK(graphs_equivalent(e1, e1));
  CHECK_FALSE(graphs_equivalent(complete_graph(4), null_graph(4)));
  CHECK_THROWS_AS(graphs_equivalent(null_graph(3), null_graph(4)), std::invalid_argument);
}

TEST_CASE("class_representative builds a star per block") {
  auto p = make_partition(5, {{0, 1, 2}, {3, 4}});
  auto rep = class_representative(p);
  CHECK(rep.edges == std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {3, 4}});
  CHECK(graph_to_partition(rep) == p);
  CHECK(static_cast<int>(rep.edges.size()) == 5 - 2);

  auto singles = make_partition(4, {{0}, {1}, {2}, {3}});
  CHECK(class_representative(singles).edges.empty());
  auto whole = make_partition(4, {{0, 1, 2, 3}});
  CHECK(class_representative(whole).edges ==
        std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {0, 3}});
}

TEST_CASE("class census matches Bell numbers up to d = 5") {
  const auto bell = bell_numbers(5);
  for (int d = 1; d <= 5; ++d) {
    CAPTURE(d);
    auto census = census_graph_classes(d);
    CHECK(census.graph_count == (1L << max_edges(d)));
    CHECK(static_cast<long>(census.classes.size()) == bell[static_cast<std::size_t>(d)]);
    CHECK(static_cast<long>(enumerate_partitions(d).size()) == bell[static_cast<std::size_t>(d)]);
    long sum = 0;
    for (const auto& [p, count] : census.classes) sum += count;
    CHECK(sum == census.graph_count);
  }
  auto c4 = census_graph_classes(4);
  CHECK(c4.classes.size() == 15);
  CHECK(c4.graph_count == 64);
  auto c5 = census_graph_classes(5);
  CHECK(c5.classes.size() == 52);
  CHECK(c5.graph_count == 1024);
}

TEST_CASE("round trips hold for every partition up to d = 5") {
  for (int d = 1; d <= 5; ++d) {
    for (const auto& p : enumerate_partitions(d)) {
      CHECK(expression_to_partition(partition_to_expression(p)) == p);
      CHECK(graph_to_partition(class_representative(p)) == p);
      auto text = to_string(partition_to_expression(p));
      CHECK(expression_to_partition(parse_expression(text, d)) == p);
    }
  }
}

TEST_CASE("equivalence is an equivalence relation across a full class census") {
  auto graphs = enumerate_graphs(4);
  std::map<std::string, std::vector<const FeatureGraph*>> classes;
  for (const auto& g : graphs) classes[to_string(graph_to_partition(g))].push_back(&g);
  for (const auto& [key, members] : classes) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      CHECK(graphs_equivalent(*members[i], *members[i]));
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        CHECK(graphs_equivalent(*members[i], *members[j]));
        CHECK(graphs_equivalent(*members[j], *members[i]));
      }
    }
  }
  // distinct classes never compare equivalent
  auto first = classes.begin();
  auto second = std::next(first);
  CHECK_FALSE(graphs_equivalent(*first->second.front(), *second->second.front()));
}

TEST_CASE("partition text round trip") {
  auto p = make_partition(7, {{0, 1, 2}, {3, 4}, {5}, {6}});
  std::ostringstream out;
  save_partition(p, out);
  std::istringstream in(out.str());
  CHECK(load_partition(in) == p);
}
