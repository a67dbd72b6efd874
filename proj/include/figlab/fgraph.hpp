#pragma once
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace figlab {

// Hop count reported for node pairs with no connecting path.
inline constexpr int kUnreachableHops = 99;

// Undirected graph over feature indices [0, num_features).
// Edges are stored normalized: first < second, ascending, no duplicates.
struct FeatureGraph {
  int num_features = 0;
  std::vector<std::pair<int, int>> edges;

  bool has_edge(int i, int j) const;
  bool operator==(const FeatureGraph&) const = default;
};

FeatureGraph make_graph(int num_features, std::vector<std::pair<int, int>> edges);
FeatureGraph null_graph(int num_features);
FeatureGraph complete_graph(int num_features);

FeatureGraph with_edge(FeatureGraph g, int i, int j);
FeatureGraph without_edge(FeatureGraph g, int i, int j);

long max_edges(int num_features);
std::vector<std::vector<int>> adjacency_lists(const FeatureGraph& g);

// BFS shortest-path length between distinct nodes; kUnreachableHops when
// no path exists.
int shortest_hops(const FeatureGraph& g, int u, int v);

// Canonical one-line form, e.g. "d=6;0-1,2-3" ("d=6;" for no edges).
std::string graph_key(const FeatureGraph& g);

// Edge-list text format: header "d=<n>", then one "i j" line per edge.
void save_edge_list(const FeatureGraph& g, std::ostream& out);
void save_edge_list(const FeatureGraph& g, const std::string& path);
FeatureGraph load_edge_list(std::istream& in);
FeatureGraph load_edge_list_file(const std::string& path);

}  // namespace figlab
