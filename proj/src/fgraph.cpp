#include "figlab/fgraph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace figlab {

bool FeatureGraph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(i, j));
}

FeatureGraph make_graph(int num_features, std::vector<std::pair<int, int>> edges) {
  if (num_features < 0) throw std::invalid_argument("make_graph: negative num_features");
  for (auto& [i, j] : edges) {
    if (i == j) throw std::invalid_argument("make_graph: self-loop at node " + std::to_string(i));
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= num_features)
      throw std::invalid_argument("make_graph: edge endpoint out of range");
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return FeatureGraph{num_features, std::move(edges)};
}

FeatureGraph null_graph(int num_features) { return make_graph(num_features, {}); }

FeatureGraph complete_graph(int num_features) {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(max_edges(num_features)));
  for (int i = 0; i < num_features; ++i)
    for (int j = i + 1; j < num_features; ++j) edges.emplace_back(i, j);
  return make_graph(num_features, std::move(edges));
}

FeatureGraph with_edge(FeatureGraph g, int i, int j) {
  auto edges = std::move(g.edges);
  edges.emplace_back(i, j);
  return make_graph(g.num_features, std::move(edges));
}

FeatureGraph without_edge(FeatureGraph g, int i, int j) {
  if (i > j) std::swap(i, j);
  auto it = std::find(g.edges.begin(), g.edges.end(), std::make_pair(i, j));
  if (it == g.edges.end())
    throw std::invalid_argument("without_edge: edge not present");
  g.edges.erase(it);
  return g;
}

long max_edges(int num_features) {
  return static_cast<long>(num_features) * (num_features - 1) / 2;
}

std::vector<std::vector<int>> adjacency_lists(const FeatureGraph& g) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.num_features));
  for (auto [i, j] : g.edges) {
    adj[static_cast<std::size_t>(i)].push_back(j);
    adj[static_cast<std::size_t>(j)].push_back(i);
  }
  return adj;
}

int shortest_hops(const FeatureGraph& g, int u, int v) {
  if (u == v) throw std::invalid_argument("shortest_hops: u == v");
  if (u < 0 || v < 0 || u >= g.num_features || v >= g.num_features)
    throw std::invalid_argument("shortest_hops: node out of range");
  const auto adj = adjacency_lists(g);
  std::vector<int> dist(static_cast<std::size_t>(g.num_features), -1);
  std::deque<int> queue{u};
  dist[static_cast<std::size_t>(u)] = 0;
  while (!queue.empty()) {
    int x = queue.front();
    queue.pop_front();
    for (int y : adj[static_cast<std::size_t>(x)]) {
      if (dist[static_cast<std::size_t>(y)] >= 0) continue;
      dist[static_cast<std::size_t>(y)] = dist[static_cast<std::size_t>(x)] + 1;
      if (y == v) return dist[static_cast<std::size_t>(y)];
      queue.push_back(y);
    }
  }
  return kUnreachableHops;
}

std::string graph_key(const FeatureGraph& g) {
  std::ostringstream out;
  out << "d=" << g.num_features << ";";
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    if (k > 0) out << ",";
    out << g.edges[k].first << "-" << g.edges[k].second;
  }
  return out.str();
}

void save_edge_list(const FeatureGraph& g, std::ostream& out) {
  out << "d=" << g.num_features << "\n";
  for (auto [i, j] : g.edges) out << i << " " << j << "\n";
}

void save_edge_list(const FeatureGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_edge_list: cannot open " + path);
  save_edge_list(g, out);
}

FeatureGraph load_edge_list(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("d=", 0) != 0)
    throw std::runtime_error("load_edge_list: missing d=<n> header");
  int d = std::stoi(line.substr(2));
  std::vector<std::pair<int, int>> edges;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int i, j;
    if (!(ls >> i >> j)) throw std::runtime_error("load_edge_list: bad edge line: " + line);
    edges.emplace_back(i, j);
  }
  return make_graph(d, std::move(edges));
}

FeatureGraph load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open " + path);
  return load_edge_list(in);
}

}  // namespace figlab
