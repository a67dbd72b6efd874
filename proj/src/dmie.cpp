#include "figlab/dmie.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace figlab {
namespace {

void canonicalize_groups(std::vector<std::vector<int>>& groups) {
  for (auto& g : groups) std::sort(g.begin(), g.end());
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

void check_disjoint_in_range(const std::vector<std::vector<int>>& groups, int d,
                             const char* what) {
  std::vector<char> seen(static_cast<std::size_t>(d), 0);
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument(std::string(what) + ": empty group");
    for (int idx : g) {
      if (idx < 0 || idx >= d)
        throw std::invalid_argument(std::string(what) + ": index " + std::to_string(idx) +
                                    " out of range for d=" + std::to_string(d));
      if (seen[static_cast<std::size_t>(idx)])
        throw std::invalid_argument(std::string(what) + ": index " + std::to_string(idx) +
                                    " appears twice");
      seen[static_cast<std::size_t>(idx)] = 1;
    }
  }
}

}  // namespace

DmieExpression make_expression(int num_features, std::vector<std::vector<int>> terms) {
  if (num_features < 0) throw std::invalid_argument("make_expression: negative num_features");
  check_disjoint_in_range(terms, num_features, "make_expression");
  canonicalize_groups(terms);
  return DmieExpression{num_features, std::move(terms)};
}

FeaturePartition make_partition(int num_features, std::vector<std::vector<int>> blocks) {
  if (num_features < 0) throw std::invalid_argument("make_partition: negative num_features");
  check_disjoint_in_range(blocks, num_features, "make_partition");
  std::size_t covered = 0;
  for (const auto& b : blocks) covered += b.size();
  if (covered != static_cast<std::size_t>(num_features))
    throw std::invalid_argument("make_partition: blocks do not cover [0, d)");
  canonicalize_groups(blocks);
  return FeaturePartition{num_features, std::move(blocks)};
}

DmieExpression parse_expression(const std::string& text, int num_features) {
  std::vector<std::vector<int>> terms;
  int max_index = -1;
  std::string term_text;
  std::istringstream ts(text);
  bool any_token = false;
  while (std::getline(ts, term_text, '+')) {
    std::vector<int> term;
    std::istringstream fs(term_text);
    std::string token;
    while (std::getline(fs, token, '*')) {
      // trim whitespace
      auto b = token.find_first_not_of(" \t");
      auto e = token.find_last_not_of(" \t");
      if (b == std::string::npos)
        throw std::invalid_argument("parse_expression: empty factor in \"" + term_text + "\"");
      token = token.substr(b, e - b + 1);
      if (token.size() < 2 || token[0] != 'x')
        throw std::invalid_argument("parse_expression: expected x<k>, got \"" + token + "\"");
      for (std::size_t k = 1; k < token.size(); ++k)
        if (!std::isdigit(static_cast<unsigned char>(token[k])))
          throw std::invalid_argument("parse_expression: bad index in \"" + token + "\"");
      int idx = std::stoi(token.substr(1));
      term.push_back(idx);
      max_index = std::max(max_index, idx);
      any_token = true;
    }
    if (term.empty())
      throw std::invalid_argument("parse_expression: empty term");
    terms.push_back(std::move(term));
  }
  if (!any_token) throw std::invalid_argument("parse_expression: empty expression");
  int d = num_features >= 0 ? num_features : max_index + 1;
  return make_expression(d, std::move(terms));
}

std::string to_string(const DmieExpression& e) {
  std::ostringstream out;
  for (std::size_t t = 0; t < e.terms.size(); ++t) {
    if (t > 0) out << " + ";
    for (std::size_t k = 0; k < e.terms[t].size(); ++k) {
      if (k > 0) out << "*";
      out << "x" << e.terms[t][k];
    }
  }
  return out.str();
}

std::string to_string(const FeaturePartition& p) {
  std::ostringstream out;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    if (b > 0) out << " | ";
    for (std::size_t k = 0; k < p.blocks[b].size(); ++k) {
      if (k > 0) out << " ";
      out << p.blocks[b][k];
    }
  }
  return out.str();
}

void save_partition(const FeaturePartition& p, std::ostream& out) {
  out << "d=" << p.num_features << "\n";
  for (const auto& block : p.blocks) {
    for (std::size_t k = 0; k < block.size(); ++k) {
      if (k > 0) out << " ";
      out << block[k];
    }
    out << "\n";
  }
}

FeaturePartition load_partition(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("d=", 0) != 0)
    throw std::runtime_error("load_partition: missing d=<n> header");
  int d = std::stoi(line.substr(2));
  std::vector<std::vector<int>> blocks;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<int> block;
    int idx;
    while (ls >> idx) block.push_back(idx);
    blocks.push_back(std::move(block));
  }
  return make_partition(d, std::move(blocks));
}

FeaturePartition expression_to_partition(const DmieExpression& e) {
  std::vector<std::vector<int>> blocks = e.terms;
  std::vector<char> used(static_cast<std::size_t>(e.num_features), 0);
  for (const auto& t : e.terms)
    for (int idx : t) used[static_cast<std::size_t>(idx)] = 1;
  for (int i = 0; i < e.num_features; ++i)
    if (!used[static_cast<std::size_t>(i)]) blocks.push_back({i});
  return make_partition(e.num_features, std::move(blocks));
}

FeaturePartition graph_to_partition(const FeatureGraph& g) {
  // Union-find over nodes.
  std::vector<int> parent(static_cast<std::size_t>(g.num_features));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (auto [i, j] : g.edges) {
    int ri = find(i), rj = find(j);
    if (ri != rj) parent[static_cast<std::size_t>(std::max(ri, rj))] = std::min(ri, rj);
  }
  std::map<int, std::vector<int>> comps;
  for (int i = 0; i < g.num_features; ++i) comps[find(i)].push_back(i);
  std::vector<std::vector<int>> blocks;
  blocks.reserve(comps.size());
  for (auto& [root, members] : comps) blocks.push_back(std::move(members));
  return make_partition(g.num_features, std::move(blocks));
}

DmieExpression partition_to_expression(const FeaturePartition& p) {
  return make_expression(p.num_features, p.blocks);
}

bool graphs_equivalent(const FeatureGraph& g1, const FeatureGraph& g2) {
  if (g1.num_features != g2.num_features)
    throw std::invalid_argument("graphs_equivalent: num_features mismatch");
  return graph_to_partition(g1) == graph_to_partition(g2);
}

FeatureGraph class_representative(const FeaturePartition& p) {
  std::vector<std::pair<int, int>> edges;
  for (const auto& block : p.blocks)
    for (std::size_t k = 1; k < block.size(); ++k) edges.emplace_back(block[0], block[k]);
  return make_graph(p.num_features, std::move(edges));
}

std::vector<FeaturePartition> enumerate_partitions(int n) {
  if (n < 0) throw std::invalid_argument("enumerate_partitions: negative n");
  std::vector<FeaturePartition> out;
  if (n == 0) {
    out.push_back(make_partition(0, {}));
    return out;
  }
  // Restricted growth strings: a[0]=0, a[i] <= max(a[0..i-1]) + 1.
  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  while (true) {
    int num_blocks = *std::max_element(assign.begin(), assign.end()) + 1;
    std::vector<std::vector<int>> blocks(static_cast<std::size_t>(num_blocks));
    for (int i = 0; i < n; ++i) blocks[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])].push_back(i);
    out.push_back(make_partition(n, std::move(blocks)));
    // advance
    int i = n - 1;
    for (; i > 0; --i) {
      int prefix_max = *std::max_element(assign.begin(), assign.begin() + i);
      if (assign[static_cast<std::size_t>(i)] <= prefix_max) break;
    }
    if (i == 0) break;
    ++assign[static_cast<std::size_t>(i)];
    std::fill(assign.begin() + i + 1, assign.end(), 0);
  }
  return out;
}

std::vector<FeatureGraph> enumerate_graphs(int n) {
  const long m = max_edges(n);
  if (m > 20)
    throw std::invalid_argument("enumerate_graphs: too many edges to enumerate (n too large)");
  std::vector<std::pair<int, int>> all;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) all.emplace_back(i, j);
  std::vector<FeatureGraph> out;
  out.reserve(1u << m);
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<std::pair<int, int>> edges;
    for (long b = 0; b < m; ++b)
      if (mask & (1u << b)) edges.push_back(all[static_cast<std::size_t>(b)]);
    out.push_back(make_graph(n, std::move(edges)));
  }
  return out;
}

ClassCensus census_graph_classes(int n) {
  ClassCensus census;
  std::map<std::string, std::pair<FeaturePartition, long>> by_partition;
  for (const auto& g : enumerate_graphs(n)) {
    ++census.graph_count;
    auto p = graph_to_partition(g);
    auto key = to_string(p);
    auto it = by_partition.find(key);
    if (it == by_partition.end())
      by_partition.emplace(key, std::make_pair(std::move(p), 1L));
    else
      ++it->second.second;
  }
  for (auto& [key, entry] : by_partition) census.classes.push_back(std::move(entry));
  return census;
}

}  // namespace figlab
