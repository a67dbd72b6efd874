#include "figlab/strata.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "figlab/rng.hpp"

namespace figlab {

FeatureGraph ground_truth_graph(const DmieExpression& e) {
  std::vector<std::pair<int, int>> edges;
  for (const auto& term : e.terms) {
    if (term.size() > 2)
      throw std::invalid_argument("ground_truth_graph: term of size " +
                                  std::to_string(term.size()) + " is not pairwise");
    if (term.size() == 2) edges.emplace_back(term[0], term[1]);
  }
  return make_graph(e.num_features, std::move(edges));
}

std::vector<std::pair<int, int>> interaction_pairs(const DmieExpression& e) {
  return ground_truth_graph(e).edges;
}

EdgeLabeling label_edges(const FeatureGraph& g, const DmieExpression& e) {
  const auto truth = ground_truth_graph(e);
  EdgeLabeling out{g, {}, {}};
  for (auto edge : g.edges) {
    if (truth.has_edge(edge.first, edge.second))
      out.interaction_edges.push_back(edge);
    else
      out.non_interaction_edges.push_back(edge);
  }
  return out;
}

GraphStrata compute_strata(const FeatureGraph& g, const DmieExpression& e) {
  const auto labeling = label_edges(g, e);
  GraphStrata s;
  s.total_edges = static_cast<int>(g.edges.size());
  s.interaction_edges = static_cast<int>(labeling.interaction_edges.size());
  s.non_interaction_edges = static_cast<int>(labeling.non_interaction_edges.size());
  for (auto [u, v] : interaction_pairs(e)) s.hops.push_back(shortest_hops(g, u, v));
  return s;
}

std::vector<FeatureGraph> sibling_set(const FeatureGraph& g, const DmieExpression& e) {
  const auto pairs = interaction_pairs(e);
  const int k = static_cast<int>(pairs.size());
  std::vector<std::pair<int, int>> base;
  for (auto edge : g.edges)
    if (std::find(pairs.begin(), pairs.end(), edge) == pairs.end()) base.push_back(edge);
  std::vector<FeatureGraph> out;
  out.reserve(1u << k);
  for (int mask = (1 << k) - 1; mask >= 0; --mask) {
    auto edges = base;
    for (int j = 0; j < k; ++j)
      if (mask & (1 << j)) edges.push_back(pairs[static_cast<std::size_t>(j)]);
    out.push_back(make_graph(g.num_features, std::move(edges)));
  }
  return out;
}

std::string member_code(const FeatureGraph& g, const DmieExpression& e) {
  std::string code;
  for (auto [u, v] : interaction_pairs(e)) code.push_back(g.has_edge(u, v) ? '1' : '0');
  return code;
}

std::vector<std::pair<FeatureGraph, FeatureGraph>> removal_lattice(
    const FeatureGraph& g, const DmieExpression& e) {
  const auto pairs = interaction_pairs(e);
  std::vector<std::pair<int, int>> present;
  for (auto p : pairs)
    if (g.has_edge(p.first, p.second)) present.push_back(p);
  const int k = static_cast<int>(present.size());
  std::vector<std::pair<FeatureGraph, FeatureGraph>> out;
  // Parents are g minus any subset of its interaction edges; children
  // remove one more.
  for (int mask = (1 << k) - 1; mask >= 1; --mask) {
    auto parent = g;
    for (int j = 0; j < k; ++j)
      if (!(mask & (1 << j)))
        parent = without_edge(parent, present[static_cast<std::size_t>(j)].first,
                              present[static_cast<std::size_t>(j)].second);
    for (int j = 0; j < k; ++j) {
      if (!(mask & (1 << j))) continue;
      auto child = without_edge(parent, present[static_cast<std::size_t>(j)].first,
                                present[static_cast<std::size_t>(j)].second);
      out.emplace_back(parent, std::move(child));
    }
  }
  return out;
}

std::string StrataCell::describe() const {
  std::ostringstream out;
  out << "cell(count=" << count;
  if (total_edges) out << ", total=" << *total_edges;
  if (interaction_edges) out << ", interaction=" << *interaction_edges;
  if (non_interaction_edges) out << ", non_interaction=" << *non_interaction_edges;
  if (hops) {
    out << ", hops=[";
    for (std::size_t i = 0; i < hops->size(); ++i) out << (i ? "," : "") << (*hops)[i];
    out << "]";
  }
  out << ")";
  return out.str();
}

namespace {

std::vector<std::pair<int, int>> pick_combination(
    const std::vector<std::pair<int, int>>& pool, int k, std::mt19937_64& rng) {
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) order[i] = i;
  // Partial Fisher-Yates: the first k entries are a uniform combination.
  for (int i = 0; i < k; ++i) {
    std::size_t j =
        static_cast<std::size_t>(i) +
        static_cast<std::size_t>(bounded_rand(rng, pool.size() - static_cast<std::size_t>(i)));
    std::swap(order[static_cast<std::size_t>(i)], order[j]);
  }
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back(pool[order[static_cast<std::size_t>(i)]]);
  return out;
}

std::vector<std::pair<int, int>> pick_coinflip(const std::vector<std::pair<int, int>>& pool,
                                               std::mt19937_64& rng) {
  std::vector<std::pair<int, int>> out;
  for (auto edge : pool)
    if (bounded_rand(rng, 2) == 1) out.push_back(edge);
  return out;
}

double log_choose(int n, int k) {
  double s = 0;
  for (int i = 0; i < k; ++i) s += std::log(static_cast<double>(n - i)) - std::log(static_cast<double>(i + 1));
  return s;
}

// Upper bound on distinct graphs in a cell, ignoring hop quotas.
// Returns a large value when a side is unconstrained.
double cell_log_size(const StrataCell& cell, int num_pairs, int pool_size) {
  double log_size = 0;
  if (cell.interaction_edges)
    log_size += log_choose(num_pairs, *cell.interaction_edges);
  else
    log_size += num_pairs * std::log(2.0);
  if (cell.non_interaction_edges)
    log_size += log_choose(pool_size, *cell.non_interaction_edges);
  else if (cell.total_edges && cell.interaction_edges)
    log_size += log_choose(pool_size, *cell.total_edges - *cell.interaction_edges);
  else if (cell.total_edges && !cell.interaction_edges)
    log_size = log_choose(num_pairs + pool_size, *cell.total_edges);
  else
    log_size += pool_size * std::log(2.0);
  return log_size;
}

}  // namespace

std::vector<SampledGraph> sample_stratified(const DmieExpression& e, const StrataPlan& plan,
                                            std::mt19937_64& rng) {
  const int d = e.num_features;
  const auto pairs = interaction_pairs(e);
  const int k = static_cast<int>(pairs.size());
  std::vector<std::pair<int, int>> pool;  // non-interaction candidate edges
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (std::find(pairs.begin(), pairs.end(), std::make_pair(i, j)) == pairs.end())
        pool.emplace_back(i, j);

  std::vector<std::string> infeasible;
  std::vector<SampledGraph> out;
  std::set<std::string> seen_graphs;
  std::set<std::string> seen_groups;

  auto strata_match = [&](const GraphStrata& s, const StrataCell& cell) {
    if (cell.total_edges && s.total_edges != *cell.total_edges) return false;
    if (cell.interaction_edges && s.interaction_edges != *cell.interaction_edges) return false;
    if (cell.non_interaction_edges && s.non_interaction_edges != *cell.non_interaction_edges)
      return false;
    if (cell.hops && s.hops != *cell.hops) return false;
    return true;
  };

  auto push_graph = [&](FeatureGraph g, bool is_closure) {
    auto key = graph_key(g);
    if (seen_graphs.count(key)) return;
    seen_graphs.insert(key);
    SampledGraph sg;
    sg.strata = compute_strata(g, e);
    sg.member = member_code(g, e);
    std::vector<std::pair<int, int>> non_inter;
    for (auto edge : g.edges)
      if (std::find(pairs.begin(), pairs.end(), edge) == pairs.end()) non_inter.push_back(edge);
    sg.group_key = graph_key(make_graph(d, non_inter));
    sg.is_closure = is_closure;
    sg.graph = std::move(g);
    out.push_back(std::move(sg));
  };

  for (const auto& cell : plan.cells) {
    // Static feasibility checks.
    if (cell.interaction_edges && (*cell.interaction_edges < 0 || *cell.interaction_edges > k)) {
      infeasible.push_back(cell.describe() + ": only " + std::to_string(k) +
                           " interaction edges exist");
      continue;
    }
    if (cell.non_interaction_edges &&
        (*cell.non_interaction_edges < 0 ||
         *cell.non_interaction_edges > static_cast<int>(pool.size()))) {
      infeasible.push_back(cell.describe() + ": only " + std::to_string(pool.size()) +
                           " non-interaction edges exist");
      continue;
    }
    if (cell.total_edges && cell.interaction_edges && cell.non_interaction_edges &&
        *cell.total_edges != *cell.interaction_edges + *cell.non_interaction_edges) {
      infeasible.push_back(cell.describe() + ": total != interaction + non_interaction");
      continue;
    }
    if (cell.total_edges &&
        (*cell.total_edges < 0 || *cell.total_edges > static_cast<int>(max_edges(d)))) {
      infeasible.push_back(cell.describe() + ": total out of range");
      continue;
    }
    if (cell.hops && static_cast<int>(cell.hops->size()) != k) {
      infeasible.push_back(cell.describe() + ": hop profile length != " + std::to_string(k));
      continue;
    }
    if (!cell.hops && cell_log_size(cell, k, static_cast<int>(pool.size())) <
                          std::log(static_cast<double>(cell.count)) - 1e-9) {
      infeasible.push_back(cell.describe() + ": fewer distinct graphs than requested");
      continue;
    }

    // Derive fixed counts where the cell pins them.
    std::optional<int> want_inter = cell.interaction_edges;
    std::optional<int> want_non = cell.non_interaction_edges;
    if (cell.total_edges && want_inter && !want_non) want_non = *cell.total_edges - *want_inter;
    if (cell.total_edges && want_non && !want_inter) want_inter = *cell.total_edges - *want_non;
    if (want_inter && (*want_inter < 0 || *want_inter > k)) {
      infeasible.push_back(cell.describe() + ": derived interaction count out of range");
      continue;
    }
    if (want_non && (*want_non < 0 || *want_non > static_cast<int>(pool.size()))) {
      infeasible.push_back(cell.describe() + ": derived non-interaction count out of range");
      continue;
    }

    std::set<std::string> cell_keys;
    int attempts = 0;
    while (static_cast<int>(cell_keys.size()) < cell.count) {
      if (++attempts > plan.max_attempts) {
        infeasible.push_back(cell.describe() + ": attempt cap " +
                             std::to_string(plan.max_attempts) + " exhausted");
        break;
      }
      std::vector<std::pair<int, int>> edges;
      if (cell.total_edges && !want_inter && !want_non) {
        // Uniform over all graphs with the given edge count.
        std::vector<std::pair<int, int>> all = pool;
        all.insert(all.end(), pairs.begin(), pairs.end());
        edges = pick_combination(all, *cell.total_edges, rng);
      } else {
        auto inter = want_inter ? pick_combination(pairs, *want_inter, rng)
                                : pick_coinflip(pairs, rng);
        auto non = want_non ? pick_combination(pool, *want_non, rng) : pick_coinflip(pool, rng);
        edges = std::move(inter);
        edges.insert(edges.end(), non.begin(), non.end());
      }
      auto g = make_graph(d, std::move(edges));
      auto s = compute_strata(g, e);
      if (!strata_match(s, cell)) continue;  // hop (or derived) quota rejection
      auto key = graph_key(g);
      if (cell_keys.count(key)) continue;
      cell_keys.insert(key);
      push_graph(std::move(g), false);
    }
  }

  if (!infeasible.empty()) {
    std::string msg = "sample_stratified: infeasible strata:";
    for (const auto& m : infeasible) msg += "\n  " + m;
    throw InfeasibleStratum(msg);
  }

  if (plan.sibling_closure) {
    const auto direct = out;  // closure may grow `out`
    for (const auto& sg : direct) {
      if (seen_groups.count(sg.group_key)) continue;
      seen_groups.insert(sg.group_key);
      for (auto& sib : sibling_set(sg.graph, e)) push_graph(std::move(sib), true);
    }
  }
  return out;
}

}  // namespace figlab
