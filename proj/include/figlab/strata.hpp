#pragma once
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "figlab/dmie.hpp"
#include "figlab/fgraph.hpp"

namespace figlab {

// Thrown when a strata quota cannot be satisfied (impossible combination
// or attempt cap exhausted).
struct InfeasibleStratum : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EdgeLabeling {
  FeatureGraph graph;
  std::vector<std::pair<int, int>> interaction_edges;
  std::vector<std::pair<int, int>> non_interaction_edges;
};

struct GraphStrata {
  int total_edges = 0;
  int interaction_edges = 0;
  int non_interaction_edges = 0;
  std::vector<int> hops;  // per ground-truth pair, kUnreachableHops sentinel

  bool operator==(const GraphStrata&) const = default;
};

// Graph with one edge per size-2 term of a pairwise expression.
// Throws if any term has three or more factors.
FeatureGraph ground_truth_graph(const DmieExpression& e);

// The expression's size-2 terms as normalized edges, ascending.
std::vector<std::pair<int, int>> interaction_pairs(const DmieExpression& e);

EdgeLabeling label_edges(const FeatureGraph& g, const DmieExpression& e);
GraphStrata compute_strata(const FeatureGraph& g, const DmieExpression& e);

// All 2^k graphs obtained by toggling each interaction pair's presence,
// non-interaction edges fixed. Member m has pair j present iff bit j of
// m is set; ordered by descending mask so the full graph comes first.
std::vector<FeatureGraph> sibling_set(const FeatureGraph& g, const DmieExpression& e);

// Presence code of the interaction pairs in g, e.g. "11", "10".
// Character j is '1' iff pair j is an edge of g.
std::string member_code(const FeatureGraph& g, const DmieExpression& e);

// All (parent, child) pairs where child = parent minus one interaction
// edge, over the lattice spanned by removing interaction edges from g.
std::vector<std::pair<FeatureGraph, FeatureGraph>> removal_lattice(
    const FeatureGraph& g, const DmieExpression& e);

struct StrataCell {
  int count = 1;
  std::optional<int> total_edges;
  std::optional<int> interaction_edges;
  std::optional<int> non_interaction_edges;
  std::optional<std::vector<int>> hops;

  std::string describe() const;
};

struct StrataPlan {
  std::vector<StrataCell> cells;
  bool sibling_closure = true;
  int max_attempts = 200000;
};

struct SampledGraph {
  FeatureGraph graph;
  GraphStrata strata;
  // Sibling groups are keyed by the shared non-interaction edge set.
  std::string group_key;
  std::string member;
  bool is_closure = false;  // added by sibling closure, not drawn directly
};

// Uniform draws within each stratum cell (rejection for hop quotas),
// deduplicated by graph key, plus the sibling closure of every draw.
std::vector<SampledGraph> sample_stratified(const DmieExpression& e,
                                            const StrataPlan& plan,
                                            std::mt19937_64& rng);

}  // namespace figlab
