#pragma once
#include <iosfwd>
#include <string>
#include <vector>

#include "figlab/fgraph.hpp"

namespace figlab {

// A sum of products over pairwise-disjoint variable sets: each feature
// index appears in at most one term, and at most once there.
// Canonical form: indices ascending within a term, terms ordered by
// their minimum element.
struct DmieExpression {
  int num_features = 0;
  std::vector<std::vector<int>> terms;

  bool operator==(const DmieExpression&) const = default;
};

// Disjoint non-empty blocks covering [0, num_features).
// Canonical form mirrors DmieExpression.
struct FeaturePartition {
  int num_features = 0;
  std::vector<std::vector<int>> blocks;

  bool operator==(const FeaturePartition&) const = default;
};

DmieExpression make_expression(int num_features, std::vector<std::vector<int>> terms);
FeaturePartition make_partition(int num_features, std::vector<std::vector<int>> blocks);

// Surface syntax: '+'-separated products of '*'-separated "x<k>" tokens,
// e.g. "x0*x1*x2 + x3*x4 + x5". num_features < 0 infers max index + 1.
DmieExpression parse_expression(const std::string& text, int num_features = -1);
std::string to_string(const DmieExpression& e);
std::string to_string(const FeaturePartition& p);

// Line-oriented partition format: header "d=<n>", then one block per
// line as space-separated indices.
void save_partition(const FeaturePartition& p, std::ostream& out);
FeaturePartition load_partition(std::istream& in);

FeaturePartition expression_to_partition(const DmieExpression& e);
FeaturePartition graph_to_partition(const FeatureGraph& g);
DmieExpression partition_to_expression(const FeaturePartition& p);
bool graphs_equivalent(const FeatureGraph& g1, const FeatureGraph& g2);

// Canonical member of a partition's graph class: a star per block,
// centered on the block minimum. Edge count is d - |blocks|.
FeatureGraph class_representative(const FeaturePartition& p);

// Exhaustive enumeration helpers (desk scale, small n).
std::vector<FeaturePartition> enumerate_partitions(int n);
std::vector<FeatureGraph> enumerate_graphs(int n);

struct ClassCensus {
  long graph_count = 0;
  // (partition, number of graphs inducing it), canonical order.
  std::vector<std::pair<FeaturePartition, long>> classes;
};

// Groups all 2^C(n,2) graphs on n nodes by reachability partition.
ClassCensus census_graph_classes(int n);

}  // namespace figlab
