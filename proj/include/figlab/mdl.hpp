#pragma once
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "figlab/fgraph.hpp"
#include "figlab/synth.hpp"

namespace figlab {

// Code-length function for reals, in bits. The default satisfies
// (1) subadditivity, (2) monotonicity in magnitude and (3) the bounded
// difference |x-y| <= 1 => |L(x)-L(y)| <= 1.
struct RealCode {
  std::string name;
  std::function<double(double)> bits;

  double operator()(double x) const { return bits(x); }
};

RealCode default_code();  // log2(1 + |x|)

// Graph-induced pairwise function: one linear term per isolated node,
// one bilinear term per edge. Degree-one graphs match the base form;
// higher degrees simply contribute one product per edge.
struct PairwiseModel {
  FeatureGraph graph;
  std::vector<int> isolated;           // ascending
  std::vector<double> unary_coeffs;    // aligned with isolated
  std::vector<double> pair_coeffs;     // aligned with graph.edges
  // Standard errors when the design is full rank, else empty.
  std::vector<double> unary_se;
  std::vector<double> pair_se;

  double predict(std::span<const double> row) const;
};

// Ordinary least squares over the induced design (no intercept);
// minimum-norm solution on rank deficiency.
PairwiseModel fit_pairwise(const FeatureGraph& g, std::span<const double> features, long rows,
                           int d, std::span<const double> targets);

double model_bits(const PairwiseModel& m, const RealCode& code);

struct DataBits {
  double feature_bits = 0;
  double residual_bits = 0;
  double total() const { return feature_bits + residual_bits; }
};

DataBits data_bits(const PairwiseModel& m, std::span<const double> features, long rows, int d,
                   std::span<const double> targets, const RealCode& code);

struct MdlReport {
  std::string graph;  // graph key
  double model_bits = 0;
  double feature_bits = 0;
  double residual_bits = 0;
  long rows = 0;

  double data_bits() const { return feature_bits + residual_bits; }
  double total() const { return model_bits + feature_bits + residual_bits; }
  std::string to_json_string() const;
};

// Fits on the train split and scores the two-part description length
// over the same rows.
MdlReport total_bits(const FeatureGraph& g, const SyntheticDataset& ds, const RealCode& code);

struct InequalityCheck {
  int trial = 0;
  std::string inequality;  // e.g. "residual_drop_edge", "total_vs_complete"
  bool pass = false;
  double lhs = 0;  // the side required to be >= rhs
  double rhs = 0;
};

struct VerifyOptions {
  int trials = 50;
  int min_d = 4;
  int max_d = 8;
  long n = 2000;
  double noise_scale = 0.1;
  int supergraphs_per_trial = 5;
  int added_pairs_per_trial = 3;
  std::uint64_t seed = 2024;
  // Slack for comparing description lengths of near-identical fits.
  double tolerance_bits = 1e-6;
};

struct VerifyReport {
  std::vector<InequalityCheck> checks;
  // family -> (passed, total): families are residual_ordering,
  // total_ordering, vs_complete, vs_null, supergraph.
  std::map<std::string, std::pair<long, long>> families;

  double pass_rate(const std::string& family) const;
  std::string to_csv() const;
};

// Per trial: random degree-<=1 ground truth (at least two isolated
// nodes), synthetic dataset, then the residual-bit orderings under
// interaction-edge deletion / non-interaction-edge addition, the total
// orderings, the complete/null comparisons, and both comparisons for a
// family of random supergraphs containing every interaction edge.
VerifyReport verify_inequalities(const VerifyOptions& opts, const RealCode& code);

struct SelectionResult {
  FeatureGraph best;
  MdlReport report;
  long candidates = 0;
};

// Enumerates one representative per reachability class plus every
// degree-<=1 graph and returns the description-length minimizer.
SelectionResult exhaustive_select(const SyntheticDataset& ds, const RealCode& code,
                                  int max_d = 5);

// Uniform random matching with at least min_isolated uncovered nodes.
FeatureGraph random_degree_one_graph(int d, int min_isolated, std::mt19937_64& rng);

}  // namespace figlab
