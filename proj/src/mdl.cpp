#include "figlab/mdl.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "figlab/dmie.hpp"
#include "figlab/rng.hpp"
#include "figlab/strata.hpp"

namespace figlab {

using nlohmann::json;

RealCode default_code() {
  return RealCode{"log2(1+|x|)", [](double x) { return std::log2(1.0 + std::abs(x)); }};
}

double PairwiseModel::predict(std::span<const double> row) const {
  double y = 0;
  for (std::size_t k = 0; k < isolated.size(); ++k)
    y += unary_coeffs[k] * row[static_cast<std::size_t>(isolated[k])];
  for (std::size_t k = 0; k < graph.edges.size(); ++k)
    y += pair_coeffs[k] * row[static_cast<std::size_t>(graph.edges[k].first)] *
         row[static_cast<std::size_t>(graph.edges[k].second)];
  return y;
}

PairwiseModel fit_pairwise(const FeatureGraph& g, std::span<const double> features, long rows,
                           int d, std::span<const double> targets) {
  if (g.num_features != d) throw std::invalid_argument("fit_pairwise: dimension mismatch");
  if (d < 1) throw std::invalid_argument("fit_pairwise: empty design (d = 0)");
  std::vector<char> covered(static_cast<std::size_t>(d), 0);
  for (auto [i, j] : g.edges) {
    covered[static_cast<std::size_t>(i)] = 1;
    covered[static_cast<std::size_t>(j)] = 1;
  }
  PairwiseModel m;
  m.graph = g;
  for (int i = 0; i < d; ++i)
    if (!covered[static_cast<std::size_t>(i)]) m.isolated.push_back(i);
  const long cols = static_cast<long>(m.isolated.size() + g.edges.size());
  if (rows < cols)
    throw std::invalid_argument("fit_pairwise: fewer rows than design columns");

  Eigen::MatrixXd design(rows, cols);
  for (long r = 0; r < rows; ++r) {
    const double* row = features.data() + static_cast<std::size_t>(r) * d;
    long c = 0;
    for (int i : m.isolated) design(r, c++) = row[i];
    for (auto [i, j] : g.edges) design(r, c++) = row[i] * row[j];
  }
  Eigen::Map<const Eigen::VectorXd> y(targets.data(), rows);

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  Eigen::VectorXd coef = cod.solve(y);

  m.unary_coeffs.assign(coef.data(), coef.data() + m.isolated.size());
  m.pair_coeffs.assign(coef.data() + m.isolated.size(), coef.data() + cols);

  if (cod.rank() == cols && rows > cols) {
    const double ssr = (design * coef - y).squaredNorm();
    const double sigma2 = ssr / static_cast<double>(rows - cols);
    Eigen::MatrixXd xtx_inv = (design.transpose() * design).inverse();
    for (long c = 0; c < cols; ++c) {
      const double se = std::sqrt(std::max(0.0, sigma2 * xtx_inv(c, c)));
      if (c < static_cast<long>(m.isolated.size()))
        m.unary_se.push_back(se);
      else
        m.pair_se.push_back(se);
    }
  }
  return m;
}

double model_bits(const PairwiseModel& m, const RealCode& code) {
  double bits = code(static_cast<double>(m.graph.edges.size()));
  for (double c : m.unary_coeffs) bits += code(c);
  for (double c : m.pair_coeffs) bits += code(c);
  return bits;
}

DataBits data_bits(const PairwiseModel& m, std::span<const double> features, long rows, int d,
                   std::span<const double> targets, const RealCode& code) {
  DataBits out;
  for (long r = 0; r < rows; ++r) {
    const double* row = features.data() + static_cast<std::size_t>(r) * d;
    for (int j = 0; j < d; ++j) out.feature_bits += code(row[j]);
    out.residual_bits += code(targets[static_cast<std::size_t>(r)] -
                              m.predict({row, static_cast<std::size_t>(d)}));
  }
  return out;
}

std::string MdlReport::to_json_string() const {
  json j{{"graph", graph},
         {"model_bits", model_bits},
         {"feature_bits", feature_bits},
         {"residual_bits", residual_bits},
         {"data_bits", data_bits()},
         {"total_bits", total()},
         {"rows", rows}};
  return j.dump(2);
}

MdlReport total_bits(const FeatureGraph& g, const SyntheticDataset& ds, const RealCode& code) {
  const long rows = ds.train_n;
  std::span<const double> features{ds.features.data(),
                                   static_cast<std::size_t>(rows) * static_cast<std::size_t>(ds.d)};
  std::span<const double> targets{ds.targets.data(), static_cast<std::size_t>(rows)};
  auto m = fit_pairwise(g, features, rows, ds.d, targets);
  auto db = data_bits(m, features, rows, ds.d, targets, code);
  MdlReport report;
  report.graph = graph_key(g);
  report.model_bits = model_bits(m, code);
  report.feature_bits = db.feature_bits;
  report.residual_bits = db.residual_bits;
  report.rows = rows;
  return report;
}

double VerifyReport::pass_rate(const std::string& family) const {
  auto it = families.find(family);
  if (it == families.end() || it->second.second == 0) return 0;
  return static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
}

std::string VerifyReport::to_csv() const {
  std::ostringstream out;
  out << "trial,inequality,pass,lhs_bits,rhs_bits\n";
  char buf[80];
  for (const auto& c : checks) {
    std::snprintf(buf, sizeof buf, "%d,%s,%d,%.10g,%.10g", c.trial, c.inequality.c_str(),
                  c.pass ? 1 : 0, c.lhs, c.rhs);
    out << buf << "\n";
  }
  return out.str();
}

FeatureGraph random_degree_one_graph(int d, int min_isolated, std::mt19937_64& rng) {
  const int max_pairs = (d - min_isolated) / 2;
  if (max_pairs < 1)
    throw std::invalid_argument("random_degree_one_graph: no room for an edge");
  const int m = 1 + static_cast<int>(bounded_rand(rng, static_cast<std::uint64_t>(max_pairs)));
  std::vector<int> nodes(static_cast<std::size_t>(d));
  std::iota(nodes.begin(), nodes.end(), 0);
  shuffle_values(nodes, rng);
  std::vector<std::pair<int, int>> edges;
  for (int k = 0; k < m; ++k)
    edges.emplace_back(nodes[static_cast<std::size_t>(2 * k)],
                       nodes[static_cast<std::size_t>(2 * k + 1)]);
  return make_graph(d, std::move(edges));
}

namespace {

DmieExpression expression_of_matching(const FeatureGraph& g) {
  std::vector<std::vector<int>> terms;
  std::vector<char> covered(static_cast<std::size_t>(g.num_features), 0);
  for (auto [i, j] : g.edges) {
    terms.push_back({i, j});
    covered[static_cast<std::size_t>(i)] = 1;
    covered[static_cast<std::size_t>(j)] = 1;
  }
  for (int i = 0; i < g.num_features; ++i)
    if (!covered[static_cast<std::size_t>(i)]) terms.push_back({i});
  return make_expression(g.num_features, std::move(terms));
}

struct TrialScorer {
  const SyntheticDataset& ds;
  const RealCode& code;

  MdlReport score(const FeatureGraph& g) const { return total_bits(g, ds, code); }
};

void tally(VerifyReport& report, const std::string& family, InequalityCheck check) {
  auto& [passed, total] = report.families[family];
  ++total;
  if (check.pass) ++passed;
  report.checks.push_back(std::move(check));
}

}  // namespace

VerifyReport verify_inequalities(const VerifyOptions& opts, const RealCode& code) {
  if (opts.min_d < 4) throw std::invalid_argument("verify_inequalities: min_d must be >= 4");
  if (opts.max_d < opts.min_d)
    throw std::invalid_argument("verify_inequalities: max_d < min_d");
  VerifyReport report;
  std::mt19937_64 rng(opts.seed);
  const double tol = opts.tolerance_bits;

  for (int trial = 0; trial < opts.trials; ++trial) {
    const int d = opts.min_d +
                  static_cast<int>(bounded_rand(rng, static_cast<std::uint64_t>(
                                                         opts.max_d - opts.min_d + 1)));
    // Keep at least two isolated nodes so edge additions stay within the
    // degree-one family the base form covers.
    FeatureGraph truth_graph = random_degree_one_graph(d, 2, rng);
    SyntheticSpec spec;
    spec.n = opts.n;
    spec.noise_scale = opts.noise_scale;
    spec.truth = expression_of_matching(truth_graph);
    spec.feature_seed_offset = opts.seed + 1009ULL * static_cast<std::uint64_t>(trial + 1);
    spec.noise_seed = spec.feature_seed_offset + 499ULL;
    const SyntheticDataset ds = generate(spec);
    TrialScorer scorer{ds, code};

    const MdlReport base = scorer.score(truth_graph);

    std::vector<int> isolated;
    {
      std::vector<char> covered(static_cast<std::size_t>(d), 0);
      for (auto [i, j] : truth_graph.edges) {
        covered[static_cast<std::size_t>(i)] = 1;
        covered[static_cast<std::size_t>(j)] = 1;
      }
      for (int i = 0; i < d; ++i)
        if (!covered[static_cast<std::size_t>(i)]) isolated.push_back(i);
    }

    // Deleting a true interaction edge.
    for (auto [a, b] : truth_graph.edges) {
      const MdlReport dropped = scorer.score(without_edge(truth_graph, a, b));
      tally(report, "residual_ordering",
            {trial, "residual_drop_edge", dropped.residual_bits >= base.residual_bits - tol,
             dropped.residual_bits, base.residual_bits});
      tally(report, "total_ordering",
            {trial, "total_drop_edge", dropped.total() >= base.total() - tol, dropped.total(),
             base.total()});
    }

    // Adding an edge between isolated nodes (stays degree <= 1).
    std::vector<std::pair<int, int>> additions;
    for (std::size_t i = 0; i < isolated.size(); ++i)
      for (std::size_t j = i + 1; j < isolated.size(); ++j)
        additions.emplace_back(isolated[i], isolated[j]);
    shuffle_values(additions, rng);
    if (static_cast<int>(additions.size()) > opts.added_pairs_per_trial)
      additions.resize(static_cast<std::size_t>(opts.added_pairs_per_trial));
    for (auto [a, b] : additions) {
      const MdlReport grown = scorer.score(with_edge(truth_graph, a, b));
      tally(report, "residual_ordering",
            {trial, "residual_add_edge", grown.residual_bits >= base.residual_bits - tol,
             grown.residual_bits, base.residual_bits});
      tally(report, "total_ordering",
            {trial, "total_add_edge", grown.total() >= base.total() - tol, grown.total(),
             base.total()});
    }

    const MdlReport complete = scorer.score(complete_graph(d));
    tally(report, "vs_complete",
          {trial, "total_vs_complete", complete.total() >= base.total() - tol, complete.total(),
           base.total()});
    const MdlReport null = scorer.score(null_graph(d));
    tally(report, "vs_null",
          {trial, "total_vs_null", null.total() >= base.total() - tol, null.total(),
           base.total()});

    // Random supergraphs containing every interaction edge.
    std::vector<std::pair<int, int>> extras;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        if (!truth_graph.has_edge(i, j)) extras.emplace_back(i, j);
    for (int s = 0; s < opts.supergraphs_per_trial; ++s) {
      const double density = uniform_unit(rng);
      auto edges = truth_graph.edges;
      for (auto e : extras)
        if (uniform_unit(rng) < density) edges.push_back(e);
      const FeatureGraph super = make_graph(d, std::move(edges));
      const MdlReport sr = scorer.score(super);
      tally(report, "supergraph",
            {trial, "supergraph_vs_complete", complete.total() >= sr.total() - tol,
             complete.total(), sr.total()});
      tally(report, "supergraph",
            {trial, "supergraph_vs_null", null.total() >= sr.total() - tol, null.total(),
             sr.total()});
    }
  }
  return report;
}

namespace {

void enumerate_matchings_rec(int d, int first_free, std::vector<char>& used,
                             std::vector<std::pair<int, int>>& current,
                             std::vector<FeatureGraph>& out) {
  int i = first_free;
  while (i < d && used[static_cast<std::size_t>(i)]) ++i;
  if (i >= d) {
    out.push_back(make_graph(d, current));
    return;
  }
  used[static_cast<std::size_t>(i)] = 1;
  // i stays isolated
  enumerate_matchings_rec(d, i + 1, used, current, out);
  // i pairs with a later free node
  for (int j = i + 1; j < d; ++j) {
    if (used[static_cast<std::size_t>(j)]) continue;
    used[static_cast<std::size_t>(j)] = 1;
    current.emplace_back(i, j);
    enumerate_matchings_rec(d, i + 1, used, current, out);
    current.pop_back();
    used[static_cast<std::size_t>(j)] = 0;
  }
  used[static_cast<std::size_t>(i)] = 0;
}

}  // namespace

SelectionResult exhaustive_select(const SyntheticDataset& ds, const RealCode& code, int max_d) {
  if (ds.d > max_d)
    throw std::invalid_argument("exhaustive_select: d = " + std::to_string(ds.d) +
                                " exceeds cap " + std::to_string(max_d));
  std::set<std::string> seen;
  std::vector<FeatureGraph> candidates;
  for (const auto& p : enumerate_partitions(ds.d)) {
    auto g = class_representative(p);
    if (seen.insert(graph_key(g)).second) candidates.push_back(std::move(g));
  }
  {
    std::vector<char> used(static_cast<std::size_t>(ds.d), 0);
    std::vector<std::pair<int, int>> current;
    std::vector<FeatureGraph> matchings;
    enumerate_matchings_rec(ds.d, 0, used, current, matchings);
    for (auto& g : matchings)
      if (seen.insert(graph_key(g)).second) candidates.push_back(std::move(g));
  }

  SelectionResult result;
  result.candidates = static_cast<long>(candidates.size());
  bool first = true;
  for (const auto& g : candidates) {
    auto report = total_bits(g, ds, code);
    const bool better =
        first || report.total() < result.report.total() ||
        (report.total() == result.report.total() && graph_key(g) < result.report.graph);
    if (better) {
      result.best = g;
      result.report = report;
      first = false;
    }
  }
  return result;
}

}  // namespace figlab
