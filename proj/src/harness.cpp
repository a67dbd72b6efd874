#include "figlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "figlab/mdl.hpp"
#include "figlab/workspace.hpp"

namespace figlab {

using nlohmann::json;

namespace {

json strata_cell_to_json(const StrataCell& c) {
  json j{{"count", c.count}};
  if (c.total_edges) j["total_edges"] = *c.total_edges;
  if (c.interaction_edges) j["interaction_edges"] = *c.interaction_edges;
  if (c.non_interaction_edges) j["non_interaction_edges"] = *c.non_interaction_edges;
  if (c.hops) j["hops"] = *c.hops;
  return j;
}

StrataCell strata_cell_from_json(const json& j) {
  StrataCell c;
  c.count = j.value("count", 1);
  if (j.contains("total_edges")) c.total_edges = j.at("total_edges").get<int>();
  if (j.contains("interaction_edges")) c.interaction_edges = j.at("interaction_edges").get<int>();
  if (j.contains("non_interaction_edges"))
    c.non_interaction_edges = j.at("non_interaction_edges").get<int>();
  if (j.contains("hops")) c.hops = j.at("hops").get<std::vector<int>>();
  return c;
}

json dataset_to_json(const SyntheticSpec& s) {
  json j{{"p", s.p},
         {"q", s.q},
         {"n", s.n},
         {"noise_scale", s.noise_scale},
         {"feature_seed_offset", s.feature_seed_offset},
         {"noise_seed", s.noise_seed},
         {"train_fraction", s.train_fraction}};
  if (s.truth) j["truth"] = to_string(*s.truth);
  return j;
}

SyntheticSpec dataset_from_json(const json& j) {
  SyntheticSpec s;
  s.p = j.value("p", 2);
  s.q = j.value("q", 2);
  s.n = j.value("n", 10000L);
  s.noise_scale = j.value("noise_scale", 0.1);
  s.feature_seed_offset = j.value("feature_seed_offset", std::uint64_t{0});
  s.noise_seed = j.value("noise_seed", std::uint64_t{0});
  s.train_fraction = j.value("train_fraction", 0.7);
  if (j.contains("truth")) s.truth = parse_expression(j.at("truth").get<std::string>());
  return s;
}

std::string kind_name(GraphSourceKind k) {
  switch (k) {
    case GraphSourceKind::Stratified: return "stratified";
    case GraphSourceKind::Lattice: return "lattice";
    case GraphSourceKind::Named: return "named";
    case GraphSourceKind::Files: return "files";
  }
  return "named";
}

GraphSourceKind kind_from_name(const std::string& name) {
  if (name == "stratified") return GraphSourceKind::Stratified;
  if (name == "lattice") return GraphSourceKind::Lattice;
  if (name == "named") return GraphSourceKind::Named;
  if (name == "files") return GraphSourceKind::Files;
  throw std::invalid_argument("unknown graph source kind: " + name);
}

}  // namespace

std::string ExperimentPlan::to_json_string() const {
  json cells = json::array();
  for (const auto& c : graphs.strata.cells) cells.push_back(strata_cell_to_json(c));
  json j{{"name", name},
         {"dataset", dataset_to_json(dataset)},
         {"graphs",
          {{"kind", kind_name(graphs.kind)},
           {"cells", cells},
           {"sibling_closure", graphs.strata.sibling_closure},
           {"max_attempts", graphs.strata.max_attempts},
           {"sample_seed", graphs.sample_seed},
           {"named", graphs.named},
           {"files", graphs.files}}},
         {"model",
          {{"layers", model.layers},
           {"hidden_dim", model.hidden_dim},
           {"embedding_dim", model.embedding_dim},
           {"lr", model.lr},
           {"batch_size", model.batch_size},
           {"max_epochs", model.max_epochs},
           {"patience", model.patience}}},
         {"seeds", seeds},
         {"workers", workers},
         {"arc_cap", arc_cap},
         {"scaling_p_list", scaling_p_list}};
  return j.dump(2);
}

ExperimentPlan ExperimentPlan::from_json_string(const std::string& text) {
  json j = json::parse(text);
  ExperimentPlan plan;
  plan.name = j.value("name", "plan");
  plan.dataset = dataset_from_json(j.at("dataset"));
  if (j.contains("graphs")) {
    const auto& g = j.at("graphs");
    plan.graphs.kind = kind_from_name(g.value("kind", "named"));
    if (g.contains("cells"))
      for (const auto& c : g.at("cells")) plan.graphs.strata.cells.push_back(strata_cell_from_json(c));
    plan.graphs.strata.sibling_closure = g.value("sibling_closure", true);
    plan.graphs.strata.max_attempts = g.value("max_attempts", 200000);
    plan.graphs.sample_seed = g.value("sample_seed", std::uint64_t{7});
    if (g.contains("named")) plan.graphs.named = g.at("named").get<std::vector<std::string>>();
    if (g.contains("files")) plan.graphs.files = g.at("files").get<std::vector<std::string>>();
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    plan.model.layers = m.value("layers", std::vector<int>{1});
    plan.model.hidden_dim = m.value("hidden_dim", 0);
    plan.model.embedding_dim = m.value("embedding_dim", 16);
    plan.model.lr = m.value("lr", 1e-2);
    plan.model.batch_size = m.value("batch_size", 256);
    plan.model.max_epochs = m.value("max_epochs", 200);
    plan.model.patience = m.value("patience", 30);
  }
  plan.seeds = j.value("seeds", std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  plan.workers = j.value("workers", 0);
  plan.arc_cap = j.value("arc_cap", 20000L);
  plan.scaling_p_list = j.value("scaling_p_list", std::vector<int>{});
  return plan;
}

namespace {

json record_to_json(const RunRecord& r) {
  return json{{"key", r.key},
              {"dataset_key", r.dataset_key},
              {"graph_key", r.graph_key},
              {"strata",
               {{"total_edges", r.strata.total_edges},
                {"interaction_edges", r.strata.interaction_edges},
                {"non_interaction_edges", r.strata.non_interaction_edges},
                {"hops", r.strata.hops}}},
              {"group_key", r.group_key},
              {"member", r.member},
              {"graph_kind", r.graph_kind},
              {"config",
               {{"num_layers", r.config.num_layers},
                {"embedding_dim", r.config.embedding_dim},
                {"hidden_dim", r.config.hidden_dim},
                {"lr", r.config.lr},
                {"batch_size", r.config.batch_size},
                {"max_epochs", r.config.max_epochs},
                {"patience", r.config.patience},
                {"plateau_patience", r.config.plateau_patience},
                {"plateau_factor", r.config.plateau_factor},
                {"min_improvement", r.config.min_improvement},
                {"min_lr", r.config.min_lr}}},
              {"seed", r.seed},
              {"scaling_p", r.scaling_p},
              {"status", r.status},
              {"error", r.error},
              {"test_mae", r.test_mae},
              {"test_mse", r.test_mse},
              {"final_train_loss", r.final_train_loss},
              {"epochs_run", r.epochs_run},
              {"wall_ms", r.wall_ms}};
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.key = j.at("key").get<std::string>();
  r.dataset_key = j.value("dataset_key", "");
  r.graph_key = j.value("graph_key", "");
  if (j.contains("strata")) {
    const auto& s = j.at("strata");
    r.strata.total_edges = s.value("total_edges", 0);
    r.strata.interaction_edges = s.value("interaction_edges", 0);
    r.strata.non_interaction_edges = s.value("non_interaction_edges", 0);
    r.strata.hops = s.value("hops", std::vector<int>{});
  }
  r.group_key = j.value("group_key", "");
  r.member = j.value("member", "");
  r.graph_kind = j.value("graph_kind", "sampled");
  if (j.contains("config")) {
    const auto& c = j.at("config");
    r.config.num_layers = c.value("num_layers", 1);
    r.config.embedding_dim = c.value("embedding_dim", 16);
    r.config.hidden_dim = c.value("hidden_dim", 0);
    r.config.lr = c.value("lr", 1e-2);
    r.config.batch_size = c.value("batch_size", 256);
    r.config.max_epochs = c.value("max_epochs", 200);
    r.config.patience = c.value("patience", 30);
    r.config.plateau_patience = c.value("plateau_patience", 10);
    r.config.plateau_factor = c.value("plateau_factor", 0.5);
    r.config.min_improvement = c.value("min_improvement", 1e-4);
    r.config.min_lr = c.value("min_lr", 1e-5);
  }
  r.seed = j.value("seed", std::uint64_t{0});
  r.config.seed = r.seed;
  r.scaling_p = j.value("scaling_p", -1);
  r.status = j.value("status", "ok");
  r.error = j.value("error", "");
  r.test_mae = j.value("test_mae", 0.0);
  r.test_mse = j.value("test_mse", 0.0);
  r.final_train_loss = j.value("final_train_loss", 0.0);
  r.epochs_run = j.value("epochs_run", 0);
  r.wall_ms = j.value("wall_ms", 0.0);
  return r;
}

}  // namespace

std::string RunRecord::to_json_string() const { return record_to_json(*this).dump(); }

RunRecord RunRecord::from_json_string(const std::string& text) {
  return record_from_json(json::parse(text));
}

std::string run_key(const std::string& dataset_key, const std::string& graph_key,
                    const GnnConfig& config, std::uint64_t seed) {
  std::ostringstream content;
  content << dataset_key << "|" << graph_key << "|" << config.key() << "|seed=" << seed;
  return fnv1a64_hex(content.str());
}

RecordStore::RecordStore(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto r = RunRecord::from_json_string(line);
    keys_.insert(r.key);
    records_.push_back(std::move(r));
  }
}

bool RecordStore::contains(const std::string& key) const {
  std::lock_guard lock(mu_);
  return keys_.count(key) > 0;
}

void RecordStore::append(RunRecord record) {
  std::lock_guard lock(mu_);
  if (keys_.count(record.key)) return;
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw std::runtime_error("RecordStore: cannot append to " + path_);
    out << record.to_json_string() << "\n";
  }
  keys_.insert(record.key);
  records_.push_back(std::move(record));
}

std::vector<RunRecord> RecordStore::snapshot() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t RecordStore::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::string RecordStore::canonical_table(std::vector<RunRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const RunRecord& a, const RunRecord& b) { return a.key < b.key; });
  std::ostringstream out;
  for (auto& r : records) {
    r.wall_ms = 0;
    out << r.to_json_string() << "\n";
  }
  return out.str();
}

namespace {

struct PlannedGraph {
  FeatureGraph graph;
  std::string kind;
};

std::vector<PlannedGraph> plan_graphs(const ExperimentPlan& plan, const SyntheticDataset& ds) {
  std::vector<PlannedGraph> graphs;
  switch (plan.graphs.kind) {
    case GraphSourceKind::Stratified:
    case GraphSourceKind::Lattice: {
      StrataPlan strata = plan.graphs.strata;
      if (plan.graphs.kind == GraphSourceKind::Lattice) {
        const int k = static_cast<int>(interaction_pairs(ds.truth).size());
        for (auto& cell : strata.cells) cell.interaction_edges = k;
        strata.sibling_closure = true;
      }
      std::mt19937_64 rng(plan.graphs.sample_seed);
      for (auto& sg : sample_stratified(ds.truth, strata, rng))
        graphs.push_back({std::move(sg.graph), "sampled"});
      break;
    }
    case GraphSourceKind::Named: {
      for (const auto& name : plan.graphs.named) {
        if (name == "null")
          graphs.push_back({null_graph(ds.d), "null"});
        else if (name == "complete")
          graphs.push_back({complete_graph(ds.d), "complete"});
        else if (name == "ground_truth")
          graphs.push_back({ground_truth_graph(ds.truth), "ground_truth"});
        else
          throw std::invalid_argument("unknown named graph: " + name);
      }
      break;
    }
    case GraphSourceKind::Files: {
      for (const auto& path : plan.graphs.files)
        graphs.push_back({load_edge_list_file(path), "file"});
      break;
    }
  }
  return graphs;
}

struct Cell {
  SyntheticSpec dataset;
  FeatureGraph graph;
  std::string kind;
  int layers = 1;
  std::uint64_t seed = 0;
  int scaling_p = -1;
};

GnnConfig cell_config(const ExperimentPlan& plan, const Cell& cell) {
  GnnConfig config;
  config.num_layers = cell.layers;
  config.hidden_dim = plan.model.hidden_dim;
  config.embedding_dim = plan.model.embedding_dim;
  config.lr = plan.model.lr;
  config.batch_size = plan.model.batch_size;
  config.max_epochs = plan.model.max_epochs;
  config.patience = plan.model.patience;
  config.seed = cell.seed;
  return config;
}

RunRecord execute_cell(const ExperimentPlan& plan, const Cell& cell,
                       const SyntheticDataset& ds) {
  RunRecord record;
  record.dataset_key = cell.dataset.key();
  record.graph_key = graph_key(cell.graph);
  record.strata = compute_strata(cell.graph, ds.truth);
  record.member = member_code(cell.graph, ds.truth);
  {
    const auto pairs = interaction_pairs(ds.truth);
    std::vector<std::pair<int, int>> non_inter;
    for (auto e : cell.graph.edges)
      if (std::find(pairs.begin(), pairs.end(), e) == pairs.end()) non_inter.push_back(e);
    record.group_key = graph_key(make_graph(ds.d, non_inter));
  }
  record.graph_kind = cell.kind;
  record.config = cell_config(plan, cell);
  record.seed = cell.seed;
  record.scaling_p = cell.scaling_p;
  record.key = run_key(record.dataset_key, record.graph_key, record.config, record.seed);

  const long arc_count = 2 * static_cast<long>(cell.graph.edges.size());
  if (arc_count > plan.arc_cap) {
    record.status = "exceeded";
    record.error = "arc count " + std::to_string(arc_count) + " exceeds cap " +
                   std::to_string(plan.arc_cap);
    return record;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    auto trained = train(cell.graph, ds, record.config);
    record.test_mae = trained.test_mae;
    record.test_mse = trained.test_mse;
    record.final_train_loss = trained.history.empty() ? 0 : trained.history.back().train_loss;
    record.epochs_run = trained.epochs_run;
  } catch (const std::exception& e) {
    record.status = "failed";
    record.error = e.what();
  }
  record.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return record;
}

RunRecord linear_record(const SyntheticSpec& spec, const SyntheticDataset& ds, int scaling_p) {
  RunRecord record;
  record.dataset_key = spec.key();
  record.graph_key = "linear-baseline";
  record.graph_kind = "linear";
  record.scaling_p = scaling_p;
  record.config.num_layers = 0;
  record.config.hidden_dim = -1;
  record.strata = compute_strata(null_graph(ds.d), ds.truth);
  record.member = member_code(null_graph(ds.d), ds.truth);
  record.key = fnv1a64_hex(record.dataset_key + "|linear");
  const auto start = std::chrono::steady_clock::now();
  record.test_mae = linear_baseline_mae(ds);
  record.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return record;
}

}  // namespace

double linear_baseline_mae(const SyntheticDataset& ds) {
  // The null-graph pairwise model is exactly the linear model.
  std::span<const double> train_x{ds.features.data(),
                                  static_cast<std::size_t>(ds.train_n) *
                                      static_cast<std::size_t>(ds.d)};
  std::span<const double> train_y{ds.targets.data(), static_cast<std::size_t>(ds.train_n)};
  auto model = fit_pairwise(null_graph(ds.d), train_x, ds.train_n, ds.d, train_y);
  double mae = 0;
  for (long i = ds.train_n; i < ds.n; ++i)
    mae += std::abs(ds.targets[static_cast<std::size_t>(i)] - model.predict(ds.row(i)));
  return mae / static_cast<double>(ds.test_n());
}

std::vector<RunRecord> run_plan(const ExperimentPlan& plan, RecordStore& store) {
  // Assemble cells (dataset sweeps first for the scaling mode).
  std::vector<Cell> cells;
  std::vector<std::pair<SyntheticSpec, SyntheticDataset>> datasets;
  std::vector<std::string> plan_keys;

  auto add_dataset_cells = [&](const SyntheticSpec& spec, int scaling_p) {
    datasets.emplace_back(spec, generate(spec));
    const auto& ds = datasets.back().second;
    std::vector<PlannedGraph> graphs;
    if (scaling_p >= 0) {
      graphs.push_back({ground_truth_graph(ds.truth), "ground_truth"});
      graphs.push_back({complete_graph(ds.d), "complete"});
    } else {
      graphs = plan_graphs(plan, ds);
    }
    for (const auto& pg : graphs)
      for (int layers : plan.model.layers)
        for (auto seed : plan.seeds) {
          Cell cell{spec, pg.graph, pg.kind, layers, seed, scaling_p};
          cells.push_back(std::move(cell));
        }
  };

  if (plan.scaling_p_list.empty()) {
    add_dataset_cells(plan.dataset, -1);
  } else {
    for (int p : plan.scaling_p_list) {
      SyntheticSpec spec = plan.dataset;
      spec.p = p;
      spec.truth.reset();
      add_dataset_cells(spec, p);
    }
  }

  // Linear baselines for scaling sweeps (one per dataset).
  std::vector<RunRecord> pending_linear;
  if (!plan.scaling_p_list.empty()) {
    for (auto& [spec, ds] : datasets) {
      auto record = linear_record(spec, ds, spec.p);
      plan_keys.push_back(record.key);
      if (!store.contains(record.key)) pending_linear.push_back(std::move(record));
    }
  }
  for (auto& record : pending_linear) store.append(std::move(record));

  // Skip cells already recorded (resume) and bind each cell to its dataset.
  struct Job {
    const Cell* cell;
    const SyntheticDataset* ds;
  };
  std::vector<Job> jobs;
  for (const auto& cell : cells) {
    const SyntheticDataset* ds = nullptr;
    for (const auto& [spec, data] : datasets)
      if (spec.key() == cell.dataset.key()) ds = &data;
    const auto key = run_key(cell.dataset.key(), graph_key(cell.graph),
                             cell_config(plan, cell), cell.seed);
    plan_keys.push_back(key);
    if (!store.contains(key)) jobs.push_back({&cell, ds});
  }

  unsigned workers = plan.workers > 0 ? static_cast<unsigned>(plan.workers)
                                      : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, jobs.empty() ? 1 : static_cast<unsigned>(jobs.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) break;
      store.append(execute_cell(plan, *jobs[i].cell, *jobs[i].ds));
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::unordered_set<std::string> wanted(plan_keys.begin(), plan_keys.end());
  std::vector<RunRecord> out;
  for (auto& r : store.snapshot())
    if (wanted.count(r.key)) out.push_back(std::move(r));
  return out;
}

std::vector<EdgeAggRow> aggregate_by_edges(const std::vector<RunRecord>& records) {
  std::map<std::tuple<int, int, int>, std::vector<double>> groups;
  for (const auto& r : records) {
    if (r.status != "ok" || r.graph_kind == "linear") continue;
    groups[{r.config.num_layers, r.strata.interaction_edges, r.strata.non_interaction_edges}]
        .push_back(r.test_mae);
  }
  std::vector<EdgeAggRow> rows;
  for (const auto& [key, maes] : groups) {
    EdgeAggRow row;
    row.layers = std::get<0>(key);
    row.interaction = std::get<1>(key);
    row.non_interaction = std::get<2>(key);
    row.n = static_cast<int>(maes.size());
    row.mean_mae = mean_of(maes);
    row.se = maes.size() > 1 ? sample_sd(maes) / std::sqrt(static_cast<double>(maes.size())) : 0;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string edges_csv(const std::vector<EdgeAggRow>& rows) {
  std::ostringstream out;
  out << "layers,interaction_edges,non_interaction_edges,n,mean_mae,se\n";
  char buf[120];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.10g,%.10g", r.layers, r.interaction,
                  r.non_interaction, r.n, r.mean_mae, r.se);
    out << buf << "\n";
  }
  return out.str();
}

std::vector<RemovalRow> paired_removal_stats(const std::vector<RunRecord>& records) {
  // (group, layers, seed) -> member -> mae
  std::map<std::tuple<std::string, int, std::uint64_t>, std::map<std::string, double>> groups;
  std::size_t pair_count = 0;
  for (const auto& r : records) {
    if (r.status != "ok" || r.graph_kind == "linear" || r.member.empty()) continue;
    groups[{r.group_key + "|" + r.dataset_key, r.config.num_layers, r.seed}][r.member] =
        r.test_mae;
    pair_count = std::max(pair_count, r.member.size());
  }
  // (parent member, dropped pair, layers) -> diffs
  std::map<std::tuple<std::string, int, int>, std::vector<double>> diffs;
  for (const auto& [key, members] : groups) {
    const int layers = std::get<1>(key);
    for (const auto& [member, parent_mae] : members) {
      for (std::size_t j = 0; j < member.size(); ++j) {
        if (member[j] != '1') continue;
        std::string child = member;
        child[j] = '0';
        auto it = members.find(child);
        if (it == members.end()) continue;
        diffs[{member, static_cast<int>(j), layers}].push_back(it->second - parent_mae);
      }
    }
  }
  std::vector<RemovalRow> rows;
  for (const auto& [key, values] : diffs) {
    if (values.size() < 2) continue;
    RemovalRow row;
    row.parent_member = std::get<0>(key);
    row.dropped_pair = std::get<1>(key);
    row.layers = std::get<2>(key);
    row.stat = one_sided_lower_bound(values);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string removal_csv(const std::vector<RemovalRow>& rows) {
  std::ostringstream out;
  out << "parent_member,dropped_pair,layers,pairs,mean_diff,sd,lower_95\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%ld,%.10g,%.10g,%.10g", r.parent_member.c_str(),
                  r.dropped_pair, r.layers, r.stat.n, r.stat.mean, r.stat.sd, r.stat.lower_95);
    out << buf << "\n";
  }
  return out.str();
}

std::vector<HopCell> hops_heatmap(const std::vector<RunRecord>& records) {
  std::map<std::pair<int, std::vector<int>>, std::vector<double>> groups;
  for (const auto& r : records) {
    if (r.status != "ok" || r.graph_kind == "linear") continue;
    groups[{r.config.num_layers, r.strata.hops}].push_back(r.test_mae);
  }
  std::vector<HopCell> cells;
  for (const auto& [key, maes] : groups) {
    HopCell cell;
    cell.layers = key.first;
    cell.hops = key.second;
    cell.n = static_cast<int>(maes.size());
    cell.mean_mae = mean_of(maes);
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::string hops_csv(const std::vector<HopCell>& cells) {
  std::ostringstream out;
  out << "layers,hops,n,mean_mae\n";
  char buf[120];
  for (const auto& c : cells) {
    std::string hops;
    for (std::size_t i = 0; i < c.hops.size(); ++i)
      hops += (i ? ";" : "") + std::to_string(c.hops[i]);
    std::snprintf(buf, sizeof buf, "%d,%s,%d,%.10g", c.layers, hops.c_str(), c.n, c.mean_mae);
    out << buf << "\n";
  }
  return out.str();
}

std::vector<ScalingRow> scaling_table(const std::vector<RunRecord>& records,
                                      const SyntheticSpec& base_spec) {
  std::map<std::pair<int, std::string>, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) {
    if (r.scaling_p < 0) continue;
    groups[{r.scaling_p, r.graph_kind}].push_back(&r);
  }
  std::map<int, double> floors;
  std::vector<ScalingRow> rows;
  for (const auto& [key, group] : groups) {
    ScalingRow row;
    row.p = key.first;
    row.kind = key.second;
    if (!floors.count(row.p)) {
      SyntheticSpec spec = base_spec;
      spec.p = row.p;
      spec.truth.reset();
      floors[row.p] = noise_mae_floor(generate(spec));
    }
    row.noise_floor = floors[row.p];
    std::vector<double> maes;
    for (const auto* r : group) {
      row.layers = r->config.num_layers;
      if (r->status == "ok")
        maes.push_back(r->test_mae);
      else
        row.status = r->status;
    }
    row.n = static_cast<int>(maes.size());
    if (!maes.empty()) row.mean_mae = mean_of(maes);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string scaling_csv(const std::vector<ScalingRow>& rows) {
  std::ostringstream out;
  out << "p,kind,layers,n,mean_mae,noise_floor,status\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%d,%d,%.10g,%.10g,%s", r.p, r.kind.c_str(), r.layers,
                  r.n, r.mean_mae, r.noise_floor, r.status.c_str());
    out << buf << "\n";
  }
  return out.str();
}

}  // namespace figlab
