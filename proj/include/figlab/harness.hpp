#pragma once
#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_set>
#include <vector>

#include "figlab/gnn.hpp"
#include "figlab/stats.hpp"
#include "figlab/strata.hpp"
#include "figlab/synth.hpp"

namespace figlab {

enum class GraphSourceKind { Stratified, Lattice, Named, Files };

struct GraphSource {
  GraphSourceKind kind = GraphSourceKind::Named;
  // Stratified/Lattice: strata quotas; Lattice pins every cell to the
  // full interaction-edge set and closes over siblings.
  StrataPlan strata;
  std::uint64_t sample_seed = 7;
  // Named: any of "null", "complete", "ground_truth".
  std::vector<std::string> named;
  // Files: edge-list paths.
  std::vector<std::string> files;
};

struct ModelPlan {
  std::vector<int> layers = {1};
  int hidden_dim = 0;  // 0 = per-depth default
  int embedding_dim = 16;
  double lr = 1e-2;
  int batch_size = 256;
  int max_epochs = 200;
  int patience = 30;
};

struct ExperimentPlan {
  std::string name = "plan";
  SyntheticSpec dataset;
  GraphSource graphs;
  ModelPlan model;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int workers = 0;       // 0 = hardware concurrency
  long arc_cap = 20000;  // per-graph directed-arc budget
  // Non-empty switches the plan to a scaling sweep over p: for each p the
  // ground-truth and complete graphs are trained and a least-squares
  // linear baseline on raw features is recorded.
  std::vector<int> scaling_p_list;

  std::string to_json_string() const;
  static ExperimentPlan from_json_string(const std::string& text);
};

struct RunRecord {
  std::string key;  // content hash of (dataset, graph, config, seed)
  std::string dataset_key;
  std::string graph_key;
  GraphStrata strata;
  std::string group_key;   // sibling group: shared non-interaction edges
  std::string member;      // interaction-pair presence code
  std::string graph_kind;  // sampled | null | complete | ground_truth | file | linear
  GnnConfig config;
  std::uint64_t seed = 0;
  int scaling_p = -1;
  std::string status = "ok";  // ok | failed | exceeded
  std::string error;
  double test_mae = 0;
  double test_mse = 0;
  double final_train_loss = 0;
  int epochs_run = 0;
  double wall_ms = 0;

  std::string to_json_string() const;
  static RunRecord from_json_string(const std::string& text);
};

std::string run_key(const std::string& dataset_key, const std::string& graph_key,
                    const GnnConfig& config, std::uint64_t seed);

// Append-only record table, optionally backed by a JSON-lines file.
// Appends are serialized; reads snapshot under the same lock.
class RecordStore {
 public:
  RecordStore() = default;
  explicit RecordStore(std::string path);  // loads existing lines

  bool contains(const std::string& key) const;
  void append(RunRecord record);
  std::vector<RunRecord> snapshot() const;
  std::size_t size() const;

  // Stable serialization for determinism checks: records sorted by key,
  // wall-clock timing excluded.
  static std::string canonical_table(std::vector<RunRecord> records);

 private:
  mutable std::mutex mu_;
  std::string path_;
  std::vector<RunRecord> records_;
  std::unordered_set<std::string> keys_;
};

// Executes every (graph, layer count, seed) cell not already present in
// the store. Per-cell failures and arc-cap rejections are recorded, not
// fatal. Returns the records belonging to the plan (old and new).
std::vector<RunRecord> run_plan(const ExperimentPlan& plan, RecordStore& store);

struct EdgeAggRow {
  int layers = 0;
  int interaction = 0;
  int non_interaction = 0;
  int n = 0;
  double mean_mae = 0;
  double se = 0;
};

std::vector<EdgeAggRow> aggregate_by_edges(const std::vector<RunRecord>& records);
std::string edges_csv(const std::vector<EdgeAggRow>& rows);

struct RemovalRow {
  std::string parent_member;
  int dropped_pair = 0;
  int layers = 0;
  PairedSummary stat;
};

// Pairs each graph with its sibling missing exactly one interaction
// edge, matched on (sibling group, config, seed).
std::vector<RemovalRow> paired_removal_stats(const std::vector<RunRecord>& records);
std::string removal_csv(const std::vector<RemovalRow>& rows);

struct HopCell {
  int layers = 0;
  std::vector<int> hops;
  int n = 0;
  double mean_mae = 0;
};

std::vector<HopCell> hops_heatmap(const std::vector<RunRecord>& records);
std::string hops_csv(const std::vector<HopCell>& cells);

struct ScalingRow {
  int p = 0;
  std::string kind;
  int layers = 0;
  int n = 0;
  double mean_mae = 0;
  double noise_floor = 0;
  std::string status = "ok";
};

// Aggregates a scaling sweep; the floor column is recomputed from the
// dataset spec at each p.
std::vector<ScalingRow> scaling_table(const std::vector<RunRecord>& records,
                                      const SyntheticSpec& base_spec);
std::string scaling_csv(const std::vector<ScalingRow>& rows);

// MAE on the test split of an ordinary least-squares fit over the raw
// feature columns (no intercept, no interaction terms).
double linear_baseline_mae(const SyntheticDataset& ds);

}  // namespace figlab
