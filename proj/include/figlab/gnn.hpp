#pragma once
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "figlab/diff.hpp"
#include "figlab/fgraph.hpp"
#include "figlab/synth.hpp"

namespace figlab {

struct DivergenceError : std::runtime_error {
  int epoch;
  DivergenceError(int epoch, const std::string& what)
      : std::runtime_error(what), epoch(epoch) {}
};

struct GnnConfig {
  int num_layers = 1;
  int embedding_dim = 16;
  int hidden_dim = 0;  // 0 selects the per-depth default (26, 20, 16)
  double lr = 1e-2;
  int batch_size = 256;
  int max_epochs = 200;
  int patience = 30;  // early stop: epochs without train-loss improvement
  // Learning-rate schedule: halve when train loss fails to improve by
  // min_improvement for plateau_patience consecutive epochs, floored.
  int plateau_patience = 10;
  double plateau_factor = 0.5;
  double min_improvement = 1e-4;
  double min_lr = 1e-5;
  std::uint64_t seed = 1;

  int resolved_hidden_dim() const;
  std::string key() const;  // canonical description, excludes the seed
};

int default_hidden_dim(int num_layers);

// Attention message-passing model: learnable per-node embedding,
// num_layers attention layers with batch norm and ReLU, mean pooling
// over nodes, linear head.
struct GnnModel {
  struct Layer {
    int in_dim = 0;
    int out_dim = 0;
    diff::Parameter w_query, b_query, w_key, b_key, w_value, b_value, w_root, b_root;
    diff::Parameter bn_gamma, bn_beta;
    diff::BatchNormState bn{0};
  };

  GnnConfig config;
  int num_features = 0;
  int input_dim = 0;  // 1 (raw feature) + embedding_dim
  diff::Parameter embedding;
  std::vector<Layer> layers;
  diff::Parameter head_w, head_b;

  std::vector<diff::Parameter*> parameters();
  std::vector<const diff::Parameter*> parameters() const;
  long parameter_count() const;
};

// Seeded initialization: embedding ~ N(0, 0.1^2); weights and biases
// uniform in +-1/sqrt(fan_in); gamma 1, beta 0.
GnnModel make_model(const GnnConfig& config, int num_features);

// Directed arcs of one graph: each undirected edge in both directions.
struct ArcList {
  std::vector<int> src, dst;
  std::size_t size() const { return src.size(); }
};
ArcList build_arcs(const FeatureGraph& g);

struct ForwardResult {
  diff::Tensor prediction;                 // batch_rows x 1
  diff::Tensor input;                      // leaf over the raw batch
  std::vector<diff::Tensor> param_leaves;  // aligned with parameters()
};

// One forward pass over a batch that shares the graph topology.
// batch is row-major batch_rows x num_features. Train mode flows batch
// statistics through batch norm and updates the running stats.
ForwardResult gnn_forward(diff::Tape& tape, GnnModel& model, const ArcList& arcs,
                          std::span<const double> batch, int batch_rows, bool training,
                          bool input_requires_grad = false);

struct EpochStat {
  double train_loss = 0;
  double lr = 0;
};

struct TrainedModel {
  GnnModel model;
  std::vector<EpochStat> history;
  double test_mae = 0;
  double test_mse = 0;
  int epochs_run = 0;
};

// Minimizes train MSE with Adam and the plateau schedule; early-stops on
// stagnant train loss; evaluates MAE/MSE on the held-out rows.
// Deterministic given config.seed.
TrainedModel train(const FeatureGraph& graph, const SyntheticDataset& ds,
                   const GnnConfig& config);

struct EvalResult {
  double mae = 0;
  double mse = 0;
};

std::vector<double> predict(GnnModel& model, const FeatureGraph& graph,
                            std::span<const double> features, long rows);
EvalResult evaluate(GnnModel& model, const FeatureGraph& graph,
                    std::span<const double> features, std::span<const double> targets,
                    long rows);

// Text checkpoint: <prefix>.json manifest (config, seed, tensor shapes)
// plus <prefix>.tensors with one whitespace-separated tensor per line.
void save_checkpoint(const GnnModel& model, const std::string& prefix);
GnnModel load_checkpoint(const std::string& prefix);

}  // namespace figlab
