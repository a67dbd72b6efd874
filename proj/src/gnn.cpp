#include "figlab/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "figlab/rng.hpp"

namespace figlab {

using diff::Parameter;
using diff::Shape;
using diff::Tensor;
using nlohmann::json;

int default_hidden_dim(int num_layers) {
  switch (num_layers) {
    case 1: return 26;
    case 2: return 20;
    case 3: return 16;
    default:
      throw std::invalid_argument(
          "default_hidden_dim: no default beyond 3 layers, set hidden_dim explicitly");
  }
}

int GnnConfig::resolved_hidden_dim() const {
  return hidden_dim > 0 ? hidden_dim : default_hidden_dim(num_layers);
}

std::string GnnConfig::key() const {
  std::ostringstream out;
  out << "L=" << num_layers << ";emb=" << embedding_dim << ";h=" << resolved_hidden_dim()
      << ";lr=" << lr << ";batch=" << batch_size << ";epochs=" << max_epochs
      << ";patience=" << patience << ";plateau=" << plateau_patience << "x" << plateau_factor
      << ";minimp=" << min_improvement << ";minlr=" << min_lr;
  return out.str();
}

std::vector<Parameter*> GnnModel::parameters() {
  std::vector<Parameter*> out;
  out.push_back(&embedding);
  for (auto& layer : layers) {
    for (auto* p : {&layer.w_query, &layer.b_query, &layer.w_key, &layer.b_key, &layer.w_value,
                    &layer.b_value, &layer.w_root, &layer.b_root, &layer.bn_gamma,
                    &layer.bn_beta})
      out.push_back(p);
  }
  out.push_back(&head_w);
  out.push_back(&head_b);
  return out;
}

std::vector<const Parameter*> GnnModel::parameters() const {
  std::vector<const Parameter*> out;
  for (auto* p : const_cast<GnnModel*>(this)->parameters()) out.push_back(p);
  return out;
}

long GnnModel::parameter_count() const {
  long count = 0;
  for (const auto* p : parameters()) count += static_cast<long>(p->value.size());
  return count;
}

namespace {

void fill_uniform(Parameter& p, double bound, std::mt19937_64& eng) {
  for (auto& v : p.value) v = (2.0 * uniform_unit(eng) - 1.0) * bound;
}

}  // namespace

GnnModel make_model(const GnnConfig& config, int num_features) {
  if (num_features < 1) throw std::invalid_argument("make_model: need at least one feature");
  if (config.num_layers < 1) throw std::invalid_argument("make_model: num_layers must be >= 1");
  const int hidden = config.resolved_hidden_dim();

  GnnModel model;
  model.config = config;
  model.num_features = num_features;
  model.input_dim = 1 + config.embedding_dim;

  std::mt19937_64 eng(config.seed);
  NormalSampler emb_sampler(config.seed);

  model.embedding = Parameter("embedding", {num_features, config.embedding_dim});
  for (auto& v : model.embedding.value) v = 0.1 * emb_sampler.next();

  int in_dim = model.input_dim;
  for (int l = 0; l < config.num_layers; ++l) {
    GnnModel::Layer layer;
    layer.in_dim = in_dim;
    layer.out_dim = hidden;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    const std::string prefix = "layer" + std::to_string(l) + ".";
    layer.w_query = Parameter(prefix + "w_query", {in_dim, hidden});
    layer.b_query = Parameter(prefix + "b_query", {1, hidden});
    layer.w_key = Parameter(prefix + "w_key", {in_dim, hidden});
    layer.b_key = Parameter(prefix + "b_key", {1, hidden});
    layer.w_value = Parameter(prefix + "w_value", {in_dim, hidden});
    layer.b_value = Parameter(prefix + "b_value", {1, hidden});
    layer.w_root = Parameter(prefix + "w_root", {in_dim, hidden});
    layer.b_root = Parameter(prefix + "b_root", {1, hidden});
    for (auto* p : {&layer.w_query, &layer.b_query, &layer.w_key, &layer.b_key, &layer.w_value,
                    &layer.b_value, &layer.w_root, &layer.b_root})
      fill_uniform(*p, bound, eng);
    layer.bn_gamma = Parameter(prefix + "bn_gamma", {1, hidden});
    std::fill(layer.bn_gamma.value.begin(), layer.bn_gamma.value.end(), 1.0);
    layer.bn_beta = Parameter(prefix + "bn_beta", {1, hidden});
    layer.bn = diff::BatchNormState(hidden);
    model.layers.push_back(std::move(layer));
    in_dim = hidden;
  }

  const double head_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  model.head_w = Parameter("head_w", {hidden, 1});
  model.head_b = Parameter("head_b", {1, 1});
  fill_uniform(model.head_w, head_bound, eng);
  fill_uniform(model.head_b, head_bound, eng);
  return model;
}

ArcList build_arcs(const FeatureGraph& g) {
  ArcList arcs;
  arcs.src.reserve(2 * g.edges.size());
  arcs.dst.reserve(2 * g.edges.size());
  for (auto [i, j] : g.edges) {
    arcs.src.push_back(i);
    arcs.dst.push_back(j);
    arcs.src.push_back(j);
    arcs.dst.push_back(i);
  }
  return arcs;
}

namespace {

struct BatchArcs {
  diff::IndexVec src;
  diff::IndexVec dst;
};

BatchArcs expand_arcs(const ArcList& arcs, int batch_rows, int d) {
  auto src = std::make_shared<std::vector<int>>();
  auto dst = std::make_shared<std::vector<int>>();
  src->reserve(arcs.size() * static_cast<std::size_t>(batch_rows));
  dst->reserve(arcs.size() * static_cast<std::size_t>(batch_rows));
  for (int r = 0; r < batch_rows; ++r) {
    const int base = r * d;
    for (std::size_t a = 0; a < arcs.size(); ++a) {
      src->push_back(base + arcs.src[a]);
      dst->push_back(base + arcs.dst[a]);
    }
  }
  return {std::move(src), std::move(dst)};
}

}  // namespace

ForwardResult gnn_forward(diff::Tape& tape, GnnModel& model, const ArcList& arcs,
                          std::span<const double> batch, int batch_rows, bool training,
                          bool input_requires_grad) {
  const int d = model.num_features;
  if (batch_rows < 1) throw std::invalid_argument("gnn_forward: empty batch");
  if (batch.size() != static_cast<std::size_t>(batch_rows) * static_cast<std::size_t>(d))
    throw std::invalid_argument("gnn_forward: batch size != rows * num_features");

  ForwardResult result;
  auto params = model.parameters();
  result.param_leaves.reserve(params.size());
  for (auto* p : params)
    result.param_leaves.push_back(tape.leaf(p->shape, p->value, true));
  auto leaf_of = [&](const Parameter& p) -> Tensor {
    for (std::size_t k = 0; k < params.size(); ++k)
      if (params[k] == &p) return result.param_leaves[k];
    throw std::logic_error("gnn_forward: parameter not registered");
  };

  result.input = tape.leaf({batch_rows, d}, std::vector<double>(batch.begin(), batch.end()),
                           input_requires_grad);

  const int nodes = batch_rows * d;
  // Node-major feature column: row-major (B x d) flattens to node order.
  Tensor x_col = tape.reshape(result.input, {nodes, 1});
  Tensor emb = tape.tile_rows(leaf_of(model.embedding), batch_rows);
  Tensor h = tape.concat_cols(x_col, emb);

  const auto [arc_src, arc_dst] = expand_arcs(arcs, batch_rows, d);

  for (auto& layer : model.layers) {
    Tensor root = tape.add_row(tape.matmul(h, leaf_of(layer.w_root)), leaf_of(layer.b_root));
    Tensor z = root;
    if (!arc_src->empty()) {
      Tensor queries = tape.add_row(tape.matmul(h, leaf_of(layer.w_query)), leaf_of(layer.b_query));
      Tensor keys = tape.add_row(tape.matmul(h, leaf_of(layer.w_key)), leaf_of(layer.b_key));
      Tensor values = tape.add_row(tape.matmul(h, leaf_of(layer.w_value)), leaf_of(layer.b_value));
      Tensor scores = tape.scale(
          tape.row_dot(tape.gather_rows(queries, arc_dst), tape.gather_rows(keys, arc_src)),
          1.0 / std::sqrt(static_cast<double>(layer.out_dim)));
      Tensor weights = tape.segment_softmax(scores, arc_dst, nodes);
      Tensor messages = tape.scale_rows(tape.gather_rows(values, arc_src), weights);
      z = tape.add(root, tape.segment_sum(messages, arc_dst, nodes));
    }
    Tensor normed =
        tape.batch_norm(z, leaf_of(layer.bn_gamma), leaf_of(layer.bn_beta), layer.bn, training);
    h = tape.relu(normed);
  }

  Tensor pooled = tape.group_mean_rows(h, batch_rows);
  result.prediction =
      tape.add_row(tape.matmul(pooled, leaf_of(model.head_w)), leaf_of(model.head_b));
  return result;
}

namespace {

std::vector<double> gather_batch(std::span<const double> features, int d,
                                 const std::vector<long>& rows, std::size_t begin,
                                 std::size_t end) {
  std::vector<double> out((end - begin) * static_cast<std::size_t>(d));
  for (std::size_t k = begin; k < end; ++k)
    std::copy_n(features.data() + static_cast<std::size_t>(rows[k]) * d, d,
                out.data() + (k - begin) * static_cast<std::size_t>(d));
  return out;
}

}  // namespace

TrainedModel train(const FeatureGraph& graph, const SyntheticDataset& ds,
                   const GnnConfig& config) {
  if (graph.num_features != ds.d)
    throw std::invalid_argument("train: graph and dataset dimension mismatch");
  if (ds.train_n < 1 || ds.train_n >= ds.n)
    throw std::invalid_argument("train: dataset split missing");
  if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");

  TrainedModel trained;
  trained.model = make_model(config, ds.d);
  auto& model = trained.model;
  const ArcList arcs = build_arcs(graph);
  auto params = model.parameters();

  diff::AdamState adam;
  diff::adam_init(adam, params);
  adam.lr = config.lr;

  // Distinct stream from the init stream.
  std::mt19937_64 batch_rng(config.seed ^ 0xd1b54a32d192ed03ULL);
  std::vector<long> order(static_cast<std::size_t>(ds.train_n));
  for (long i = 0; i < ds.train_n; ++i) order[static_cast<std::size_t>(i)] = i;

  diff::Tape tape;
  double best_loss = std::numeric_limits<double>::infinity();
  double plateau_best = best_loss;
  int stagnant = 0, plateau_stagnant = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_values(order, batch_rng);
    double loss_sum = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const int rows = static_cast<int>(end - begin);
      auto batch = gather_batch(ds.features, ds.d, order, begin, end);
      std::vector<double> targets(static_cast<std::size_t>(rows));
      for (std::size_t k = begin; k < end; ++k)
        targets[k - begin] = ds.targets[static_cast<std::size_t>(order[k])];

      tape.reset();
      double batch_loss = 0;
      try {
        auto fwd = gnn_forward(tape, model, arcs, batch, rows, /*training=*/true);
        Tensor target = tape.constant({rows, 1}, std::move(targets));
        Tensor loss = tape.mse(fwd.prediction, target);
        batch_loss = loss.scalar();
        tape.backward(loss);
        std::vector<std::span<const double>> grads;
        grads.reserve(params.size());
        for (auto& leaf : fwd.param_leaves) grads.push_back(leaf.grad());
        diff::adam_step(params, grads, adam);
      } catch (const diff::NonFiniteError& e) {
        throw DivergenceError(epoch, std::string("training diverged at epoch ") +
                                         std::to_string(epoch) + ": " + e.what());
      }
      loss_sum += batch_loss * rows;
    }
    const double epoch_loss = loss_sum / static_cast<double>(ds.train_n);
    if (!std::isfinite(epoch_loss))
      throw DivergenceError(epoch, "training diverged at epoch " + std::to_string(epoch));
    trained.history.push_back({epoch_loss, adam.lr});
    trained.epochs_run = epoch;

    if (epoch_loss < plateau_best - config.min_improvement) {
      plateau_best = epoch_loss;
      plateau_stagnant = 0;
    } else if (++plateau_stagnant >= config.plateau_patience) {
      adam.lr = std::max(adam.lr * config.plateau_factor, config.min_lr);
      plateau_stagnant = 0;
    }
    if (epoch_loss < best_loss - config.min_improvement) {
      best_loss = epoch_loss;
      stagnant = 0;
    } else if (++stagnant >= config.patience) {
      break;
    }
  }

  const long test_rows = ds.test_n();
  auto eval = evaluate(model, graph,
                       std::span<const double>(ds.features.data() + ds.train_n * ds.d,
                                               static_cast<std::size_t>(test_rows * ds.d)),
                       std::span<const double>(ds.targets.data() + ds.train_n,
                                               static_cast<std::size_t>(test_rows)),
                       test_rows);
  trained.test_mae = eval.mae;
  trained.test_mse = eval.mse;
  return trained;
}

std::vector<double> predict(GnnModel& model, const FeatureGraph& graph,
                            std::span<const double> features, long rows) {
  if (rows < 1) throw std::invalid_argument("predict: empty rows");
  if (graph.num_features != model.num_features)
    throw std::invalid_argument("predict: graph and model dimension mismatch");
  const ArcList arcs = build_arcs(graph);
  const int d = model.num_features;
  const long chunk = std::max(1, model.config.batch_size);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(rows));
  diff::Tape tape;
  for (long begin = 0; begin < rows; begin += chunk) {
    const int b = static_cast<int>(std::min(chunk, rows - begin));
    tape.reset();
    auto fwd = gnn_forward(
        tape, model, arcs,
        std::span<const double>(features.data() + begin * d, static_cast<std::size_t>(b) * d), b,
        /*training=*/false);
    auto vals = fwd.prediction.values();
    out.insert(out.end(), vals.begin(), vals.end());
  }
  return out;
}

EvalResult evaluate(GnnModel& model, const FeatureGraph& graph,
                    std::span<const double> features, std::span<const double> targets,
                    long rows) {
  if (rows < 1) throw std::invalid_argument("evaluate: empty rows");
  auto preds = predict(model, graph, features, rows);
  EvalResult r;
  for (long i = 0; i < rows; ++i) {
    const double err = preds[static_cast<std::size_t>(i)] - targets[static_cast<std::size_t>(i)];
    r.mae += std::abs(err);
    r.mse += err * err;
  }
  r.mae /= static_cast<double>(rows);
  r.mse /= static_cast<double>(rows);
  return r;
}

namespace {

struct NamedTensorRef {
  std::string name;
  Shape shape;
  const std::vector<double>* values;
};

std::vector<NamedTensorRef> checkpoint_tensors(const GnnModel& model) {
  std::vector<NamedTensorRef> out;
  for (const auto* p : model.parameters()) out.push_back({p->name, p->shape, &p->value});
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& bn = model.layers[l].bn;
    const std::string prefix = "layer" + std::to_string(l) + ".";
    out.push_back({prefix + "bn_running_mean", {1, bn.channels()}, &bn.running_mean});
    out.push_back({prefix + "bn_running_var", {1, bn.channels()}, &bn.running_var});
  }
  return out;
}

json config_to_json(const GnnConfig& c) {
  return json{{"num_layers", c.num_layers},
              {"embedding_dim", c.embedding_dim},
              {"hidden_dim", c.hidden_dim},
              {"lr", c.lr},
              {"batch_size", c.batch_size},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"plateau_patience", c.plateau_patience},
              {"plateau_factor", c.plateau_factor},
              {"min_improvement", c.min_improvement},
              {"min_lr", c.min_lr},
              {"seed", c.seed}};
}

GnnConfig config_from_json(const json& j) {
  GnnConfig c;
  c.num_layers = j.at("num_layers").get<int>();
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.lr = j.at("lr").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.plateau_patience = j.at("plateau_patience").get<int>();
  c.plateau_factor = j.at("plateau_factor").get<double>();
  c.min_improvement = j.at("min_improvement").get<double>();
  c.min_lr = j.at("min_lr").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_checkpoint(const GnnModel& model, const std::string& prefix) {
  const auto tensors = checkpoint_tensors(model);
  json manifest{{"format", "figlab-gnn-checkpoint-v1"},
                {"config", config_to_json(model.config)},
                {"num_features", model.num_features}};
  json shape_list = json::array();
  for (const auto& t : tensors)
    shape_list.push_back(json{{"name", t.name}, {"rows", t.shape.rows}, {"cols", t.shape.cols}});
  manifest["tensors"] = shape_list;
  std::ofstream mf(prefix + ".json");
  if (!mf) throw std::runtime_error("save_checkpoint: cannot open " + prefix + ".json");
  mf << manifest.dump(2) << "\n";

  std::ofstream tf(prefix + ".tensors");
  if (!tf) throw std::runtime_error("save_checkpoint: cannot open " + prefix + ".tensors");
  char buf[40];
  for (const auto& t : tensors) {
    tf << t.name << " " << t.shape.rows << " " << t.shape.cols;
    for (double v : *t.values) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      tf << " " << buf;
    }
    tf << "\n";
  }
}

GnnModel load_checkpoint(const std::string& prefix) {
  std::ifstream mf(prefix + ".json");
  if (!mf) throw std::runtime_error("load_checkpoint: cannot open " + prefix + ".json");
  json manifest = json::parse(mf);
  if (manifest.at("format").get<std::string>() != "figlab-gnn-checkpoint-v1")
    throw std::runtime_error("load_checkpoint: unknown format");
  GnnModel model = make_model(config_from_json(manifest.at("config")),
                              manifest.at("num_features").get<int>());

  std::vector<NamedTensorRef> refs = checkpoint_tensors(model);
  std::ifstream tf(prefix + ".tensors");
  if (!tf) throw std::runtime_error("load_checkpoint: cannot open " + prefix + ".tensors");
  std::string line;
  std::size_t seen = 0;
  while (std::getline(tf, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name;
    int rows, cols;
    ls >> name >> rows >> cols;
    auto it = std::find_if(refs.begin(), refs.end(),
                           [&](const NamedTensorRef& r) { return r.name == name; });
    if (it == refs.end()) throw std::runtime_error("load_checkpoint: unknown tensor " + name);
    if (it->shape.rows != rows || it->shape.cols != cols)
      throw std::runtime_error("load_checkpoint: shape mismatch for " + name);
    auto* dst = const_cast<std::vector<double>*>(it->values);
    for (auto& v : *dst)
      if (!(ls >> v)) throw std::runtime_error("load_checkpoint: truncated tensor " + name);
    ++seen;
  }
  if (seen != refs.size()) throw std::runtime_error("load_checkpoint: missing tensors");
  return model;
}

}  // namespace figlab
