#include "figlab/diff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace figlab::diff {

const Shape& Tensor::shape() const { return tape_->node(id_).shape; }

std::span<const double> Tensor::values() const {
  const auto& n = tape_->node(id_);
  return {n.value.data(), n.value.size()};
}

std::span<const double> Tensor::grad() const {
  const auto& n = tape_->node(id_);
  return {n.grad.data(), n.grad.size()};
}

double Tensor::value_at(int r, int c) const {
  const auto& n = tape_->node(id_);
  return n.value[static_cast<std::size_t>(r) * static_cast<std::size_t>(n.shape.cols) +
                 static_cast<std::size_t>(c)];
}

double Tensor::scalar() const {
  const auto& n = tape_->node(id_);
  if (n.shape.size() != 1) throw std::invalid_argument("Tensor::scalar: not a 1x1 tensor");
  return n.value[0];
}

bool Tensor::requires_grad() const { return tape_->node(id_).requires_grad; }

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::verify_finite(const Node& n, const char* opname) const {
  if (!check_finite) return;
  for (double v : n.value)
    if (!std::isfinite(v))
      throw NonFiniteError(std::string("non-finite value produced by ") + opname);
}

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Tensor Tape::leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  require(static_cast<long>(values.size()) == shape.size(), "leaf: value size != shape");
  Node n;
  n.op = Op::Leaf;
  n.shape = shape;
  n.value = std::move(values);
  n.requires_grad = requires_grad;
  verify_finite(n, "leaf");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::constant(Shape shape, std::vector<double> values) {
  return leaf(shape, std::move(values), false);
}

Tensor Tape::matmul(Tensor a, Tensor b) {
  const auto& na = node(a.id_);
  const auto& nb = node(b.id_);
  require(na.shape.cols == nb.shape.rows, "matmul: inner dimensions differ");
  Node n;
  n.op = Op::Matmul;
  n.shape = {na.shape.rows, nb.shape.cols};
  n.a = a.id_;
  n.b = b.id_;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.value.assign(static_cast<std::size_t>(n.shape.size()), 0.0);
  const int rows = na.shape.rows, inner = na.shape.cols, cols = nb.shape.cols;
  const double* pa = na.value.data();
  const double* pb = nb.value.data();
  double* pc = n.value.data();
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < inner; ++k) {
      const double aik = pa[static_cast<std::size_t>(i) * inner + k];
      const double* brow = pb + static_cast<std::size_t>(k) * cols;
      double* crow = pc + static_cast<std::size_t>(i) * cols;
      for (int j = 0; j < cols; ++j) crow[j] += aik * brow[j];
    }
  }
  verify_finite(n, "matmul");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::add(Tensor a, Tensor b) {
  const auto& na = node(a.id_);
  const auto& nb = node(b.id_);
  require(na.shape == nb.shape, "add: shape mismatch");
  Node n;
  n.op = Op::Add;
  n.shape = na.shape;
  n.a = a.id_;
  n.b = b.id_;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.value.resize(na.value.size());
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = na.value[i] + nb.value[i];
  verify_finite(n, "add");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::add_row(Tensor a, Tensor row) {
  const auto& na = node(a.id_);
  const auto& nr = node(row.id_);
  require(nr.shape.rows == 1 && nr.shape.cols == na.shape.cols, "add_row: row must be 1 x cols");
  Node n;
  n.op = Op::AddRow;
  n.shape = na.shape;
  n.a = a.id_;
  n.b = row.id_;
  n.requires_grad = na.requires_grad || nr.requires_grad;
  n.value.resize(na.value.size());
  const int cols = na.shape.cols;
  for (int i = 0; i < na.shape.rows; ++i)
    for (int j = 0; j < cols; ++j)
      n.value[static_cast<std::size_t>(i) * cols + j] =
          na.value[static_cast<std::size_t>(i) * cols + j] + nr.value[static_cast<std::size_t>(j)];
  verify_finite(n, "add_row");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::mul(Tensor a, Tensor b) {
  const auto& na = node(a.id_);
  const auto& nb = node(b.id_);
  require(na.shape == nb.shape, "mul: shape mismatch");
  Node n;
  n.op = Op::Mul;
  n.shape = na.shape;
  n.a = a.id_;
  n.b = b.id_;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.value.resize(na.value.size());
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = na.value[i] * nb.value[i];
  verify_finite(n, "mul");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::scale(Tensor a, double alpha) {
  const auto& na = node(a.id_);
  Node n;
  n.op = Op::Scale;
  n.shape = na.shape;
  n.a = a.id_;
  n.alpha = alpha;
  n.requires_grad = na.requires_grad;
  n.value.resize(na.value.size());
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = alpha * na.value[i];
  verify_finite(n, "scale");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::scale_rows(Tensor a, Tensor col) {
  const auto& na = node(a.id_);
  const auto& nc = node(col.id_);
  require(nc.shape.cols == 1 && nc.shape.rows == na.shape.rows,
          "scale_rows: col must be rows x 1");
  Node n;
  n.op = Op::ScaleRows;
  n.shape = na.shape;
  n.a = a.id_;
  n.b = col.id_;
  n.requires_grad = na.requires_grad || nc.requires_grad;
  n.value.resize(na.value.size());
  const int cols = na.shape.cols;
  for (int i = 0; i < na.shape.rows; ++i) {
    const double s = nc.value[static_cast<std::size_t>(i)];
    for (int j = 0; j < cols; ++j)
      n.value[static_cast<std::size_t>(i) * cols + j] =
          s * na.value[static_cast<std::size_t>(i) * cols + j];
  }
  verify_finite(n, "scale_rows");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::concat_cols(Tensor a, Tensor b) {
  const auto& na = node(a.id_);
  const auto& nb = node(b.id_);
  require(na.shape.rows == nb.shape.rows, "concat_cols: row count mismatch");
  Node n;
  n.op = Op::ConcatCols;
  n.shape = {na.shape.rows, na.shape.cols + nb.shape.cols};
  n.a = a.id_;
  n.b = b.id_;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.value.resize(static_cast<std::size_t>(n.shape.size()));
  const int ca = na.shape.cols, cb = nb.shape.cols;
  for (int i = 0; i < na.shape.rows; ++i) {
    std::copy_n(na.value.data() + static_cast<std::size_t>(i) * ca, ca,
                n.value.data() + static_cast<std::size_t>(i) * (ca + cb));
    std::copy_n(nb.value.data() + static_cast<std::size_t>(i) * cb, cb,
                n.value.data() + static_cast<std::size_t>(i) * (ca + cb) + ca);
  }
  verify_finite(n, "concat_cols");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::relu(Tensor a) {
  const auto& na = node(a.id_);
  Node n;
  n.op = Op::Relu;
  n.shape = na.shape;
  n.a = a.id_;
  n.requires_grad = na.requires_grad;
  n.value.resize(na.value.size());
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = na.value[i] > 0 ? na.value[i] : 0;
  verify_finite(n, "relu");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::row_dot(Tensor a, Tensor b) {
  const auto& na = node(a.id_);
  const auto& nb = node(b.id_);
  require(na.shape == nb.shape, "row_dot: shape mismatch");
  Node n;
  n.op = Op::RowDot;
  n.shape = {na.shape.rows, 1};
  n.a = a.id_;
  n.b = b.id_;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.value.assign(static_cast<std::size_t>(na.shape.rows), 0.0);
  const int cols = na.shape.cols;
  for (int i = 0; i < na.shape.rows; ++i) {
    double s = 0;
    const double* pa = na.value.data() + static_cast<std::size_t>(i) * cols;
    const double* pb = nb.value.data() + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) s += pa[j] * pb[j];
    n.value[static_cast<std::size_t>(i)] = s;
  }
  verify_finite(n, "row_dot");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::mean_over_rows(Tensor a) {
  const auto& na = node(a.id_);
  require(na.shape.rows > 0, "mean_over_rows: empty input");
  Node n;
  n.op = Op::MeanRows;
  n.shape = {1, na.shape.cols};
  n.a = a.id_;
  n.requires_grad = na.requires_grad;
  n.value.assign(static_cast<std::size_t>(na.shape.cols), 0.0);
  for (int i = 0; i < na.shape.rows; ++i)
    for (int j = 0; j < na.shape.cols; ++j)
      n.value[static_cast<std::size_t>(j)] +=
          na.value[static_cast<std::size_t>(i) * na.shape.cols + j];
  for (auto& v : n.value) v /= na.shape.rows;
  verify_finite(n, "mean_over_rows");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::group_mean_rows(Tensor a, int num_groups) {
  const auto& na = node(a.id_);
  require(num_groups > 0 && na.shape.rows % num_groups == 0,
          "group_mean_rows: rows not divisible into groups");
  const int gs = na.shape.rows / num_groups;
  Node n;
  n.op = Op::GroupMean;
  n.shape = {num_groups, na.shape.cols};
  n.a = a.id_;
  n.groups = num_groups;
  n.requires_grad = na.requires_grad;
  n.value.assign(static_cast<std::size_t>(n.shape.size()), 0.0);
  const int cols = na.shape.cols;
  for (int g = 0; g < num_groups; ++g) {
    double* dst = n.value.data() + static_cast<std::size_t>(g) * cols;
    for (int r = 0; r < gs; ++r) {
      const double* src = na.value.data() + (static_cast<std::size_t>(g) * gs + r) * cols;
      for (int j = 0; j < cols; ++j) dst[j] += src[j];
    }
    for (int j = 0; j < cols; ++j) dst[j] /= gs;
  }
  verify_finite(n, "group_mean_rows");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::reshape(Tensor a, Shape shape) {
  const auto& na = node(a.id_);
  require(shape.size() == na.shape.size(), "reshape: element count mismatch");
  Node n;
  n.op = Op::Reshape;
  n.shape = shape;
  n.a = a.id_;
  n.requires_grad = na.requires_grad;
  n.value = na.value;
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::tile_rows(Tensor a, int times) {
  const auto& na = node(a.id_);
  require(times >= 1, "tile_rows: times must be positive");
  Node n;
  n.op = Op::TileRows;
  n.shape = {na.shape.rows * times, na.shape.cols};
  n.a = a.id_;
  n.groups = times;
  n.requires_grad = na.requires_grad;
  n.value.resize(static_cast<std::size_t>(n.shape.size()));
  for (int t = 0; t < times; ++t)
    std::copy(na.value.begin(), na.value.end(),
              n.value.begin() + static_cast<std::size_t>(t) * na.value.size());
  verify_finite(n, "tile_rows");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::gather_rows(Tensor a, IndexVec idx) {
  const auto& na = node(a.id_);
  require(idx != nullptr, "gather_rows: null index vector");
  for (int r : *idx)
    require(r >= 0 && r < na.shape.rows, "gather_rows: index out of range");
  Node n;
  n.op = Op::GatherRows;
  n.shape = {static_cast<int>(idx->size()), na.shape.cols};
  n.a = a.id_;
  n.idx = std::move(idx);
  n.requires_grad = na.requires_grad;
  n.value.resize(static_cast<std::size_t>(n.shape.size()));
  const int cols = na.shape.cols;
  for (std::size_t r = 0; r < n.idx->size(); ++r)
    std::copy_n(na.value.data() + static_cast<std::size_t>((*n.idx)[r]) * cols, cols,
                n.value.data() + r * cols);
  verify_finite(n, "gather_rows");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::segment_sum(Tensor a, IndexVec segments, int num_segments) {
  const auto& na = node(a.id_);
  require(segments != nullptr, "segment_sum: null segment vector");
  require(static_cast<int>(segments->size()) == na.shape.rows,
          "segment_sum: one segment id per row required");
  for (int s : *segments)
    require(s >= 0 && s < num_segments, "segment_sum: segment id out of range");
  Node n;
  n.op = Op::SegmentSum;
  n.shape = {num_segments, na.shape.cols};
  n.a = a.id_;
  n.idx = std::move(segments);
  n.requires_grad = na.requires_grad;
  n.value.assign(static_cast<std::size_t>(n.shape.size()), 0.0);
  const int cols = na.shape.cols;
  for (std::size_t r = 0; r < n.idx->size(); ++r) {
    double* dst = n.value.data() + static_cast<std::size_t>((*n.idx)[r]) * cols;
    const double* src = na.value.data() + r * cols;
    for (int j = 0; j < cols; ++j) dst[j] += src[j];
  }
  verify_finite(n, "segment_sum");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::segment_softmax(Tensor scores, IndexVec segments, int num_segments) {
  const auto& ns = node(scores.id_);
  require(ns.shape.cols == 1, "segment_softmax: scores must be N x 1");
  require(segments != nullptr, "segment_softmax: null segment vector");
  require(static_cast<int>(segments->size()) == ns.shape.rows,
          "segment_softmax: one segment id per score required");
  for (int s : *segments)
    require(s >= 0 && s < num_segments, "segment_softmax: segment id out of range");
  Node n;
  n.op = Op::SegmentSoftmax;
  n.shape = ns.shape;
  n.a = scores.id_;
  n.idx = std::move(segments);
  n.groups = num_segments;
  n.requires_grad = ns.requires_grad;
  n.value.resize(ns.value.size());
  std::vector<double> seg_max(static_cast<std::size_t>(num_segments),
                              -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < n.idx->size(); ++r) {
    auto s = static_cast<std::size_t>((*n.idx)[r]);
    seg_max[s] = std::max(seg_max[s], ns.value[r]);
  }
  std::vector<double> seg_sum(static_cast<std::size_t>(num_segments), 0.0);
  for (std::size_t r = 0; r < n.idx->size(); ++r) {
    auto s = static_cast<std::size_t>((*n.idx)[r]);
    n.value[r] = std::exp(ns.value[r] - seg_max[s]);
    seg_sum[s] += n.value[r];
  }
  for (std::size_t r = 0; r < n.idx->size(); ++r)
    n.value[r] /= seg_sum[static_cast<std::size_t>((*n.idx)[r])];
  verify_finite(n, "segment_softmax");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::batch_norm(Tensor a, Tensor gamma, Tensor beta, BatchNormState& state,
                        bool training) {
  const auto& na = node(a.id_);
  const auto& ng = node(gamma.id_);
  const auto& nb = node(beta.id_);
  const int cols = na.shape.cols;
  require(ng.shape == Shape{1, cols} && nb.shape == Shape{1, cols},
          "batch_norm: gamma/beta must be 1 x channels");
  require(state.channels() == cols, "batch_norm: state channel mismatch");
  if (training) require(na.shape.rows >= 2, "batch_norm: need at least 2 rows in train mode");

  Node n;
  n.op = Op::BatchNorm;
  n.shape = na.shape;
  n.a = a.id_;
  n.b = gamma.id_;
  n.c = beta.id_;
  n.bn = &state;
  n.bn_training = training;
  n.requires_grad = na.requires_grad || ng.requires_grad || nb.requires_grad;
  n.value.resize(na.value.size());
  const int rows = na.shape.rows;
  // aux layout: x-hat (rows*cols) then invstd (cols).
  n.aux.assign(na.value.size() + static_cast<std::size_t>(cols), 0.0);
  double* xhat = n.aux.data();
  double* invstd = n.aux.data() + na.value.size();

  if (training) {
    for (int j = 0; j < cols; ++j) {
      double mean = 0;
      for (int i = 0; i < rows; ++i) mean += na.value[static_cast<std::size_t>(i) * cols + j];
      mean /= rows;
      double var = 0;
      for (int i = 0; i < rows; ++i) {
        const double dv = na.value[static_cast<std::size_t>(i) * cols + j] - mean;
        var += dv * dv;
      }
      var /= rows;  // biased, used for normalization
      invstd[j] = 1.0 / std::sqrt(var + state.eps);
      for (int i = 0; i < rows; ++i) {
        const std::size_t at = static_cast<std::size_t>(i) * cols + j;
        xhat[at] = (na.value[at] - mean) * invstd[j];
        n.value[at] = ng.value[static_cast<std::size_t>(j)] * xhat[at] +
                      nb.value[static_cast<std::size_t>(j)];
      }
      // running stats track the unbiased batch variance
      const double unbiased = rows > 1 ? var * rows / (rows - 1) : var;
      state.running_mean[static_cast<std::size_t>(j)] =
          (1 - state.momentum) * state.running_mean[static_cast<std::size_t>(j)] +
          state.momentum * mean;
      state.running_var[static_cast<std::size_t>(j)] =
          (1 - state.momentum) * state.running_var[static_cast<std::size_t>(j)] +
          state.momentum * unbiased;
    }
  } else {
    for (int j = 0; j < cols; ++j) {
      invstd[j] = 1.0 / std::sqrt(state.running_var[static_cast<std::size_t>(j)] + state.eps);
      const double mean = state.running_mean[static_cast<std::size_t>(j)];
      for (int i = 0; i < rows; ++i) {
        const std::size_t at = static_cast<std::size_t>(i) * cols + j;
        xhat[at] = (na.value[at] - mean) * invstd[j];
        n.value[at] = ng.value[static_cast<std::size_t>(j)] * xhat[at] +
                      nb.value[static_cast<std::size_t>(j)];
      }
    }
  }
  verify_finite(n, "batch_norm");
  return Tensor(this, push(std::move(n)));
}

Tensor Tape::mse(Tensor pred, Tensor target) {
  const auto& np = node(pred.id_);
  const auto& nt = node(target.id_);
  require(np.shape == nt.shape, "mse: shape mismatch");
  require(np.shape.size() > 0, "mse: empty input");
  Node n;
  n.op = Op::Mse;
  n.shape = {1, 1};
  n.a = pred.id_;
  n.b = target.id_;
  n.requires_grad = np.requires_grad || nt.requires_grad;
  double s = 0;
  for (std::size_t i = 0; i < np.value.size(); ++i) {
    const double dv = np.value[i] - nt.value[i];
    s += dv * dv;
  }
  n.value = {s / static_cast<double>(np.value.size())};
  verify_finite(n, "mse");
  return Tensor(this, push(std::move(n)));
}

void Tape::ensure_grad(int id) {
  auto& n = node(id);
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
}

void Tape::backward(Tensor loss) {
  require(loss.tape_ == this, "backward: tensor from a different tape");
  auto& ln = node(loss.id_);
  require(ln.shape.size() == 1, "backward: loss must be scalar");
  for (auto& n : nodes_)
    if (n.requires_grad) n.grad.assign(n.value.size(), 0.0);
  ensure_grad(loss.id_);
  node(loss.id_).grad[0] = 1.0;
  for (int id = loss.id_; id >= 0; --id) {
    const auto& n = node(id);
    if (!n.requires_grad || n.op == Op::Leaf) continue;
    if (n.grad.empty()) continue;
    backward_node(id);
  }
}

void Tape::backward_node(int id) {
  Node& n = node(id);
  auto parent_grad = [&](int pid) -> std::vector<double>* {
    if (pid < 0) return nullptr;
    Node& p = node(pid);
    if (!p.requires_grad) return nullptr;
    if (p.grad.size() != p.value.size()) p.grad.assign(p.value.size(), 0.0);
    return &p.grad;
  };

  switch (n.op) {
    case Op::Leaf:
      break;
    case Op::Matmul: {
      const Node& pa = node(n.a);
      const Node& pb = node(n.b);
      const int rows = pa.shape.rows, inner = pa.shape.cols, cols = pb.shape.cols;
      if (auto* ga = parent_grad(n.a)) {
        // dA[i,k] += sum_j dC[i,j] * B[k,j]
        for (int i = 0; i < rows; ++i)
          for (int k = 0; k < inner; ++k) {
            const double* gc = n.grad.data() + static_cast<std::size_t>(i) * cols;
            const double* brow = pb.value.data() + static_cast<std::size_t>(k) * cols;
            double s = 0;
            for (int j = 0; j < cols; ++j) s += gc[j] * brow[j];
            (*ga)[static_cast<std::size_t>(i) * inner + k] += s;
          }
      }
      if (auto* gb = parent_grad(n.b)) {
        // dB[k,j] += sum_i A[i,k] * dC[i,j]
        for (int i = 0; i < rows; ++i)
          for (int k = 0; k < inner; ++k) {
            const double aik = pa.value[static_cast<std::size_t>(i) * inner + k];
            const double* gc = n.grad.data() + static_cast<std::size_t>(i) * cols;
            double* grow = gb->data() + static_cast<std::size_t>(k) * cols;
            for (int j = 0; j < cols; ++j) grow[j] += aik * gc[j];
          }
      }
      break;
    }
    case Op::Add: {
      if (auto* ga = parent_grad(n.a))
        for (std::size_t i = 0; i < n.grad.size(); ++i) (*ga)[i] += n.grad[i];
      if (auto* gb = parent_grad(n.b))
        for (std::size_t i = 0; i < n.grad.size(); ++i) (*gb)[i] += n.grad[i];
      break;
    }
    case Op::AddRow: {
      const int cols = n.shape.cols;
      if (auto* ga = parent_grad(n.a))
        for (std::size_t i = 0; i < n.grad.size(); ++i) (*ga)[i] += n.grad[i];
      if (auto* gb = parent_grad(n.b))
        for (int i = 0; i < n.shape.rows; ++i)
          for (int j = 0; j < cols; ++j)
            (*gb)[static_cast<std::size_t>(j)] += n.grad[static_cast<std::size_t>(i) * cols + j];
      break;
    }
    case Op::Mul: {
      const Node& pa = node(n.a);
      const Node& pb = node(n.b);
      if (auto* ga = parent_grad(n.a))
        for (std::size_t i = 0; i < n.grad.size(); ++i) (*ga)[i] += n.grad[i] * pb.value[i];
      if (auto* gb = parent_grad(n.b))
        for (std::size_t i = 0; i < n.grad.size(); ++i) (*gb)[i] += n.grad[i] * pa.value[i];
      break;
    }
    case Op::Scale: {
      if (auto* ga = parent_grad(n.a))
        for (std::size_t i = 0; i < n.grad.size(); ++i) (*ga)[i] += n.alpha * n.grad[i];
      break;
    }
    case Op::ScaleRows: {
      const Node& pa = node(n.a);
      const Node& pc = node(n.b);
      const int cols = n.shape.cols;
      if (auto* ga = parent_grad(n.a))
        for (int i = 0; i < n.shape.rows; ++i) {
          const double s = pc.value[static_cast<std::size_t>(i)];
          for (int j = 0; j < cols; ++j)
            (*ga)[static_cast<std::size_t>(i) * cols + j] +=
                s * n.grad[static_cast<std::size_t>(i) * cols + j];
        }
      if (auto* gc = parent_grad(n.b))
        for (int i = 0; i < n.shape.rows; ++i) {
          double s = 0;
          for (int j = 0; j < cols; ++j)
            s += n.grad[static_cast<std::size_t>(i) * cols + j] *
                 pa.value[static_cast<std::size_t>(i) * cols + j];
          (*gc)[static_cast<std::size_t>(i)] += s;
        }
      break;
    }
    case Op::ConcatCols: {
      const Node& pa = node(n.a);
      const Node& pb = node(n.b);
      const int ca = pa.shape.cols, cb = pb.shape.cols;
      if (auto* ga = parent_grad(n.a))
        for (int i = 0; i < n.shape.rows; ++i)
          for (int j = 0; j < ca; ++j)
            (*ga)[static_cast<std::size_t>(i) * ca + j] +=
                n.grad[static_cast<std::size_t>(i) * (ca + cb) + j];
      if (auto* gb = parent_grad(n.b))
        for (int i = 0; i < n.shape.rows; ++i)
          for (int j = 0; j < cb; ++j)
            (*gb)[static_cast<std::size_t>(i) * cb + j] +=
                n.grad[static_cast<std::size_t>(i) * (ca + cb) + ca + j];
      break;
    }
    case Op::Relu: {
      if (auto* ga = parent_grad(n.a))
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          if (n.value[i] > 0) (*ga)[i] += n.grad[i];
      break;
    }
    case Op::RowDot: {
      const Node& pa = node(n.a);
      const Node& pb = node(n.b);
      const int cols = pa.shape.cols;
      if (auto* ga = parent_grad(n.a))
        for (int i = 0; i < pa.shape.rows; ++i) {
          const double g = n.grad[static_cast<std::size_t>(i)];
          for (int j = 0; j < cols; ++j)
            (*ga)[static_cast<std::size_t>(i) * cols + j] +=
                g * pb.value[static_cast<std::size_t>(i) * cols + j];
        }
      if (auto* gb = parent_grad(n.b))
        for (int i = 0; i < pa.shape.rows; ++i) {
          const double g = n.grad[static_cast<std::size_t>(i)];
          for (int j = 0; j < cols; ++j)
            (*gb)[static_cast<std::size_t>(i) * cols + j] +=
                g * pa.value[static_cast<std::size_t>(i) * cols + j];
        }
      break;
    }
    case Op::MeanRows: {
      const Node& pa = node(n.a);
      if (auto* ga = parent_grad(n.a)) {
        const int rows = pa.shape.rows, cols = pa.shape.cols;
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < cols; ++j)
            (*ga)[static_cast<std::size_t>(i) * cols + j] += n.grad[static_cast<std::size_t>(j)] / rows;
      }
      break;
    }
    case Op::GroupMean: {
      const Node& pa = node(n.a);
      if (auto* ga = parent_grad(n.a)) {
        const int gs = pa.shape.rows / n.groups;
        const int cols = pa.shape.cols;
        for (int g = 0; g < n.groups; ++g)
          for (int r = 0; r < gs; ++r)
            for (int j = 0; j < cols; ++j)
              (*ga)[(static_cast<std::size_t>(g) * gs + r) * cols + j] +=
                  n.grad[static_cast<std::size_t>(g) * cols + j] / gs;
      }
      break;
    }
    case Op::Reshape: {
      if (auto* ga = parent_grad(n.a))
        for (std::size_t i = 0; i < n.grad.size(); ++i) (*ga)[i] += n.grad[i];
      break;
    }
    case Op::TileRows: {
      const Node& pa = node(n.a);
      if (auto* ga = parent_grad(n.a)) {
        const std::size_t block = pa.value.size();
        for (int t = 0; t < n.groups; ++t)
          for (std::size_t i = 0; i < block; ++i)
            (*ga)[i] += n.grad[static_cast<std::size_t>(t) * block + i];
      }
      break;
    }
    case Op::GatherRows: {
      if (auto* ga = parent_grad(n.a)) {
        const int cols = n.shape.cols;
        for (std::size_t r = 0; r < n.idx->size(); ++r) {
          double* dst = ga->data() + static_cast<std::size_t>((*n.idx)[r]) * cols;
          const double* src = n.grad.data() + r * cols;
          for (int j = 0; j < cols; ++j) dst[j] += src[j];
        }
      }
      break;
    }
    case Op::SegmentSum: {
      if (auto* ga = parent_grad(n.a)) {
        const int cols = n.shape.cols;
        for (std::size_t r = 0; r < n.idx->size(); ++r) {
          const double* src = n.grad.data() + static_cast<std::size_t>((*n.idx)[r]) * cols;
          double* dst = ga->data() + r * cols;
          for (int j = 0; j < cols; ++j) dst[j] += src[j];
        }
      }
      break;
    }
    case Op::SegmentSoftmax: {
      if (auto* ga = parent_grad(n.a)) {
        // ds_r = w_r * (dy_r - sum_{r' in seg} dy_{r'} w_{r'})
        std::vector<double> seg_dot(static_cast<std::size_t>(n.groups), 0.0);
        for (std::size_t r = 0; r < n.idx->size(); ++r)
          seg_dot[static_cast<std::size_t>((*n.idx)[r])] += n.grad[r] * n.value[r];
        for (std::size_t r = 0; r < n.idx->size(); ++r)
          (*ga)[r] += n.value[r] * (n.grad[r] - seg_dot[static_cast<std::size_t>((*n.idx)[r])]);
      }
      break;
    }
    case Op::BatchNorm: {
      const Node& pa = node(n.a);
      const Node& pg = node(n.b);
      const int rows = n.shape.rows, cols = n.shape.cols;
      const double* xhat = n.aux.data();
      const double* invstd = n.aux.data() + n.value.size();
      if (auto* gg = parent_grad(n.b))
        for (int j = 0; j < cols; ++j) {
          double s = 0;
          for (int i = 0; i < rows; ++i)
            s += n.grad[static_cast<std::size_t>(i) * cols + j] *
                 xhat[static_cast<std::size_t>(i) * cols + j];
          (*gg)[static_cast<std::size_t>(j)] += s;
        }
      if (auto* gb = parent_grad(n.c))
        for (int j = 0; j < cols; ++j) {
          double s = 0;
          for (int i = 0; i < rows; ++i) s += n.grad[static_cast<std::size_t>(i) * cols + j];
          (*gb)[static_cast<std::size_t>(j)] += s;
        }
      if (auto* ga = parent_grad(n.a)) {
        if (n.bn_training) {
          for (int j = 0; j < cols; ++j) {
            const double gamma = pg.value[static_cast<std::size_t>(j)];
            double sum_dxhat = 0, sum_dxhat_xhat = 0;
            for (int i = 0; i < rows; ++i) {
              const std::size_t at = static_cast<std::size_t>(i) * cols + j;
              const double dxhat = n.grad[at] * gamma;
              sum_dxhat += dxhat;
              sum_dxhat_xhat += dxhat * xhat[at];
            }
            for (int i = 0; i < rows; ++i) {
              const std::size_t at = static_cast<std::size_t>(i) * cols + j;
              const double dxhat = n.grad[at] * gamma;
              (*ga)[at] += invstd[j] / rows * (rows * dxhat - sum_dxhat - xhat[at] * sum_dxhat_xhat);
            }
          }
        } else {
          for (int j = 0; j < cols; ++j) {
            const double k = pg.value[static_cast<std::size_t>(j)] * invstd[j];
            for (int i = 0; i < rows; ++i) {
              const std::size_t at = static_cast<std::size_t>(i) * cols + j;
              (*ga)[at] += n.grad[at] * k;
            }
          }
        }
      }
      break;
    }
    case Op::Mse: {
      const Node& pp = node(n.a);
      const Node& pt = node(n.b);
      const double g = n.grad[0];
      const double inv = 2.0 / static_cast<double>(pp.value.size());
      if (auto* gp = parent_grad(n.a))
        for (std::size_t i = 0; i < pp.value.size(); ++i)
          (*gp)[i] += g * inv * (pp.value[i] - pt.value[i]);
      if (auto* gt = parent_grad(n.b))
        for (std::size_t i = 0; i < pp.value.size(); ++i)
          (*gt)[i] -= g * inv * (pp.value[i] - pt.value[i]);
      break;
    }
  }
}

void Tape::reset() { nodes_.clear(); }

void adam_init(AdamState& state, const std::vector<Parameter*>& params) {
  state.step = 0;
  state.m.clear();
  state.v.clear();
  for (const auto* p : params) {
    state.m.emplace_back(p->value.size(), 0.0);
    state.v.emplace_back(p->value.size(), 0.0);
  }
}

void adam_step(const std::vector<Parameter*>& params,
               const std::vector<std::span<const double>>& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: params/grads/state size mismatch");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k]->value;
    auto g = grads[k];
    if (g.size() != p.size()) throw std::invalid_argument("adam_step: gradient size mismatch");
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace figlab::diff
