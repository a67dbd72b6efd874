#pragma once
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace figlab::diff {

struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Shape {
  int rows = 0;
  int cols = 0;
  long size() const { return static_cast<long>(rows) * cols; }
  bool operator==(const Shape&) const = default;
};

// Per-channel running statistics for batch normalization.
struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNormState(int channels)
      : running_mean(static_cast<std::size_t>(channels), 0.0),
        running_var(static_cast<std::size_t>(channels), 1.0) {}
  int channels() const { return static_cast<int>(running_mean.size()); }
};

class Tape;

// Lightweight handle into a tape node. Valid until Tape::reset().
class Tensor {
 public:
  Tensor() = default;
  bool defined() const { return tape_ != nullptr; }
  const Shape& shape() const;
  int rows() const { return shape().rows; }
  int cols() const { return shape().cols; }
  std::span<const double> values() const;
  // Gradient of the last backward() target w.r.t. this node; zeros if the
  // node did not require grad.
  std::span<const double> grad() const;
  double value_at(int r, int c) const;
  double scalar() const;
  bool requires_grad() const;

 private:
  friend class Tape;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

using IndexVec = std::shared_ptr<const std::vector<int>>;

// Define-by-run tape over dense row-major double matrices. Nodes are in
// topological order by construction; backward walks them once in
// reverse. Every forward op traps non-finite outputs.
class Tape {
 public:
  Tensor leaf(Shape shape, std::vector<double> values, bool requires_grad);
  Tensor constant(Shape shape, std::vector<double> values);

  Tensor matmul(Tensor a, Tensor b);
  Tensor add(Tensor a, Tensor b);
  Tensor add_row(Tensor a, Tensor row);      // row: 1 x C broadcast over rows
  Tensor mul(Tensor a, Tensor b);            // elementwise
  Tensor scale(Tensor a, double alpha);
  Tensor scale_rows(Tensor a, Tensor col);   // col: N x 1 broadcast over cols
  Tensor concat_cols(Tensor a, Tensor b);
  Tensor relu(Tensor a);
  Tensor row_dot(Tensor a, Tensor b);        // N x C pair -> N x 1
  Tensor mean_over_rows(Tensor a);           // N x C -> 1 x C
  // Mean over equal contiguous row groups: (G*s) x C -> G x C.
  Tensor group_mean_rows(Tensor a, int num_groups);
  Tensor reshape(Tensor a, Shape shape);
  Tensor tile_rows(Tensor a, int times);
  Tensor gather_rows(Tensor a, IndexVec idx);
  Tensor segment_sum(Tensor a, IndexVec segments, int num_segments);
  // Softmax of an N x 1 score column within each segment; empty segments
  // contribute nothing. Max-subtracted for stability.
  Tensor segment_softmax(Tensor scores, IndexVec segments, int num_segments);
  // Train mode normalizes with batch statistics over all rows and
  // updates running stats; eval mode applies the running stats.
  Tensor batch_norm(Tensor a, Tensor gamma, Tensor beta, BatchNormState& state, bool training);
  Tensor mse(Tensor pred, Tensor target);    // scalar (1 x 1)

  // Accumulates exact reverse-mode gradients of a scalar node into every
  // grad-requiring node reachable from it.
  void backward(Tensor loss);

  void reset();
  std::size_t num_nodes() const { return nodes_.size(); }

  bool check_finite = true;

 private:
  friend class Tensor;

  enum class Op : std::uint8_t {
    Leaf, Matmul, Add, AddRow, Mul, Scale, ScaleRows, ConcatCols, Relu, RowDot,
    MeanRows, GroupMean, Reshape, TileRows, GatherRows, SegmentSum,
    SegmentSoftmax, BatchNorm, Mse
  };

  struct Node {
    Op op = Op::Leaf;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    int a = -1, b = -1, c = -1;
    double alpha = 0;
    int groups = 0;
    IndexVec idx;
    std::vector<double> aux;      // op-specific saved state (e.g. BN x-hat)
    BatchNormState* bn = nullptr;
    bool bn_training = false;
  };

  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  int push(Node n);
  void verify_finite(const Node& n, const char* opname) const;
  void ensure_grad(int id);
  void backward_node(int id);

  std::vector<Node> nodes_;
};

// Named, persistent parameter buffer; tape leaves are created from it
// each pass and gradients read back after backward().
struct Parameter {
  std::string name;
  Shape shape;
  std::vector<double> value;

  Parameter() = default;
  Parameter(std::string name, Shape shape)
      : name(std::move(name)), shape(shape),
        value(static_cast<std::size_t>(shape.size()), 0.0) {}
};

struct AdamState {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

void adam_init(AdamState& state, const std::vector<Parameter*>& params);

// One bias-corrected Adam update; grads aligned with params.
void adam_step(const std::vector<Parameter*>& params,
               const std::vector<std::span<const double>>& grads, AdamState& state);

}  // namespace figlab::diff
