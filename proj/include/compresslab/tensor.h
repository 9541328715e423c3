#ifndef COMPRESSLAB_TENSOR_H_
#define COMPRESSLAB_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace compresslab {

class Rng;

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN or Inf reached a tensor, or backward was misused.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. Rank 1 tensors behave as a single column
// where a matrix view is needed.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t row, std::size_t col) { return data_[row * cols() + col]; }
  double at(std::size_t row, std::size_t col) const { return data_[row * cols() + col]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double value);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// A named trainable tensor with its accumulated gradient.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad.fill(0.0); }
};

// Xavier-style normal initialisation, scaled by 1/sqrt(fan_in).
Tensor random_normal(const Shape& shape, double stddev, Rng& rng);

// Handle to a node in a Graph.
struct Var {
  std::size_t index = 0;
};

// Tape of one forward pass. Nodes are appended in execution order, which is
// a topological order, so backward walks the tape in reverse.
class Graph {
 public:
  explicit Graph(bool record_gradients = true) : record_(record_gradients) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // Trainable leaf: backward accumulates into parameter.grad.
  Var param(Parameter& parameter);
  // Frozen leaf: a copy of the value, no gradient.
  Var param(const Parameter& parameter);

  // Rows of an embedding table, one per id.
  Var embed(Var table, std::span<const std::size_t> ids);
  Var embed(Parameter& table, std::span<const std::size_t> ids);
  Var embed(const Parameter& table, std::span<const std::size_t> ids);

  Var matmul(Var a, Var b);
  // a * b^T
  Var matmul_transposed(Var a, Var b);
  Var add(Var a, Var b);
  // Adds a vector of length cols(x) to every row of x.
  Var add_row(Var x, Var row);
  Var scale(Var x, double factor);
  Var linear(Var x, Var weight, Var bias);
  Var sigmoid(Var x);
  Var softmax_rows(Var x);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  Var gather_rows(Var x, std::span<const std::size_t> rows);
  Var sum(Var x);

  // Mean over unmasked positions of the binary cross-entropy, with scores
  // clamped to [kScoreClamp, 1 - kScoreClamp].
  Var bce_loss(Var scores, const Tensor& labels, const Tensor& mask);

  static constexpr double kScoreClamp = 1e-7;

  // Populates gradients of every node reachable from the scalar loss and
  // accumulates them into the trainable parameters. Once per graph.
  void backward(Var loss);
  void reset();

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }
  bool recording() const { return record_; }

 private:
  using BackwardFn = std::function<void(Graph&, const Tensor& out_grad)>;

  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var push(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var push(const char* op, Tensor value, std::span<const Var> inputs, BackwardFn backward);
  Node& node(Var v);
  const Node& node(Var v) const;
  // Gradient buffer for v, or nullptr when v does not need one.
  Tensor* grad_sink(Var v);

  std::vector<Node> nodes_;
  bool record_;
  bool backward_done_ = false;
};

// Single-head scaled dot-product self-attention with a residual connection
// followed by layer normalisation:
//   LN(x + softmax(x Wq (x Wk)^T / sqrt(d)) x Wv Wo)
class AttentionBlock {
 public:
  AttentionBlock() = default;
  AttentionBlock(const std::string& prefix, std::size_t dim, Rng& rng);

  Var forward(Graph& graph, Var x);
  Var forward(Graph& graph, Var x) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  template <typename Self>
  static Var forward_impl(Self& self, Graph& graph, Var x);

  Parameter query_, key_, value_, output_, norm_gain_, norm_bias_;
};

// Convenience wrapper: attention_block(g, x, block) == block.forward(g, x).
inline Var attention_block(Graph& graph, Var x, AttentionBlock& block) {
  return block.forward(graph, x);
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimiser with bias correction.
class Adam {
 public:
  Adam(std::vector<Parameter*> parameters, AdamConfig config = {});

  // Throws NumericError naming the first parameter with a non-finite grad;
  // no parameter is touched in that case.
  void step(bool zero_grad = true);
  std::int64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<Parameter*> parameters_;
  AdamConfig config_;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
  std::int64_t steps_ = 0;
};

}  // namespace compresslab

#endif  // COMPRESSLAB_TENSOR_H_
