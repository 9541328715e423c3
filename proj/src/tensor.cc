#include "compresslab/tensor.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "compresslab/random.h"

namespace compresslab {
namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (std::size_t dim : shape)
    if (dim == 0) throw ShapeError("tensor dimensions must be positive: " + shape_string(shape));
}

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                   shape_string(b));
}

void add_into(Tensor& target, const Tensor& source) {
  auto dst = target.values();
  auto src = source.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// out[n,m] += a[n,k] * b[k,m]
void gemm_nn(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
             std::size_t m) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double a_ip = a[i * k + p];
      const double* b_row = b + p * m;
      double* out_row = out + i * m;
      for (std::size_t j = 0; j < m; ++j) out_row[j] += a_ip * b_row[j];
    }
}

// out[n,m] += a[n,k] * b[m,k]^T
void gemm_nt(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
             std::size_t m) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      out[i * m + j] += acc;
    }
}

// out[k,m] += a[n,k]^T * b[n,m]
void gemm_tn(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
             std::size_t m) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double a_ip = a[i * k + p];
      const double* b_row = b + i * m;
      double* out_row = out + p * m;
      for (std::size_t j = 0; j < m; ++j) out_row[j] += a_ip * b_row[j];
    }
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(product(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != product(shape_))
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
}

std::size_t Tensor::cols() const {
  if (shape_.size() <= 1) return shape_.empty() ? 0 : 1;
  return data_.size() / shape_[0];
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

Tensor random_normal(const Shape& shape, double stddev, Rng& rng) {
  Tensor t(shape);
  for (double& x : t.values()) x = stddev * rng.normal();
  return t;
}

// ---------------------------------------------------------------------------
// Graph bookkeeping

Graph::Node& Graph::node(Var v) {
  if (v.index >= nodes_.size()) throw ShapeError("variable does not belong to this graph");
  return nodes_[v.index];
}

const Graph::Node& Graph::node(Var v) const {
  if (v.index >= nodes_.size()) throw ShapeError("variable does not belong to this graph");
  return nodes_[v.index];
}

const Tensor& Graph::value(Var v) const { return node(v).value; }

const Tensor& Graph::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) throw NumericError("no gradient recorded for node '" + n.op + "'");
  return n.grad;
}

bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }

Tensor* Graph::grad_sink(Var v) {
  Node& n = node(v);
  if (!n.requires_grad) return nullptr;
  if (n.grad.size() == 0) n.grad = Tensor(n.value.shape());
  return &n.grad;
}

Var Graph::push(const char* op, Tensor value, std::initializer_list<Var> inputs,
                BackwardFn backward) {
  return push(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
              std::move(backward));
}

Var Graph::push(const char* op, Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  if (backward_done_) throw NumericError("graph already consumed by backward; call reset()");
  if (!value.all_finite())
    throw NumericError(std::string(op) + ": produced a non-finite value");
  Node n;
  n.op = op;
  n.value = std::move(value);
  if (record_)
    for (Var input : inputs)
      if (node(input).requires_grad) n.requires_grad = true;
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

void Graph::backward(Var loss) {
  if (backward_done_) throw NumericError("backward called twice on the same graph");
  Node& root = node(loss);
  if (root.value.size() != 1)
    throw ShapeError("backward: loss must be a scalar, got " + shape_string(root.value.shape()));
  backward_done_ = true;
  if (!root.requires_grad) return;
  grad_sink(loss)->fill(1.0);
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0 || !n.backward) continue;
    if (!n.grad.all_finite())
      throw NumericError("non-finite gradient reached node '" + n.op + "'");
    n.backward(*this, n.grad);
  }
}

void Graph::reset() {
  nodes_.clear();
  backward_done_ = false;
}

// ---------------------------------------------------------------------------
// Leaves

Var Graph::constant(Tensor value) { return push("constant", std::move(value), {}, nullptr); }

Var Graph::param(Parameter& parameter) {
  if (parameter.grad.shape() != parameter.value.shape())
    parameter.grad = Tensor(parameter.value.shape());
  Var v = push("param", parameter.value, {}, nullptr);
  if (record_) {
    Node& n = nodes_[v.index];
    n.requires_grad = true;
    Parameter* target = &parameter;
    n.backward = [target](Graph&, const Tensor& g) { add_into(target->grad, g); };
  }
  return v;
}

Var Graph::param(const Parameter& parameter) { return constant(parameter.value); }

// ---------------------------------------------------------------------------
// Forward ops

Var Graph::gather_rows(Var x, std::span<const std::size_t> rows) {
  const Tensor& src = value(x);
  if (src.rank() != 2) throw ShapeError("gather_rows: expected a matrix, got " +
                                        shape_string(src.shape()));
  if (rows.empty()) throw ShapeError("gather_rows: empty row list");
  const std::size_t width = src.cols();
  Tensor out({rows.size(), width});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= src.rows())
      throw ShapeError("gather_rows: row " + std::to_string(rows[r]) + " out of range for " +
                       shape_string(src.shape()));
    std::copy_n(src.values().begin() + static_cast<std::ptrdiff_t>(rows[r] * width), width,
                out.values().begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  std::vector<std::size_t> index(rows.begin(), rows.end());
  return push("gather_rows", std::move(out), {x}, [x, index, width](Graph& g, const Tensor& dy) {
    Tensor* dx = g.grad_sink(x);
    if (!dx) return;
    for (std::size_t r = 0; r < index.size(); ++r)
      for (std::size_t c = 0; c < width; ++c) (*dx)[index[r] * width + c] += dy[r * width + c];
  });
}

Var Graph::embed(Var table, std::span<const std::size_t> ids) { return gather_rows(table, ids); }

Var Graph::embed(Parameter& table, std::span<const std::size_t> ids) {
  if (!record_) return embed(std::as_const(table), ids);
  return gather_rows(param(table), ids);
}

Var Graph::embed(const Parameter& table, std::span<const std::size_t> ids) {
  const Tensor& src = table.value;
  if (src.rank() != 2) throw ShapeError("embed: table must be a matrix");
  if (ids.empty()) throw ShapeError("embed: empty id list");
  const std::size_t width = src.cols();
  Tensor out({ids.size(), width});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= src.rows())
      throw ShapeError("embed: id " + std::to_string(ids[r]) + " out of range for table " +
                       table.name);
    for (std::size_t c = 0; c < width; ++c) out.at(r, c) = src.at(ids[r], c);
  }
  return constant(std::move(out));
}

Var Graph::matmul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows())
    shape_mismatch("matmul", A.shape(), B.shape());
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  Tensor out({n, m});
  gemm_nn(A.values().data(), B.values().data(), out.values().data(), n, k, m);
  return push("matmul", std::move(out), {a, b}, [a, b, n, k, m](Graph& g, const Tensor& dy) {
    if (Tensor* da = g.grad_sink(a))
      gemm_nt(dy.values().data(), g.value(b).values().data(), da->values().data(), n, m, k);
    if (Tensor* db = g.grad_sink(b))
      gemm_tn(g.value(a).values().data(), dy.values().data(), db->values().data(), n, k, m);
  });
}

Var Graph::matmul_transposed(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.cols())
    shape_mismatch("matmul_transposed", A.shape(), B.shape());
  const std::size_t n = A.rows(), k = A.cols(), m = B.rows();
  Tensor out({n, m});
  gemm_nt(A.values().data(), B.values().data(), out.values().data(), n, k, m);
  return push("matmul_transposed", std::move(out), {a, b},
              [a, b, n, k, m](Graph& g, const Tensor& dy) {
                // dA = dY B, dB = dY^T A
                if (Tensor* da = g.grad_sink(a))
                  gemm_nn(dy.values().data(), g.value(b).values().data(), da->values().data(),
                          n, m, k);
                if (Tensor* db = g.grad_sink(b))
                  gemm_tn(dy.values().data(), g.value(a).values().data(), db->values().data(),
                          n, m, k);
              });
}

Var Graph::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.shape() != B.shape()) shape_mismatch("add", A.shape(), B.shape());
  Tensor out = A;
  add_into(out, B);
  return push("add", std::move(out), {a, b}, [a, b](Graph& g, const Tensor& dy) {
    if (Tensor* da = g.grad_sink(a)) add_into(*da, dy);
    if (Tensor* db = g.grad_sink(b)) add_into(*db, dy);
  });
}

Var Graph::add_row(Var x, Var row) {
  const Tensor& X = value(x);
  const Tensor& R = value(row);
  if (X.rank() != 2 || R.size() != X.cols()) shape_mismatch("add_row", X.shape(), R.shape());
  const std::size_t n = X.rows(), m = X.cols();
  Tensor out = X;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.at(i, j) += R[j];
  return push("add_row", std::move(out), {x, row}, [x, row, n, m](Graph& g, const Tensor& dy) {
    if (Tensor* dx = g.grad_sink(x)) add_into(*dx, dy);
    if (Tensor* dr = g.grad_sink(row))
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) (*dr)[j] += dy[i * m + j];
  });
}

Var Graph::scale(Var x, double factor) {
  Tensor out = value(x);
  for (double& v : out.values()) v *= factor;
  return push("scale", std::move(out), {x}, [x, factor](Graph& g, const Tensor& dy) {
    if (Tensor* dx = g.grad_sink(x))
      for (std::size_t i = 0; i < dy.size(); ++i) (*dx)[i] += factor * dy[i];
  });
}

Var Graph::linear(Var x, Var weight, Var bias) { return add_row(matmul(x, weight), bias); }

Var Graph::sigmoid(Var x) {
  Tensor out = value(x);
  for (double& v : out.values())
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  Var y{nodes_.size()};
  return push("sigmoid", std::move(out), {x}, [x, y](Graph& g, const Tensor& dy) {
    Tensor* dx = g.grad_sink(x);
    if (!dx) return;
    const Tensor& s = g.value(y);
    for (std::size_t i = 0; i < dy.size(); ++i) (*dx)[i] += dy[i] * s[i] * (1.0 - s[i]);
  });
}

Var Graph::softmax_rows(Var x) {
  const Tensor& X = value(x);
  if (X.rank() != 2) throw ShapeError("softmax_rows: expected a matrix, got " +
                                      shape_string(X.shape()));
  const std::size_t n = X.rows(), m = X.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    double peak = X.at(i, 0);
    for (std::size_t j = 1; j < m; ++j) peak = std::max(peak, X.at(i, j));
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) total += out.at(i, j) = std::exp(X.at(i, j) - peak);
    for (std::size_t j = 0; j < m; ++j) out.at(i, j) /= total;
  }
  Var y{nodes_.size()};
  return push("softmax_rows", std::move(out), {x}, [x, y, n, m](Graph& g, const Tensor& dy) {
    Tensor* dx = g.grad_sink(x);
    if (!dx) return;
    const Tensor& s = g.value(y);
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < m; ++j) dot += dy[i * m + j] * s[i * m + j];
      for (std::size_t j = 0; j < m; ++j) (*dx)[i * m + j] += s[i * m + j] * (dy[i * m + j] - dot);
    }
  });
}

Var Graph::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& X = value(x);
  const Tensor& G = value(gain);
  const Tensor& B = value(bias);
  if (X.rank() != 2 || G.size() != X.cols() || B.size() != X.cols())
    shape_mismatch("layer_norm", X.shape(), G.shape());
  const std::size_t n = X.rows(), m = X.cols();
  Tensor normalized({n, m});
  std::vector<double> inv_std(n);
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < m; ++j) mean += X.at(i, j);
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t j = 0; j < m; ++j) var += (X.at(i, j) - mean) * (X.at(i, j) - mean);
    var /= static_cast<double>(m);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < m; ++j) {
      normalized.at(i, j) = (X.at(i, j) - mean) * inv_std[i];
      out.at(i, j) = G[j] * normalized.at(i, j) + B[j];
    }
  }
  return push("layer_norm", std::move(out), {x, gain, bias},
              [x, gain, bias, n, m, normalized = std::move(normalized),
               inv_std = std::move(inv_std)](Graph& g, const Tensor& dy) {
                const Tensor& G = g.value(gain);
                if (Tensor* dg = g.grad_sink(gain))
                  for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j)
                      (*dg)[j] += dy[i * m + j] * normalized.at(i, j);
                if (Tensor* db = g.grad_sink(bias))
                  for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j) (*db)[j] += dy[i * m + j];
                Tensor* dx = g.grad_sink(x);
                if (!dx) return;
                const double width = static_cast<double>(m);
                for (std::size_t i = 0; i < n; ++i) {
                  double sum_d = 0.0, sum_dx = 0.0;
                  for (std::size_t j = 0; j < m; ++j) {
                    const double d = dy[i * m + j] * G[j];
                    sum_d += d;
                    sum_dx += d * normalized.at(i, j);
                  }
                  for (std::size_t j = 0; j < m; ++j) {
                    const double d = dy[i * m + j] * G[j];
                    (*dx)[i * m + j] +=
                        inv_std[i] / width * (width * d - sum_d - normalized.at(i, j) * sum_dx);
                  }
                }
              });
}

Var Graph::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t n = value(parts[0]).rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var part : parts) {
    const Tensor& t = value(part);
    if (t.rank() != 2 || t.rows() != n) shape_mismatch("concat_cols", value(parts[0]).shape(), t.shape());
    widths.push_back(t.cols());
    total += t.cols();
  }
  Tensor out({n, total});
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& t = value(parts[p]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < widths[p]; ++j) out.at(i, offset + j) = t.at(i, j);
    offset += widths[p];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push("concat_cols", std::move(out), parts,
              [inputs, widths, n, total](Graph& g, const Tensor& dy) {
                std::size_t offset = 0;
                for (std::size_t p = 0; p < inputs.size(); ++p) {
                  if (Tensor* dx = g.grad_sink(inputs[p]))
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t j = 0; j < widths[p]; ++j)
                        (*dx)[i * widths[p] + j] += dy[i * total + offset + j];
                  offset += widths[p];
                }
              });
}

Var Graph::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t m = value(parts[0]).cols();
  std::vector<std::size_t> sizes;
  std::size_t rows = 0;
  for (Var part : parts) {
    const Tensor& t = value(part);
    if (t.rank() != 2 || t.cols() != m) shape_mismatch("concat_rows", value(parts[0]).shape(), t.shape());
    sizes.push_back(t.size());
    rows += t.rows();
  }
  std::vector<double> data;
  data.reserve(rows * m);
  for (Var part : parts) {
    auto v = value(part).values();
    data.insert(data.end(), v.begin(), v.end());
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push("concat_rows", Tensor({rows, m}, std::move(data)), parts,
              [inputs, sizes](Graph& g, const Tensor& dy) {
                std::size_t offset = 0;
                for (std::size_t p = 0; p < inputs.size(); ++p) {
                  if (Tensor* dx = g.grad_sink(inputs[p]))
                    for (std::size_t i = 0; i < sizes[p]; ++i) (*dx)[i] += dy[offset + i];
                  offset += sizes[p];
                }
              });
}

Var Graph::sum(Var x) {
  const Tensor& X = value(x);
  double total = 0.0;
  for (double v : X.values()) total += v;
  return push("sum", Tensor::scalar(total), {x}, [x](Graph& g, const Tensor& dy) {
    if (Tensor* dx = g.grad_sink(x))
      for (double& v : dx->values()) v += dy[0];
  });
}

Var Graph::bce_loss(Var scores, const Tensor& labels, const Tensor& mask) {
  const Tensor& S = value(scores);
  if (S.size() != labels.size() || S.size() != mask.size())
    throw ShapeError("bce_loss: scores " + shape_string(S.shape()) + ", labels " +
                     shape_string(labels.shape()) + ", mask " + shape_string(mask.shape()));
  double count = 0.0;
  for (double m : mask.values()) count += m;
  if (!(count > 0.0)) throw ShapeError("bce_loss: empty mask");
  double total = 0.0;
  for (std::size_t i = 0; i < S.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double s = std::clamp(S[i], kScoreClamp, 1.0 - kScoreClamp);
    const double y = labels[i];
    total += mask[i] * -(y * std::log(s) + (1.0 - y) * std::log(1.0 - s));
  }
  return push("bce_loss", Tensor::scalar(total / count), {scores},
              [scores, labels, mask, count](Graph& g, const Tensor& dy) {
                Tensor* ds = g.grad_sink(scores);
                if (!ds) return;
                const Tensor& S = g.value(scores);
                for (std::size_t i = 0; i < S.size(); ++i) {
                  if (mask[i] == 0.0) continue;
                  const double s = S[i];
                  if (s < kScoreClamp || s > 1.0 - kScoreClamp) continue;
                  const double y = labels[i];
                  (*ds)[i] += dy[0] * mask[i] / count * (-(y / s) + (1.0 - y) / (1.0 - s));
                }
              });
}

// ---------------------------------------------------------------------------
// Attention block

AttentionBlock::AttentionBlock(const std::string& prefix, std::size_t dim, Rng& rng) {
  const double stddev = 1.0 / std::sqrt(static_cast<double>(dim));
  query_ = Parameter(prefix + ".query", random_normal({dim, dim}, stddev, rng));
  key_ = Parameter(prefix + ".key", random_normal({dim, dim}, stddev, rng));
  value_ = Parameter(prefix + ".value", random_normal({dim, dim}, stddev, rng));
  output_ = Parameter(prefix + ".output", random_normal({dim, dim}, stddev, rng));
  norm_gain_ = Parameter(prefix + ".norm_gain", Tensor({dim}, 1.0));
  norm_bias_ = Parameter(prefix + ".norm_bias", Tensor({dim}, 0.0));
}

template <typename Self>
Var AttentionBlock::forward_impl(Self& self, Graph& graph, Var x) {
  const double dim = static_cast<double>(graph.value(x).cols());
  Var q = graph.matmul(x, graph.param(self.query_));
  Var k = graph.matmul(x, graph.param(self.key_));
  Var v = graph.matmul(x, graph.param(self.value_));
  Var weights = graph.softmax_rows(graph.scale(graph.matmul_transposed(q, k), 1.0 / std::sqrt(dim)));
  Var mixed = graph.matmul(graph.matmul(weights, v), graph.param(self.output_));
  return graph.layer_norm(graph.add(x, mixed), graph.param(self.norm_gain_),
                          graph.param(self.norm_bias_));
}

Var AttentionBlock::forward(Graph& graph, Var x) { return forward_impl(*this, graph, x); }
Var AttentionBlock::forward(Graph& graph, Var x) const { return forward_impl(*this, graph, x); }

std::vector<Parameter*> AttentionBlock::parameters() {
  return {&query_, &key_, &value_, &output_, &norm_gain_, &norm_bias_};
}

std::vector<const Parameter*> AttentionBlock::parameters() const {
  return {&query_, &key_, &value_, &output_, &norm_gain_, &norm_bias_};
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(std::vector<Parameter*> parameters, AdamConfig config)
    : parameters_(std::move(parameters)), config_(config) {
  for (Parameter* p : parameters_) {
    first_moment_.emplace_back(p->value.size(), 0.0);
    second_moment_.emplace_back(p->value.size(), 0.0);
    if (p->grad.shape() != p->value.shape()) p->grad = Tensor(p->value.shape());
  }
}

void Adam::step(bool zero_grad) {
  for (const Parameter* p : parameters_)
    if (!p->grad.all_finite())
      throw NumericError("non-finite gradient in parameter '" + p->name + "'");
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < parameters_.size(); ++k) {
    Parameter& p = *parameters_[k];
    auto& m = first_moment_[k];
    auto& v = second_moment_[k];
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double g = p.grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.value[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
    if (zero_grad) p.zero_grad();
  }
}

}  // namespace compresslab
