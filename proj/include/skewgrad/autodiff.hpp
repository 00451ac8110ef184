// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0
//
// Tape-based reverse-mode automatic differentiation over dense row-major
// matrices. A Graph records every primitive in append order; backward()
// walks the tape once in reverse.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace skewgrad::ad {

using Real = double;
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Rows x cols. Scalars are 1x1.
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  std::string str() const;
  friend bool operator==(const Shape&, const Shape&) = default;
};

Shape shape_of(const Matrix& m);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class OpKind {
  Leaf,
  Add,
  Mul,
  Scale,
  MatMul,
  Relu,
  ConcatRows,
  MaxOverRows,
  MeanOverRows,
  Sum,
  SoftmaxCrossEntropy,
};

class Graph;

/// Handle to one node of a Graph. Cheap to copy; only valid while the
/// owning Graph is alive.
class Tensor {
 public:
  Tensor() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph* graph() const { return graph_; }
  std::size_t node_id() const { return id_; }

  Shape shape() const;
  const Matrix& value() const;
  Real item() const;  // value of a 1x1 tensor
  bool requires_grad() const;
  bool has_grad() const;
  /// Gradient after backward(). Throws GraphError when none was produced.
  const Matrix& grad() const;
  /// Gradient, or zeros of the value's shape when the node was unreachable.
  Matrix grad_or_zero() const;

 private:
  friend class Graph;
  Tensor(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = delete;
  Graph& operator=(Graph&&) = delete;

  Tensor constant(Matrix value);
  Tensor variable(Matrix value);
  Tensor scalar(Real v) { return constant(Matrix::Constant(1, 1, v)); }
  Tensor ones(std::size_t rows, std::size_t cols) {
    return constant(Matrix::Ones(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)));
  }

  std::size_t size() const { return nodes_.size(); }
  OpKind op(std::size_t id) const { return nodes_.at(id).op; }

  /// Reverse pass seeded with d(loss)/d(loss) = 1. One call per graph.
  void backward(const Tensor& loss);
  bool backward_done() const { return backward_done_; }
  /// Hash of every piecewise choice made so far: relu signs and max-pool
  /// argmax rows. Equal signatures mean the same linear piece.
  std::uint64_t branch_signature() const;

  // Primitive constructors; the free functions below forward here.
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, Real c);
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor relu(const Tensor& a);
  Tensor concat_rows(std::span<const Tensor> parts);
  Tensor max_over_rows(const Tensor& a);
  Tensor mean_over_rows(const Tensor& a);
  Tensor sum(const Tensor& a);
  Tensor softmax_cross_entropy_per_sample(const Tensor& logits, std::span<const int> labels);

 private:
  friend class Tensor;

  struct Node {
    OpKind op = OpKind::Leaf;
    std::vector<std::size_t> inputs;
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    Real factor = 0.0;                    // Scale
    std::vector<Eigen::Index> index;      // MaxOverRows argmax, ConcatRows offsets
    Matrix saved;                         // softmax probabilities
    std::vector<int> labels;              // cross-entropy targets
  };

  Tensor push(Node node);
  const Node& node(const Tensor& t) const;
  void check_owned(const Tensor& t, const char* op) const;
  void accumulate(std::size_t id, const Matrix& g);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul_elementwise(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, Real c);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_rows(std::initializer_list<Tensor> parts);
/// N x D -> 1 x D. Backward routes to the argmax row; ties go to the lowest row.
Tensor max_over_rows(const Tensor& a);
Tensor mean_over_rows(const Tensor& a);
Tensor sum(const Tensor& a);
/// B x K logits -> B x 1 of -log softmax(logits)[label], max-subtracted.
Tensor softmax_cross_entropy_per_sample(const Tensor& logits, std::span<const int> labels);
/// Batch mean of the per-sample cross-entropy, as a 1x1 tensor.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Builds a scalar from a variable x inside the given graph.
using ScalarFn = std::function<Tensor(Graph&, const Tensor& x)>;

struct GradCheckReport {
  Real max_relative_error = 0.0;
  std::size_t worst_index = 0;
  /// Same maximum over coordinates whose +-step probes stay on the branch
  /// of x (branch_signature unchanged); kink_coordinates counts the rest.
  Real max_relative_error_smooth = 0.0;
  std::size_t kink_coordinates = 0;
  Matrix analytic;
  Matrix numeric;
};

/// Compares backward() against central differences at every coordinate of x.
/// Error per coordinate is |analytic - numeric| / (|analytic| + 1e-12).
GradCheckReport finite_difference_check(const ScalarFn& f, const Matrix& x, Real step);

}  // namespace skewgrad::ad
