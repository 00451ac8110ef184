// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0

#include "skewgrad/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace skewgrad::ad {

std::string Shape::str() const {
  std::ostringstream os;
  os << "[" << rows << "x" << cols << "]";
  return os.str();
}

Shape shape_of(const Matrix& m) {
  return {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
}

// ---------------------------------------------------------------------------
// Tensor

Shape Tensor::shape() const { return shape_of(value()); }

const Matrix& Tensor::value() const {
  if (!graph_) throw GraphError("value() on an unbound tensor");
  return graph_->node(*this).value;
}

Real Tensor::item() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("item() requires a 1x1 tensor, got " + shape_of(v).str());
  }
  return v(0, 0);
}

bool Tensor::requires_grad() const { return graph_ && graph_->node(*this).requires_grad; }

bool Tensor::has_grad() const { return graph_ && graph_->node(*this).has_grad; }

const Matrix& Tensor::grad() const {
  if (!has_grad()) throw GraphError("tensor has no gradient (node " + std::to_string(id_) + ")");
  return graph_->node(*this).grad;
}

Matrix Tensor::grad_or_zero() const {
  if (has_grad()) return grad();
  const Matrix& v = value();
  return Matrix::Zero(v.rows(), v.cols());
}

// ---------------------------------------------------------------------------
// Graph bookkeeping

Tensor Graph::push(Node node) {
  if (backward_done_) throw GraphError("graph is closed: backward() already ran");
  nodes_.push_back(std::move(node));
  return Tensor(this, nodes_.size() - 1);
}

const Graph::Node& Graph::node(const Tensor& t) const { return nodes_.at(t.id_); }

void Graph::check_owned(const Tensor& t, const char* op) const {
  if (t.graph_ != this) {
    throw GraphError(std::string(op) + ": operand belongs to a different graph");
  }
}

Tensor Graph::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Tensor Graph::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

void Graph::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.has_grad) {
    n.grad += g;
  } else {
    n.grad = g;
    n.has_grad = true;
  }
}

// ---------------------------------------------------------------------------
// Forward primitives

namespace {

void require_same_or_scalar(const Matrix& a, const Matrix& b, const char* op) {
  const Shape sa = shape_of(a), sb = shape_of(b);
  if (sa == sb || sa.is_scalar() || sb.is_scalar()) return;
  throw ShapeError(std::string(op) + ": shape mismatch " + sa.str() + " vs " + sb.str());
}

}  // namespace

Tensor Graph::add(const Tensor& a, const Tensor& b) {
  check_owned(a, "add");
  check_owned(b, "add");
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  require_same_or_scalar(va, vb, "add");
  Node n;
  n.op = OpKind::Add;
  n.inputs = {a.id_, b.id_};
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  if (shape_of(va) == shape_of(vb)) {
    n.value = va + vb;
  } else if (shape_of(va).is_scalar()) {
    n.value = vb.array() + va(0, 0);
  } else {
    n.value = va.array() + vb(0, 0);
  }
  return push(std::move(n));
}

Tensor Graph::mul(const Tensor& a, const Tensor& b) {
  check_owned(a, "mul_elementwise");
  check_owned(b, "mul_elementwise");
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  require_same_or_scalar(va, vb, "mul_elementwise");
  Node n;
  n.op = OpKind::Mul;
  n.inputs = {a.id_, b.id_};
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  if (shape_of(va) == shape_of(vb)) {
    n.value = va.cwiseProduct(vb);
  } else if (shape_of(va).is_scalar()) {
    n.value = vb * va(0, 0);
  } else {
    n.value = va * vb(0, 0);
  }
  return push(std::move(n));
}

Tensor Graph::scale(const Tensor& a, Real c) {
  check_owned(a, "scale");
  Node n;
  n.op = OpKind::Scale;
  n.inputs = {a.id_};
  n.factor = c;
  n.requires_grad = node(a).requires_grad;
  n.value = node(a).value * c;
  return push(std::move(n));
}

Tensor Graph::matmul(const Tensor& a, const Tensor& b) {
  check_owned(a, "matmul");
  check_owned(b, "matmul");
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  if (va.cols() != vb.rows()) {
    throw ShapeError("matmul: shape mismatch " + shape_of(va).str() + " vs " + shape_of(vb).str());
  }
  Node n;
  n.op = OpKind::MatMul;
  n.inputs = {a.id_, b.id_};
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.value.noalias() = va * vb;
  return push(std::move(n));
}

Tensor Graph::relu(const Tensor& a) {
  check_owned(a, "relu");
  Node n;
  n.op = OpKind::Relu;
  n.inputs = {a.id_};
  n.requires_grad = node(a).requires_grad;
  n.value = node(a).value.cwiseMax(0.0);
  return push(std::move(n));
}

Tensor Graph::concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  Eigen::Index rows = 0;
  const Eigen::Index cols = node(parts.front()).value.cols();
  Node n;
  n.op = OpKind::ConcatRows;
  for (const Tensor& p : parts) {
    check_owned(p, "concat_rows");
    const Matrix& v = node(p).value;
    if (v.cols() != cols) {
      throw ShapeError("concat_rows: shape mismatch " + shape_of(node(parts.front()).value).str() +
                       " vs " + shape_of(v).str());
    }
    n.inputs.push_back(p.id_);
    n.index.push_back(rows);
    n.requires_grad = n.requires_grad || node(p).requires_grad;
    rows += v.rows();
  }
  n.value.resize(rows, cols);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Matrix& v = node(parts[i]).value;
    n.value.middleRows(n.index[i], v.rows()) = v;
  }
  return push(std::move(n));
}

Tensor Graph::max_over_rows(const Tensor& a) {
  check_owned(a, "max_over_rows");
  const Matrix& v = node(a).value;
  if (v.rows() == 0) throw ShapeError("max_over_rows: empty input " + shape_of(v).str());
  Node n;
  n.op = OpKind::MaxOverRows;
  n.inputs = {a.id_};
  n.requires_grad = node(a).requires_grad;
  n.value = v.row(0);
  n.index.assign(static_cast<std::size_t>(v.cols()), 0);
  for (Eigen::Index r = 1; r < v.rows(); ++r) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      // Strict > keeps the lowest row on ties.
      if (v(r, c) > n.value(0, c)) {
        n.value(0, c) = v(r, c);
        n.index[static_cast<std::size_t>(c)] = r;
      }
    }
  }
  return push(std::move(n));
}

Tensor Graph::mean_over_rows(const Tensor& a) {
  check_owned(a, "mean_over_rows");
  const Matrix& v = node(a).value;
  if (v.rows() == 0) throw ShapeError("mean_over_rows: empty input " + shape_of(v).str());
  Node n;
  n.op = OpKind::MeanOverRows;
  n.inputs = {a.id_};
  n.requires_grad = node(a).requires_grad;
  n.value = v.colwise().sum() / static_cast<Real>(v.rows());
  return push(std::move(n));
}

Tensor Graph::sum(const Tensor& a) {
  check_owned(a, "sum");
  Node n;
  n.op = OpKind::Sum;
  n.inputs = {a.id_};
  n.requires_grad = node(a).requires_grad;
  n.value = Matrix::Constant(1, 1, node(a).value.sum());
  return push(std::move(n));
}

Tensor Graph::softmax_cross_entropy_per_sample(const Tensor& logits, std::span<const int> labels) {
  check_owned(logits, "softmax_cross_entropy");
  const Matrix& z = node(logits).value;
  if (z.rows() == 0) throw ShapeError("softmax_cross_entropy: empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != z.rows()) {
    throw ShapeError("softmax_cross_entropy: logits " + shape_of(z).str() + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  Node n;
  n.op = OpKind::SoftmaxCrossEntropy;
  n.inputs = {logits.id_};
  n.requires_grad = node(logits).requires_grad;
  n.labels.assign(labels.begin(), labels.end());
  n.saved.resize(z.rows(), z.cols());
  n.value.resize(z.rows(), 1);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const int label = labels[static_cast<std::size_t>(r)];
    if (label < 0 || label >= z.cols()) {
      throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(label) +
                              " out of range [0, " + std::to_string(z.cols()) + ")");
    }
    const Real m = z.row(r).maxCoeff();
    const auto shifted = (z.row(r).array() - m).eval();
    const Real log_norm = std::log(shifted.exp().sum());
    n.saved.row(r) = (shifted - log_norm).exp().matrix();
    n.value(r, 0) = log_norm - shifted(label);
  }
  return push(std::move(n));
}

// ---------------------------------------------------------------------------
// Reverse pass

void Graph::backward(const Tensor& loss) {
  check_owned(loss, "backward");
  if (backward_done_) throw GraphError("backward() already ran on this graph");
  const Matrix& lv = node(loss).value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + shape_of(lv).str());
  }
  backward_done_ = true;
  if (!nodes_[loss.id_].requires_grad) return;
  accumulate(loss.id_, Matrix::Ones(1, 1));

  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || n.op == OpKind::Leaf) continue;
    const Matrix& g = n.grad;
    switch (n.op) {
      case OpKind::Leaf:
        break;
      case OpKind::Add: {
        for (std::size_t k = 0; k < 2; ++k) {
          const std::size_t in = n.inputs[k];
          if (!nodes_[in].requires_grad) continue;
          if (shape_of(nodes_[in].value) == shape_of(g)) {
            accumulate(in, g);
          } else {
            accumulate(in, Matrix::Constant(1, 1, g.sum()));
          }
        }
        break;
      }
      case OpKind::Mul: {
        const std::size_t ia = n.inputs[0], ib = n.inputs[1];
        const Matrix& va = nodes_[ia].value;
        const Matrix& vb = nodes_[ib].value;
        const bool same = shape_of(va) == shape_of(vb);
        if (nodes_[ia].requires_grad) {
          if (same) {
            accumulate(ia, g.cwiseProduct(vb));
          } else if (shape_of(va).is_scalar()) {
            accumulate(ia, Matrix::Constant(1, 1, g.cwiseProduct(vb).sum()));
          } else {
            accumulate(ia, g * vb(0, 0));
          }
        }
        if (nodes_[ib].requires_grad) {
          if (same) {
            accumulate(ib, g.cwiseProduct(va));
          } else if (shape_of(vb).is_scalar()) {
            accumulate(ib, Matrix::Constant(1, 1, g.cwiseProduct(va).sum()));
          } else {
            accumulate(ib, g * va(0, 0));
          }
        }
        break;
      }
      case OpKind::Scale:
        accumulate(n.inputs[0], g * n.factor);
        break;
      case OpKind::MatMul: {
        const std::size_t ia = n.inputs[0], ib = n.inputs[1];
        if (nodes_[ia].requires_grad) {
          Matrix ga;
          ga.noalias() = g * nodes_[ib].value.transpose();
          accumulate(ia, ga);
        }
        if (nodes_[ib].requires_grad) {
          Matrix gb;
          gb.noalias() = nodes_[ia].value.transpose() * g;
          accumulate(ib, gb);
        }
        break;
      }
      case OpKind::Relu: {
        const Matrix masked = (n.value.array() > 0.0).select(g, 0.0);
        accumulate(n.inputs[0], masked);
        break;
      }
      case OpKind::ConcatRows: {
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const std::size_t in = n.inputs[k];
          if (!nodes_[in].requires_grad) continue;
          accumulate(in, g.middleRows(n.index[k], nodes_[in].value.rows()));
        }
        break;
      }
      case OpKind::MaxOverRows: {
        const std::size_t in = n.inputs[0];
        Matrix gi = Matrix::Zero(nodes_[in].value.rows(), nodes_[in].value.cols());
        for (std::size_t c = 0; c < n.index.size(); ++c) {
          gi(n.index[c], static_cast<Eigen::Index>(c)) = g(0, static_cast<Eigen::Index>(c));
        }
        accumulate(in, gi);
        break;
      }
      case OpKind::MeanOverRows: {
        const std::size_t in = n.inputs[0];
        const Eigen::Index rows = nodes_[in].value.rows();
        accumulate(in, g.replicate(rows, 1) / static_cast<Real>(rows));
        break;
      }
      case OpKind::Sum: {
        const std::size_t in = n.inputs[0];
        accumulate(in, Matrix::Constant(nodes_[in].value.rows(), nodes_[in].value.cols(), g(0, 0)));
        break;
      }
      case OpKind::SoftmaxCrossEntropy: {
        Matrix gi = n.saved;
        for (Eigen::Index r = 0; r < gi.rows(); ++r) {
          gi(r, n.labels[static_cast<std::size_t>(r)]) -= 1.0;
          gi.row(r) *= g(r, 0);
        }
        accumulate(n.inputs[0], gi);
        break;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Free functions

namespace {
Graph& owner(const Tensor& t, const char* op) {
  if (!t.valid()) throw GraphError(std::string(op) + ": unbound tensor");
  return *t.graph();
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return owner(a, "add").add(a, b); }
Tensor mul_elementwise(const Tensor& a, const Tensor& b) { return owner(a, "mul_elementwise").mul(a, b); }
Tensor scale(const Tensor& a, Real c) { return owner(a, "scale").scale(a, c); }
Tensor matmul(const Tensor& a, const Tensor& b) { return owner(a, "matmul").matmul(a, b); }
Tensor relu(const Tensor& a) { return owner(a, "relu").relu(a); }
Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  return owner(parts.front(), "concat_rows").concat_rows(parts);
}
Tensor concat_rows(std::initializer_list<Tensor> parts) {
  return concat_rows(std::span<const Tensor>(parts.begin(), parts.size()));
}
Tensor max_over_rows(const Tensor& a) { return owner(a, "max_over_rows").max_over_rows(a); }
Tensor mean_over_rows(const Tensor& a) { return owner(a, "mean_over_rows").mean_over_rows(a); }
Tensor sum(const Tensor& a) { return owner(a, "sum").sum(a); }
Tensor softmax_cross_entropy_per_sample(const Tensor& logits, std::span<const int> labels) {
  return owner(logits, "softmax_cross_entropy").softmax_cross_entropy_per_sample(logits, labels);
}
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  return mean_over_rows(softmax_cross_entropy_per_sample(logits, labels));
}

// ---------------------------------------------------------------------------

std::uint64_t Graph::branch_signature() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  for (const Node& n : nodes_) {
    if (n.op == OpKind::Relu) {
      for (Eigen::Index i = 0; i < n.value.size(); ++i) mix(n.value.data()[i] > 0.0 ? 1 : 0);
    } else if (n.op == OpKind::MaxOverRows) {
      for (Eigen::Index r : n.index) mix(static_cast<std::uint64_t>(r));
    }
  }
  return h;
}

GradCheckReport finite_difference_check(const ScalarFn& f, const Matrix& x, Real step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_difference_check: step must be > 0");
  GradCheckReport report;
  std::uint64_t base_signature = 0;
  {
    Graph g;
    const Tensor xv = g.variable(x);
    const Tensor y = f(g, xv);
    g.backward(y);
    report.analytic = xv.grad_or_zero();
    base_signature = g.branch_signature();
  }
  auto eval = [&](const Matrix& at, bool& same_branch) {
    Graph g;
    const Real v = f(g, g.constant(at)).item();
    same_branch = same_branch && g.branch_signature() == base_signature;
    return v;
  };
  report.numeric.resize(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    bool smooth = true;
    const Real orig = probe.data()[i];
    probe.data()[i] = orig + step;
    const Real up = eval(probe, smooth);
    probe.data()[i] = orig - step;
    const Real down = eval(probe, smooth);
    probe.data()[i] = orig;
    const Real numeric = (up - down) / (2.0 * step);
    report.numeric.data()[i] = numeric;
    const Real a = report.analytic.data()[i];
    const Real err = std::abs(a - numeric) / (std::abs(a) + 1e-12);
    if (err > report.max_relative_error) {
      report.max_relative_error = err;
      report.worst_index = static_cast<std::size_t>(i);
    }
    if (smooth) {
      report.max_relative_error_smooth = std::max(report.max_relative_error_smooth, err);
    } else {
      ++report.kink_coordinates;
    }
  }
  return report;
}

}  // namespace skewgrad::ad
