// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "latte/tensor.hpp"

namespace latte::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool has_grad = false;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward;  // pull own grad into parents
};

void add_grad(Node& n, const Tensor& g);

// Handle to a node in the dynamic computation graph. Child nodes own their
// parents via shared_ptr, so a graph lives exactly as long as some Var
// referencing its sinks (or a Parameter referencing its leaves).
class Var {
public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  static Var leaf(Tensor value, bool requires_grad = false, const char* op = "leaf");
  static Var constant(Tensor value) { return leaf(std::move(value), false, "const"); }
  static Var scalar(double v) { return constant(Tensor::scalar(v)); }

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const;
  bool has_grad() const { return node_->has_grad; }
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad();

  const Shape& shape() const { return node_->value.shape(); }
  int ndim() const { return node_->value.ndim(); }
  int64_t dim(int i) const { return node_->value.dim(i); }
  int64_t numel() const { return node_->value.numel(); }
  double item() const { return node_->value.item(); }

  NodePtr node() const { return node_; }

private:
  NodePtr node_;
};

Var make_op(const char* op, Tensor value, std::vector<Var> parents,
            std::function<void(Node&)> backward);

// Reverse pass from a finite scalar loss. Throws (naming the first non-finite
// intermediate in forward order) if the loss is not finite.
void backward(const Var& loss);

// ---- arithmetic ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var add(const Var& a, double s);
Var mul(const Var& a, double s);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& a) { return neg(a); }
inline Var operator+(const Var& a, double s) { return add(a, s); }
inline Var operator-(const Var& a, double s) { return add(a, -s); }
inline Var operator*(const Var& a, double s) { return mul(a, s); }
inline Var operator*(double s, const Var& a) { return mul(a, s); }
inline Var operator/(const Var& a, double s) { return mul(a, 1.0 / s); }

// ---- structure ----
Var matmul(const Var& a, const Var& b);
Var transpose_last2(const Var& a);
Var reshape(const Var& a, Shape shape);
Var slice(const Var& a, int axis, int64_t start, int64_t len);
Var concat(const std::vector<Var>& parts, int axis);
Var take_rows(const Var& a, std::vector<int64_t> idx);
// gather along axis 1 of (B, L, A): idx has B*W entries in [0, L)
Var gather_axis1(const Var& a, std::vector<int64_t> idx, int64_t windows);
// windowed sum along axis 1 of (B, L, A): out[:, i, :] = sum over windows[i]
Var window_sum_axis1(const Var& a, std::vector<std::vector<int64_t>> windows);
Var detach(const Var& a);

// ---- reductions ----
Var sum(const Var& a, std::vector<int> axes, bool keepdim);
Var mean(const Var& a, std::vector<int> axes, bool keepdim);
Var sum_all(const Var& a);
Var mean_all(const Var& a);

// ---- pointwise ----
Var sqrt(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var cosh(const Var& a);
Var sinh(const Var& a);
Var relu(const Var& a);
// acosh(max(x, 1)); zero gradient in the clamped region
Var acosh_clamped(const Var& a);
// cosh(sqrt(u)) for u >= 0; smooth at u = 0
Var cosh_sqrt(const Var& a);
// sinh(sqrt(u))/sqrt(u) for u >= 0; smooth at u = 0
Var sinhc_sqrt(const Var& a);
// acosh(b)/sqrt(b^2-1) with b clamped to >= 1; smooth at b = 1
Var acosh_ratio(const Var& a);

// ---- nn primitives ----
Var conv1d(const Var& x, const Var& w, int pad);
Var conv2d(const Var& x, const Var& w, int padH, int padW);
Var softmax_lastdim(const Var& a);
Var log_softmax_lastdim(const Var& a);
// out[i] = a[i, labels[i]] for rank-2 a
Var take_class(const Var& a, std::vector<int> labels);

// ---- trainable leaf ----
class Parameter {
public:
  Parameter() = default;
  Parameter(std::string name, Tensor init, bool trainable = true);

  const std::string& name() const { return name_; }
  Var var() const { return Var(node_); }
  Tensor& value() { return node_->value; }
  const Tensor& value() const { return node_->value; }
  const Tensor& grad() const;
  bool has_grad() const { return node_ && node_->has_grad; }
  bool trainable() const { return node_ && node_->requires_grad; }
  void set_trainable(bool t) { node_->requires_grad = t; }
  void zero_grad();
  bool defined() const { return static_cast<bool>(node_); }

private:
  std::string name_;
  NodePtr node_;
};

}  // namespace latte::ad
