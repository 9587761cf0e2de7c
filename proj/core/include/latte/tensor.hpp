// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace latte {

using Shape = std::vector<int64_t>;

// Dense row-major float64 tensor with value semantics. Rank 0 is a scalar.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double v);
  static Tensor scalar(double v) { return full({}, v); }

  const Shape& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return numel_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double item() const;
  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  Tensor reshaped(Shape shape) const;
  bool all_finite() const;
  void fill(double v);

  std::string shape_str() const;

private:
  Shape shape_;
  std::vector<double> data_;
  int64_t numel_ = 1;
};

int64_t shape_numel(const Shape& s);
std::string shape_to_string(const Shape& s);

// ---- kernels (forward + the pieces backward passes need) ----

// numpy-style broadcast of two shapes; throws on incompatibility
Shape broadcast_shapes(const Shape& a, const Shape& b);

Tensor ew_binary(const Tensor& a, const Tensor& b, const std::function<double(double, double)>& f);
Tensor ew_unary(const Tensor& a, const std::function<double(double)>& f);

// dedicated kernels for the hot elementwise ops (no per-element indirection)
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
// sum `g` down to `target` by reducing broadcast axes
Tensor reduce_to_shape(const Tensor& g, const Shape& target);

// batched matmul over the last two axes; leading axes broadcast
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose_last2(const Tensor& a);

Tensor concat(const std::vector<const Tensor*>& parts, int axis);
Tensor slice(const Tensor& a, int axis, int64_t start, int64_t len);
// adds `g` into `out` at [start, start+len) along `axis` (scatter for slice backward)
void slice_add_into(Tensor& out, const Tensor& g, int axis, int64_t start);

Tensor sum_axes(const Tensor& a, const std::vector<int>& axes, bool keepdim);
Tensor broadcast_to(const Tensor& a, const Shape& shape);

// select rows along axis 0: out[i] = a[idx[i]]
Tensor take_rows(const Tensor& a, const std::vector<int64_t>& idx);
void take_rows_add_into(Tensor& out, const Tensor& g, const std::vector<int64_t>& idx);

// 1-D convolution: x (B, Cin, L), w (Cout, Cin, k) -> (B, Cout, Lout), zero padding
Tensor conv1d(const Tensor& x, const Tensor& w, int pad);
void conv1d_backward(const Tensor& g, const Tensor& x, const Tensor& w, int pad,
                     Tensor* gx, Tensor* gw);

// 2-D convolution: x (B, Cin, H, W), w (Cout, Cin, kh, kw), zero padding
Tensor conv2d(const Tensor& x, const Tensor& w, int padH, int padW);
void conv2d_backward(const Tensor& g, const Tensor& x, const Tensor& w, int padH, int padW,
                     Tensor* gx, Tensor* gw);

Tensor softmax_lastdim(const Tensor& a);
Tensor log_softmax_lastdim(const Tensor& a);

}  // namespace latte
