// SPDX-License-Identifier: Apache-2.0
#include "latte/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace latte {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_to_string(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  numel_ = shape_numel(shape_);
  if (numel_ < 0) throw std::invalid_argument("negative tensor dimension");
  data_.assign(static_cast<size_t>(numel_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  numel_ = shape_numel(shape_);
  if (static_cast<int64_t>(data_.size()) != numel_)
    throw std::invalid_argument("tensor data size does not match shape " + shape_to_string(shape_));
}

Tensor Tensor::full(Shape shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

double Tensor::item() const {
  if (numel_ != 1) throw std::invalid_argument("item() on tensor with numel " + std::to_string(numel_));
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel_)
    throw std::invalid_argument("reshape " + shape_str() + " -> " + shape_to_string(shape));
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  size_t n = std::max(a.size(), b.size());
  Shape out(n);
  for (size_t i = 0; i < n; ++i) {
    int64_t da = i < n - a.size() ? 1 : a[i - (n - a.size())];
    int64_t db = i < n - b.size() ? 1 : b[i - (n - b.size())];
    if (da != db && da != 1 && db != 1)
      throw std::invalid_argument("cannot broadcast " + shape_to_string(a) + " with " + shape_to_string(b));
    out[i] = std::max(da, db);
  }
  return out;
}

namespace {

// strides of `shape` right-aligned against `out`, 0 on broadcast axes
std::vector<int64_t> padded_strides(const Shape& shape, const Shape& out) {
  std::vector<int64_t> st(out.size(), 0);
  int64_t stride = 1;
  size_t off = out.size() - shape.size();
  for (size_t i = shape.size(); i-- > 0;) {
    st[off + i] = (shape[i] == 1 && out[off + i] != 1) ? 0 : stride;
    stride *= shape[i];
  }
  return st;
}

template <typename F>
void strided_binary_loop(const double* a, const double* b, double* o, const Shape& out,
                         const std::vector<int64_t>& sa, const std::vector<int64_t>& sb, F&& f) {
  size_t nd = out.size();
  if (nd == 0) {
    o[0] = f(a[0], b[0]);
    return;
  }
  // recurse over leading dims, tight loop on the innermost
  std::function<void(size_t, const double*, const double*, double*&)> rec =
      [&](size_t dim, const double* pa, const double* pb, double*& po) {
        if (dim == nd - 1) {
          int64_t n = out[dim], ia = sa[dim], ib = sb[dim];
          if (ia == 1 && ib == 1) {
            for (int64_t i = 0; i < n; ++i) *po++ = f(pa[i], pb[i]);
          } else if (ia == 1 && ib == 0) {
            double bv = pb[0];
            for (int64_t i = 0; i < n; ++i) *po++ = f(pa[i], bv);
          } else if (ia == 0 && ib == 1) {
            double av = pa[0];
            for (int64_t i = 0; i < n; ++i) *po++ = f(av, pb[i]);
          } else {
            for (int64_t i = 0; i < n; ++i) *po++ = f(pa[i * ia], pb[i * ib]);
          }
          return;
        }
        for (int64_t i = 0; i < out[dim]; ++i) rec(dim + 1, pa + i * sa[dim], pb + i * sb[dim], po);
      };
  double* po = o;
  rec(0, a, b, po);
}

template <typename F>
Tensor ew_binary_impl(const Tensor& a, const Tensor& b, F&& f) {
  if (a.same_shape(b)) {
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = f(pa[i], pb[i]);
    return out;
  }
  Shape os = broadcast_shapes(a.shape(), b.shape());
  Tensor out(os);
  auto sa = padded_strides(a.shape(), os);
  auto sb = padded_strides(b.shape(), os);
  strided_binary_loop(a.data(), b.data(), out.data(), os, sa, sb, f);
  return out;
}

}  // namespace

Tensor ew_binary(const Tensor& a, const Tensor& b, const std::function<double(double, double)>& f) {
  return ew_binary_impl(a, b, f);
}

Tensor ew_unary(const Tensor& a, const std::function<double(double)>& f) {
  Tensor out(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) po[i] = f(pa[i]);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) { return ew_binary_impl(a, b, [](double x, double y) { return x + y; }); }
Tensor sub(const Tensor& a, const Tensor& b) { return ew_binary_impl(a, b, [](double x, double y) { return x - y; }); }
Tensor mul(const Tensor& a, const Tensor& b) { return ew_binary_impl(a, b, [](double x, double y) { return x * y; }); }
Tensor div(const Tensor& a, const Tensor& b) { return ew_binary_impl(a, b, [](double x, double y) { return x / y; }); }

Tensor add_scalar(const Tensor& a, double s) {
  Tensor out(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = pa[i] + s;
  return out;
}

Tensor mul_scalar(const Tensor& a, double s) {
  Tensor out(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = pa[i] * s;
  return out;
}

Tensor reduce_to_shape(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  // right-align target against g, sum over axes that were broadcast
  std::vector<int> axes;
  size_t off = g.shape().size() - target.size();
  for (size_t i = 0; i < g.shape().size(); ++i) {
    if (i < off) {
      axes.push_back(static_cast<int>(i));
    } else if (target[i - off] == 1 && g.shape()[i] != 1) {
      axes.push_back(static_cast<int>(i));
    }
  }
  Tensor r = sum_axes(g, axes, /*keepdim=*/true);
  return r.reshaped(target);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() < 2 || b.ndim() < 2) throw std::invalid_argument("matmul requires rank >= 2");
  int64_t m = a.dim(a.ndim() - 2), k = a.dim(a.ndim() - 1);
  int64_t k2 = b.dim(b.ndim() - 2), n = b.dim(b.ndim() - 1);
  if (k != k2)
    throw std::invalid_argument("matmul inner dims: " + a.shape_str() + " x " + b.shape_str());
  Shape la(a.shape().begin(), a.shape().end() - 2);
  Shape lb(b.shape().begin(), b.shape().end() - 2);
  Shape lead = broadcast_shapes(la, lb);
  int64_t nbatch = shape_numel(lead);

  Shape os = lead;
  os.push_back(m);
  os.push_back(n);
  Tensor out(os);

  auto sa = padded_strides(la, lead);
  auto sb = padded_strides(lb, lead);
  // walk batch index as odometer, tracking flat offsets into a and b
  std::vector<int64_t> idx(lead.size(), 0);
  int64_t offa = 0, offb = 0;
  const double* pa0 = a.data();
  const double* pb0 = b.data();
  double* po = out.data();
  for (int64_t batch = 0; batch < nbatch; ++batch) {
    const double* pa = pa0 + offa * m * k;
    const double* pb = pb0 + offb * k * n;
    double* pc = po + batch * m * n;
    for (int64_t i = 0; i < m; ++i) {
      double* crow = pc + i * n;
      for (int64_t kk = 0; kk < k; ++kk) {
        double av = pa[i * k + kk];
        if (av == 0.0) continue;
        const double* brow = pb + kk * n;
        for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
    // advance odometer
    for (size_t d = lead.size(); d-- > 0;) {
      idx[d]++;
      offa += sa[d];
      offb += sb[d];
      if (idx[d] < lead[d]) break;
      offa -= sa[d] * lead[d];
      offb -= sb[d] * lead[d];
      idx[d] = 0;
    }
  }
  return out;
}

Tensor transpose_last2(const Tensor& a) {
  if (a.ndim() < 2) throw std::invalid_argument("transpose_last2 requires rank >= 2");
  Shape os = a.shape();
  std::swap(os[os.size() - 1], os[os.size() - 2]);
  int64_t m = a.dim(a.ndim() - 2), n = a.dim(a.ndim() - 1);
  int64_t nbatch = a.numel() / (m * n);
  Tensor out(os);
  const double* pa = a.data();
  double* po = out.data();
  for (int64_t b = 0; b < nbatch; ++b) {
    const double* src = pa + b * m * n;
    double* dst = po + b * m * n;
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < n; ++j) dst[j * m + i] = src[i * n + j];
  }
  return out;
}

Tensor concat(const std::vector<const Tensor*>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat of zero tensors");
  const Shape& s0 = parts[0]->shape();
  if (axis < 0 || axis >= static_cast<int>(s0.size())) throw std::invalid_argument("concat axis out of range");
  Shape os = s0;
  int64_t total = 0;
  for (const Tensor* p : parts) {
    if (p->ndim() != static_cast<int>(s0.size())) throw std::invalid_argument("concat rank mismatch");
    for (int i = 0; i < p->ndim(); ++i)
      if (i != axis && p->dim(i) != s0[static_cast<size_t>(i)])
        throw std::invalid_argument("concat shape mismatch: " + p->shape_str());
    total += p->dim(axis);
  }
  os[static_cast<size_t>(axis)] = total;
  Tensor out(os);

  int64_t outer = 1;
  for (int i = 0; i < axis; ++i) outer *= s0[static_cast<size_t>(i)];
  int64_t inner = 1;
  for (size_t i = static_cast<size_t>(axis) + 1; i < s0.size(); ++i) inner *= s0[i];

  int64_t out_row = total * inner;
  int64_t dst_off = 0;
  for (const Tensor* p : parts) {
    int64_t rows = p->dim(axis) * inner;
    const double* src = p->data();
    for (int64_t o = 0; o < outer; ++o)
      std::memcpy(out.data() + o * out_row + dst_off, src + o * rows, static_cast<size_t>(rows) * sizeof(double));
    dst_off += rows;
  }
  return out;
}

Tensor slice(const Tensor& a, int axis, int64_t start, int64_t len) {
  if (axis < 0 || axis >= a.ndim()) throw std::invalid_argument("slice axis out of range");
  if (start < 0 || len < 0 || start + len > a.dim(axis))
    throw std::invalid_argument("slice bounds out of range for " + a.shape_str());
  Shape os = a.shape();
  os[static_cast<size_t>(axis)] = len;
  Tensor out(os);
  int64_t outer = 1;
  for (int i = 0; i < axis; ++i) outer *= a.dim(i);
  int64_t inner = 1;
  for (int i = axis + 1; i < a.ndim(); ++i) inner *= a.dim(i);
  int64_t src_row = a.dim(axis) * inner;
  int64_t dst_row = len * inner;
  for (int64_t o = 0; o < outer; ++o)
    std::memcpy(out.data() + o * dst_row, a.data() + o * src_row + start * inner,
                static_cast<size_t>(dst_row) * sizeof(double));
  return out;
}

void slice_add_into(Tensor& out, const Tensor& g, int axis, int64_t start) {
  int64_t len = g.dim(axis);
  int64_t outer = 1;
  for (int i = 0; i < axis; ++i) outer *= out.dim(i);
  int64_t inner = 1;
  for (int i = axis + 1; i < out.ndim(); ++i) inner *= out.dim(i);
  int64_t dst_row = out.dim(axis) * inner;
  int64_t src_row = len * inner;
  const double* src = g.data();
  double* dst = out.data();
  for (int64_t o = 0; o < outer; ++o) {
    double* d = dst + o * dst_row + start * inner;
    const double* s = src + o * src_row;
    for (int64_t i = 0; i < src_row; ++i) d[i] += s[i];
  }
}

Tensor sum_axes(const Tensor& a, const std::vector<int>& axes, bool keepdim) {
  std::vector<bool> reduced(static_cast<size_t>(a.ndim()), false);
  for (int ax : axes) {
    if (ax < 0 || ax >= a.ndim()) throw std::invalid_argument("sum axis out of range");
    reduced[static_cast<size_t>(ax)] = true;
  }
  Shape kept;  // keepdim shape
  for (int i = 0; i < a.ndim(); ++i) kept.push_back(reduced[static_cast<size_t>(i)] ? 1 : a.dim(i));
  Tensor out(kept);

  // output strides aligned to input dims (0 on reduced)
  std::vector<int64_t> ost(static_cast<size_t>(a.ndim()), 0);
  int64_t stride = 1;
  for (int i = a.ndim(); i-- > 0;) {
    ost[static_cast<size_t>(i)] = reduced[static_cast<size_t>(i)] ? 0 : stride;
    stride *= kept[static_cast<size_t>(i)];
  }
  const double* pa = a.data();
  double* po = out.data();
  if (a.ndim() == 0) {
    po[0] = pa[0];
  } else {
    std::vector<int64_t> idx(static_cast<size_t>(a.ndim()), 0);
    int64_t off = 0;
    int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) {
      po[off] += pa[i];
      for (size_t d = static_cast<size_t>(a.ndim()); d-- > 0;) {
        idx[d]++;
        off += ost[d];
        if (idx[d] < a.dim(static_cast<int>(d))) break;
        off -= ost[d] * a.dim(static_cast<int>(d));
        idx[d] = 0;
      }
    }
  }
  if (keepdim) return out;
  Shape squeezed;
  for (int i = 0; i < a.ndim(); ++i)
    if (!reduced[static_cast<size_t>(i)]) squeezed.push_back(a.dim(i));
  return out.reshaped(squeezed);
}

Tensor broadcast_to(const Tensor& a, const Shape& shape) {
  if (a.shape() == shape) return a;
  Shape check = broadcast_shapes(a.shape(), shape);
  if (check != shape)
    throw std::invalid_argument("cannot broadcast " + a.shape_str() + " to " + shape_to_string(shape));
  Tensor out(shape);
  auto sa = padded_strides(a.shape(), shape);
  std::vector<int64_t> idx(shape.size(), 0);
  const double* pa = a.data();
  double* po = out.data();
  int64_t off = 0;
  int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) {
    po[i] = pa[off];
    for (size_t d = shape.size(); d-- > 0;) {
      idx[d]++;
      off += sa[d];
      if (idx[d] < shape[d]) break;
      off -= sa[d] * shape[d];
      idx[d] = 0;
    }
  }
  return out;
}

Tensor take_rows(const Tensor& a, const std::vector<int64_t>& idx) {
  if (a.ndim() < 1) throw std::invalid_argument("take_rows requires rank >= 1");
  int64_t row = a.numel() / a.dim(0);
  Shape os = a.shape();
  os[0] = static_cast<int64_t>(idx.size());
  Tensor out(os);
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= a.dim(0)) throw std::invalid_argument("take_rows index out of range");
    std::memcpy(out.data() + static_cast<int64_t>(i) * row, a.data() + idx[i] * row,
                static_cast<size_t>(row) * sizeof(double));
  }
  return out;
}

void take_rows_add_into(Tensor& out, const Tensor& g, const std::vector<int64_t>& idx) {
  int64_t row = out.numel() / out.dim(0);
  for (size_t i = 0; i < idx.size(); ++i) {
    double* dst = out.data() + idx[i] * row;
    const double* src = g.data() + static_cast<int64_t>(i) * row;
    for (int64_t j = 0; j < row; ++j) dst[j] += src[j];
  }
}

Tensor conv1d(const Tensor& x, const Tensor& w, int pad) {
  if (x.ndim() != 3 || w.ndim() != 3) throw std::invalid_argument("conv1d expects (B,Cin,L) and (Cout,Cin,k)");
  int64_t B = x.dim(0), Cin = x.dim(1), L = x.dim(2);
  int64_t Cout = w.dim(0), K = w.dim(2);
  if (w.dim(1) != Cin) throw std::invalid_argument("conv1d channel mismatch");
  int64_t Lout = L + 2 * pad - K + 1;
  if (Lout < 1) throw std::invalid_argument("conv1d kernel larger than padded length");
  Tensor out({B, Cout, Lout});
  const double* px = x.data();
  const double* pw = w.data();
  double* po = out.data();
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t co = 0; co < Cout; ++co) {
      double* orow = po + (b * Cout + co) * Lout;
      for (int64_t ci = 0; ci < Cin; ++ci) {
        const double* xrow = px + (b * Cin + ci) * L;
        const double* wrow = pw + (co * Cin + ci) * K;
        for (int64_t kk = 0; kk < K; ++kk) {
          double wv = wrow[kk];
          if (wv == 0.0) continue;
          int64_t shift = kk - pad;  // x index = t + shift
          int64_t t0 = std::max<int64_t>(0, -shift);
          int64_t t1 = std::min<int64_t>(Lout, L - shift);
          const double* xs = xrow + shift;
          for (int64_t t = t0; t < t1; ++t) orow[t] += wv * xs[t];
        }
      }
    }
  }
  return out;
}

void conv1d_backward(const Tensor& g, const Tensor& x, const Tensor& w, int pad, Tensor* gx, Tensor* gw) {
  int64_t B = x.dim(0), Cin = x.dim(1), L = x.dim(2);
  int64_t Cout = w.dim(0), K = w.dim(2);
  int64_t Lout = g.dim(2);
  const double* pg = g.data();
  const double* px = x.data();
  const double* pw = w.data();
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t co = 0; co < Cout; ++co) {
      const double* grow = pg + (b * Cout + co) * Lout;
      for (int64_t ci = 0; ci < Cin; ++ci) {
        const double* xrow = px + (b * Cin + ci) * L;
        const double* wrow = pw + (co * Cin + ci) * K;
        double* gxrow = gx ? gx->data() + (b * Cin + ci) * L : nullptr;
        double* gwrow = gw ? gw->data() + (co * Cin + ci) * K : nullptr;
        for (int64_t kk = 0; kk < K; ++kk) {
          int64_t shift = kk - pad;
          int64_t t0 = std::max<int64_t>(0, -shift);
          int64_t t1 = std::min<int64_t>(Lout, L - shift);
          if (gxrow) {
            double wv = wrow[kk];
            if (wv != 0.0) {
              double* d = gxrow + shift;
              for (int64_t t = t0; t < t1; ++t) d[t] += wv * grow[t];
            }
          }
          if (gwrow) {
            double acc = 0.0;
            const double* xs = xrow + shift;
            for (int64_t t = t0; t < t1; ++t) acc += grow[t] * xs[t];
            gwrow[kk] += acc;
          }
        }
      }
    }
  }
}

Tensor conv2d(const Tensor& x, const Tensor& w, int padH, int padW) {
  if (x.ndim() != 4 || w.ndim() != 4) throw std::invalid_argument("conv2d expects (B,Cin,H,W) and (Cout,Cin,kh,kw)");
  int64_t B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  int64_t Cout = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  if (w.dim(1) != Cin) throw std::invalid_argument("conv2d channel mismatch");
  int64_t Hout = H + 2 * padH - KH + 1;
  int64_t Wout = W + 2 * padW - KW + 1;
  if (Hout < 1 || Wout < 1) throw std::invalid_argument("conv2d kernel larger than padded input");
  Tensor out({B, Cout, Hout, Wout});
  const double* px = x.data();
  const double* pw = w.data();
  double* po = out.data();
  for (int64_t b = 0; b < B; ++b)
    for (int64_t co = 0; co < Cout; ++co) {
      double* omap = po + (b * Cout + co) * Hout * Wout;
      for (int64_t ci = 0; ci < Cin; ++ci) {
        const double* xmap = px + (b * Cin + ci) * H * W;
        const double* wmap = pw + (co * Cin + ci) * KH * KW;
        for (int64_t kh = 0; kh < KH; ++kh)
          for (int64_t kw = 0; kw < KW; ++kw) {
            double wv = wmap[kh * KW + kw];
            if (wv == 0.0) continue;
            int64_t sh = kh - padH, sw = kw - padW;
            int64_t h0 = std::max<int64_t>(0, -sh), h1 = std::min<int64_t>(Hout, H - sh);
            int64_t w0 = std::max<int64_t>(0, -sw), w1 = std::min<int64_t>(Wout, W - sw);
            for (int64_t h = h0; h < h1; ++h) {
              const double* xs = xmap + (h + sh) * W + sw;
              double* od = omap + h * Wout;
              for (int64_t ww = w0; ww < w1; ++ww) od[ww] += wv * xs[ww];
            }
          }
      }
    }
  return out;
}

void conv2d_backward(const Tensor& g, const Tensor& x, const Tensor& w, int padH, int padW,
                     Tensor* gx, Tensor* gw) {
  int64_t B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  int64_t Cout = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  int64_t Hout = g.dim(2), Wout = g.dim(3);
  const double* pg = g.data();
  const double* px = x.data();
  const double* pw = w.data();
  for (int64_t b = 0; b < B; ++b)
    for (int64_t co = 0; co < Cout; ++co) {
      const double* gmap = pg + (b * Cout + co) * Hout * Wout;
      for (int64_t ci = 0; ci < Cin; ++ci) {
        const double* xmap = px + (b * Cin + ci) * H * W;
        const double* wmap = pw + (co * Cin + ci) * KH * KW;
        double* gxmap = gx ? gx->data() + (b * Cin + ci) * H * W : nullptr;
        double* gwmap = gw ? gw->data() + (co * Cin + ci) * KH * KW : nullptr;
        for (int64_t kh = 0; kh < KH; ++kh)
          for (int64_t kw = 0; kw < KW; ++kw) {
            int64_t sh = kh - padH, sw = kw - padW;
            int64_t h0 = std::max<int64_t>(0, -sh), h1 = std::min<int64_t>(Hout, H - sh);
            int64_t w0 = std::max<int64_t>(0, -sw), w1 = std::min<int64_t>(Wout, W - sw);
            if (gxmap) {
              double wv = wmap[kh * KW + kw];
              if (wv != 0.0)
                for (int64_t h = h0; h < h1; ++h) {
                  double* d = gxmap + (h + sh) * W + sw;
                  const double* gs = gmap + h * Wout;
                  for (int64_t ww = w0; ww < w1; ++ww) d[ww] += wv * gs[ww];
                }
            }
            if (gwmap) {
              double acc = 0.0;
              for (int64_t h = h0; h < h1; ++h) {
                const double* xs = xmap + (h + sh) * W + sw;
                const double* gs = gmap + h * Wout;
                for (int64_t ww = w0; ww < w1; ++ww) acc += gs[ww] * xs[ww];
              }
              gwmap[kh * KW + kw] += acc;
            }
          }
      }
    }
}

Tensor softmax_lastdim(const Tensor& a) {
  if (a.ndim() < 1) throw std::invalid_argument("softmax on scalar");
  int64_t n = a.dim(a.ndim() - 1);
  int64_t rows = a.numel() / n;
  Tensor out(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  for (int64_t r = 0; r < rows; ++r) {
    const double* src = pa + r * n;
    double* dst = po + r * n;
    double mx = src[0];
    for (int64_t i = 1; i < n; ++i) mx = std::max(mx, src[i]);
    double sum = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      dst[i] = std::exp(src[i] - mx);
      sum += dst[i];
    }
    for (int64_t i = 0; i < n; ++i) dst[i] /= sum;
  }
  return out;
}

Tensor log_softmax_lastdim(const Tensor& a) {
  if (a.ndim() < 1) throw std::invalid_argument("log_softmax on scalar");
  int64_t n = a.dim(a.ndim() - 1);
  int64_t rows = a.numel() / n;
  Tensor out(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  for (int64_t r = 0; r < rows; ++r) {
    const double* src = pa + r * n;
    double* dst = po + r * n;
    double mx = src[0];
    for (int64_t i = 1; i < n; ++i) mx = std::max(mx, src[i]);
    double sum = 0.0;
    for (int64_t i = 0; i < n; ++i) sum += std::exp(src[i] - mx);
    double lse = mx + std::log(sum);
    for (int64_t i = 0; i < n; ++i) dst[i] = src[i] - lse;
  }
  return out;
}

}  // namespace latte
