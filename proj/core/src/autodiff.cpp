// SPDX-License-Identifier: Apache-2.0
#include "latte/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace latte::ad {

void add_grad(Node& n, const Tensor& g) {
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  double* dst = n.grad.data();
  const double* src = g.data();
  int64_t count = n.grad.numel();
  if (g.numel() != count) throw std::logic_error("gradient shape mismatch in op backward");
  for (int64_t i = 0; i < count; ++i) dst[i] += src[i];
}

Var Var::leaf(Tensor value, bool requires_grad, const char* op) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  n->op = op;
  return Var(std::move(n));
}

const Tensor& Var::grad() const {
  if (!node_->has_grad) throw std::logic_error("grad read before backward populated it");
  return node_->grad;
}

void Var::zero_grad() {
  node_->has_grad = false;
  node_->grad = Tensor();
}

Var make_op(const char* op, Tensor value, std::vector<Var> parents,
            std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = op;
  n->parents.reserve(parents.size());
  bool needs = false;
  for (const Var& p : parents) {
    n->parents.push_back(p.node());
    needs = needs || p.node()->requires_grad;
  }
  n->requires_grad = needs;
  if (needs) n->backward = std::move(backward);
  return Var(std::move(n));
}

namespace {

std::vector<Node*> topo_order(Node* root) {
  // iterative postorder DFS; result is a valid forward topological order
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

void backward(const Var& loss) {
  if (loss.numel() != 1) throw std::invalid_argument("backward requires a scalar loss");
  Node* root = loss.node().get();
  auto order = topo_order(root);
  if (!std::isfinite(loss.value().item())) {
    for (Node* n : order) {  // forward order: first offender is the root cause
      if (!n->value.all_finite())
        throw std::runtime_error(std::string("non-finite value produced by op '") + n->op + "'");
    }
    throw std::runtime_error("non-finite loss");
  }
  add_grad(*root, Tensor::full({}, 1.0).reshaped(root->value.shape()));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->has_grad && n->backward) n->backward(*n);
  }
}

// ---- arithmetic ----

Var add(const Var& a, const Var& b) {
  return make_op("add", latte::add(a.value(), b.value()), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) add_grad(*n.parents[0], reduce_to_shape(n.grad, n.parents[0]->value.shape()));
    if (n.parents[1]->requires_grad) add_grad(*n.parents[1], reduce_to_shape(n.grad, n.parents[1]->value.shape()));
  });
}

Var sub(const Var& a, const Var& b) {
  return make_op("sub", latte::sub(a.value(), b.value()), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) add_grad(*n.parents[0], reduce_to_shape(n.grad, n.parents[0]->value.shape()));
    if (n.parents[1]->requires_grad)
      add_grad(*n.parents[1], reduce_to_shape(mul_scalar(n.grad, -1.0), n.parents[1]->value.shape()));
  });
}

Var mul(const Var& a, const Var& b) {
  return make_op("mul", latte::mul(a.value(), b.value()), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad)
      add_grad(*n.parents[0], reduce_to_shape(latte::mul(n.grad, n.parents[1]->value), n.parents[0]->value.shape()));
    if (n.parents[1]->requires_grad)
      add_grad(*n.parents[1], reduce_to_shape(latte::mul(n.grad, n.parents[0]->value), n.parents[1]->value.shape()));
  });
}

Var div(const Var& a, const Var& b) {
  return make_op("div", latte::div(a.value(), b.value()), {a, b}, [](Node& n) {
    const Tensor& bv = n.parents[1]->value;
    if (n.parents[0]->requires_grad)
      add_grad(*n.parents[0], reduce_to_shape(latte::div(n.grad, bv), n.parents[0]->value.shape()));
    if (n.parents[1]->requires_grad) {
      // d(a/b)/db = -a / b^2 = -out / b
      Tensor gb = latte::mul(n.grad, latte::div(n.value, bv));
      add_grad(*n.parents[1], reduce_to_shape(mul_scalar(gb, -1.0), n.parents[1]->value.shape()));
    }
  });
}

Var neg(const Var& a) {
  return make_op("neg", mul_scalar(a.value(), -1.0), {a}, [](Node& n) {
    if (n.parents[0]->requires_grad) add_grad(*n.parents[0], mul_scalar(n.grad, -1.0));
  });
}

Var add(const Var& a, double s) {
  return make_op("add_scalar", add_scalar(a.value(), s), {a}, [](Node& n) {
    if (n.parents[0]->requires_grad) add_grad(*n.parents[0], n.grad);
  });
}

Var mul(const Var& a, double s) {
  return make_op("mul_scalar", mul_scalar(a.value(), s), {a}, [s](Node& n) {
    if (n.parents[0]->requires_grad) add_grad(*n.parents[0], mul_scalar(n.grad, s));
  });
}

// ---- structure ----

Var matmul(const Var& a, const Var& b) {
  return make_op("matmul", latte::matmul(a.value(), b.value()), {a, b}, [](Node& n) {
    const Tensor& av = n.parents[0]->value;
    const Tensor& bv = n.parents[1]->value;
    if (n.parents[0]->requires_grad) {
      Tensor ga = latte::matmul(n.grad, latte::transpose_last2(bv));
      add_grad(*n.parents[0], reduce_to_shape(ga, av.shape()));
    }
    if (n.parents[1]->requires_grad) {
      Tensor gb = latte::matmul(latte::transpose_last2(av), n.grad);
      add_grad(*n.parents[1], reduce_to_shape(gb, bv.shape()));
    }
  });
}

Var transpose_last2(const Var& a) {
  return make_op("transpose", latte::transpose_last2(a.value()), {a}, [](Node& n) {
    if (n.parents[0]->requires_grad) add_grad(*n.parents[0], latte::transpose_last2(n.grad));
  });
}

Var reshape(const Var& a, Shape shape) {
  return make_op("reshape", a.value().reshaped(std::move(shape)), {a}, [](Node& n) {
    if (n.parents[0]->requires_grad) add_grad(*n.parents[0], n.grad.reshaped(n.parents[0]->value.shape()));
  });
}

Var slice(const Var& a, int axis, int64_t start, int64_t len) {
  return make_op("slice", latte::slice(a.value(), axis, start, len), {a}, [axis, start](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    Tensor g(n.parents[0]->value.shape());
    slice_add_into(g, n.grad, axis, start);
    add_grad(*n.parents[0], g);
  });
}

Var concat(const std::vector<Var>& parts, int axis) {
  std::vector<const Tensor*> vals;
  vals.reserve(parts.size());
  for (const Var& p : parts) vals.push_back(&p.value());
  return make_op("concat", latte::concat(vals, axis), parts, [axis](Node& n) {
    int64_t off = 0;
    for (auto& p : n.parents) {
      int64_t len = p->value.dim(axis);
      if (p->requires_grad) add_grad(*p, latte::slice(n.grad, axis, off, len));
      off += len;
    }
  });
}

Var take_rows(const Var& a, std::vector<int64_t> idx) {
  return make_op("take_rows", latte::take_rows(a.value(), idx), {a}, [idx = std::move(idx)](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    Tensor g(n.parents[0]->value.shape());
    take_rows_add_into(g, n.grad, idx);
    add_grad(*n.parents[0], g);
  });
}

Var gather_axis1(const Var& a, std::vector<int64_t> idx, int64_t windows) {
  const Tensor& x = a.value();
  if (x.ndim() != 3) throw std::invalid_argument("gather_axis1 expects rank-3 input");
  int64_t B = x.dim(0), L = x.dim(1), A = x.dim(2);
  if (static_cast<int64_t>(idx.size()) != B * windows)
    throw std::invalid_argument("gather_axis1 index count mismatch");
  Tensor out({B, windows, A});
  for (int64_t b = 0; b < B; ++b)
    for (int64_t wi = 0; wi < windows; ++wi) {
      int64_t src = idx[static_cast<size_t>(b * windows + wi)];
      if (src < 0 || src >= L) throw std::invalid_argument("gather_axis1 index out of range");
      std::copy_n(x.data() + (b * L + src) * A, A, out.data() + (b * windows + wi) * A);
    }
  return make_op("gather_axis1", std::move(out), {a}, [idx = std::move(idx), windows](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    const Tensor& x = n.parents[0]->value;
    int64_t B = x.dim(0), L = x.dim(1), A = x.dim(2);
    Tensor g({B, L, A});
    for (int64_t b = 0; b < B; ++b)
      for (int64_t wi = 0; wi < windows; ++wi) {
        int64_t dst = idx[static_cast<size_t>(b * windows + wi)];
        const double* src = n.grad.data() + (b * windows + wi) * A;
        double* d = g.data() + (b * L + dst) * A;
        for (int64_t j = 0; j < A; ++j) d[j] += src[j];
      }
    add_grad(*n.parents[0], g);
  });
}

Var window_sum_axis1(const Var& a, std::vector<std::vector<int64_t>> windows) {
  const Tensor& x = a.value();
  if (x.ndim() != 3) throw std::invalid_argument("window_sum_axis1 expects rank-3 input");
  int64_t B = x.dim(0), L = x.dim(1), A = x.dim(2);
  int64_t W = static_cast<int64_t>(windows.size());
  Tensor out({B, W, A});
  for (int64_t b = 0; b < B; ++b)
    for (int64_t wi = 0; wi < W; ++wi) {
      double* dst = out.data() + (b * W + wi) * A;
      for (int64_t src : windows[static_cast<size_t>(wi)]) {
        if (src < 0 || src >= L) throw std::invalid_argument("window index out of range");
        const double* s = x.data() + (b * L + src) * A;
        for (int64_t j = 0; j < A; ++j) dst[j] += s[j];
      }
    }
  return make_op("window_sum", std::move(out), {a}, [windows = std::move(windows)](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    const Tensor& x = n.parents[0]->value;
    int64_t B = x.dim(0), L = x.dim(1), A = x.dim(2);
    int64_t W = static_cast<int64_t>(windows.size());
    Tensor g({B, L, A});
    for (int64_t b = 0; b < B; ++b)
      for (int64_t wi = 0; wi < W; ++wi) {
        const double* src = n.grad.data() + (b * W + wi) * A;
        for (int64_t dst : windows[static_cast<size_t>(wi)]) {
          double* d = g.data() + (b * L + dst) * A;
          for (int64_t j = 0; j < A; ++j) d[j] += src[j];
        }
      }
    add_grad(*n.parents[0], g);
  });
}

Var detach(const Var& a) { return Var::constant(a.value()); }

// ---- reductions ----

Var sum(const Var& a, std::vector<int> axes, bool keepdim) {
  Tensor out = sum_axes(a.value(), axes, keepdim);
  Shape kept_shape;  // keepdim form, for re-broadcast in backward
  {
    std::vector<bool> reduced(static_cast<size_t>(a.ndim()), false);
    for (int ax : axes) reduced[static_cast<size_t>(ax)] = true;
    for (int i = 0; i < a.ndim(); ++i) kept_shape.push_back(reduced[static_cast<size_t>(i)] ? 1 : a.dim(i));
  }
  return make_op("sum", std::move(out), {a}, [kept_shape = std::move(kept_shape)](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    Tensor g = n.grad.reshaped(kept_shape);
    add_grad(*n.parents[0], broadcast_to(g, n.parents[0]->value.shape()));
  });
}

Var mean(const Var& a, std::vector<int> axes, bool keepdim) {
  int64_t count = 1;
  for (int ax : axes) count *= a.dim(ax);
  return mul(sum(a, std::move(axes), keepdim), 1.0 / static_cast<double>(count));
}

Var sum_all(const Var& a) {
  std::vector<int> axes(static_cast<size_t>(a.ndim()));
  for (int i = 0; i < a.ndim(); ++i) axes[static_cast<size_t>(i)] = i;
  return sum(a, std::move(axes), false);
}

Var mean_all(const Var& a) { return mul(sum_all(a), 1.0 / static_cast<double>(a.numel())); }

// ---- pointwise ----

namespace {

Var unary_op(const char* name, const Var& a, double (*fwd)(double), double (*dfdx)(double, double)) {
  Tensor out(a.shape());
  const double* pa = a.value().data();
  double* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = fwd(pa[i]);
  return make_op(name, std::move(out), {a}, [dfdx](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    const Tensor& x = n.parents[0]->value;
    Tensor g(x.shape());
    const double* px = x.data();
    const double* py = n.value.data();
    const double* pg = n.grad.data();
    double* pd = g.data();
    for (int64_t i = 0; i < x.numel(); ++i) pd[i] = pg[i] * dfdx(px[i], py[i]);
    add_grad(*n.parents[0], g);
  });
}

}  // namespace

Var sqrt(const Var& a) {
  return unary_op(
      "sqrt", a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

Var exp(const Var& a) {
  return unary_op(
      "exp", a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var log(const Var& a) {
  return unary_op(
      "log", a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var cosh(const Var& a) {
  return unary_op(
      "cosh", a, [](double x) { return std::cosh(x); },
      [](double x, double) { return std::sinh(x); });
}

Var sinh(const Var& a) {
  return unary_op(
      "sinh", a, [](double x) { return std::sinh(x); },
      [](double x, double) { return std::cosh(x); });
}

Var relu(const Var& a) {
  return unary_op(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var acosh_clamped(const Var& a) {
  return unary_op(
      "acosh_clamped", a, [](double x) { return std::acosh(x < 1.0 ? 1.0 : x); },
      [](double x, double) { return x > 1.0 ? 1.0 / std::sqrt(x * x - 1.0) : 0.0; });
}

namespace series {

// cosh(sqrt(u)); derivative sinh(sqrt(u)) / (2 sqrt(u))
inline double cosh_sqrt_f(double u) {
  if (u < 1e-12) return 1.0 + u * 0.5 + u * u / 24.0;
  return std::cosh(std::sqrt(u));
}
inline double cosh_sqrt_df(double u) {
  if (u < 1e-8) return 0.5 + u / 12.0 + u * u / 240.0;
  double r = std::sqrt(u);
  return std::sinh(r) / (2.0 * r);
}

// sinh(sqrt(u))/sqrt(u); derivative (sqrt(u) cosh(sqrt(u)) - sinh(sqrt(u))) / (2 u^{3/2})
inline double sinhc_sqrt_f(double u) {
  if (u < 1e-8) return 1.0 + u / 6.0 + u * u / 120.0;
  double r = std::sqrt(u);
  return std::sinh(r) / r;
}
inline double sinhc_sqrt_df(double u) {
  if (u < 1e-6) return 1.0 / 6.0 + u / 60.0 + u * u / 2520.0;
  double r = std::sqrt(u);
  return (r * std::cosh(r) - std::sinh(r)) / (2.0 * u * r);
}

// f(b) = acosh(b)/sqrt(b^2-1) with b clamped to >= 1; f(1) = 1
// series in t = b-1: f = 1 - t/3 + 2t^2/15 - ...; f' = (1 - b f)/(b^2 - 1)
inline double acosh_ratio_f(double b) {
  double t = b - 1.0;
  if (t < 1e-7) {
    if (t < 0.0) t = 0.0;
    return 1.0 - t / 3.0 + 2.0 * t * t / 15.0;
  }
  return std::acosh(b) / std::sqrt(b * b - 1.0);
}
inline double acosh_ratio_df(double b) {
  double t = b - 1.0;
  if (t < 1e-5) {
    if (t < 0.0) return -1.0 / 3.0;  // clamped region: series limit
    return -1.0 / 3.0 + 4.0 * t / 15.0;
  }
  double f = std::acosh(b) / std::sqrt(b * b - 1.0);
  return (1.0 - b * f) / (b * b - 1.0);
}

}  // namespace series

Var cosh_sqrt(const Var& a) {
  return unary_op(
      "cosh_sqrt", a, +[](double u) { return series::cosh_sqrt_f(u); },
      +[](double u, double) { return series::cosh_sqrt_df(u); });
}

Var sinhc_sqrt(const Var& a) {
  return unary_op(
      "sinhc_sqrt", a, +[](double u) { return series::sinhc_sqrt_f(u); },
      +[](double u, double) { return series::sinhc_sqrt_df(u); });
}

Var acosh_ratio(const Var& a) {
  return unary_op(
      "acosh_ratio", a, +[](double b) { return series::acosh_ratio_f(b); },
      +[](double b, double) { return series::acosh_ratio_df(b); });
}

// ---- nn primitives ----

Var conv1d(const Var& x, const Var& w, int pad) {
  return make_op("conv1d", latte::conv1d(x.value(), w.value(), pad), {x, w}, [pad](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    const Tensor& wv = n.parents[1]->value;
    Tensor gx, gw;
    Tensor* pgx = nullptr;
    Tensor* pgw = nullptr;
    if (n.parents[0]->requires_grad) {
      gx = Tensor(xv.shape());
      pgx = &gx;
    }
    if (n.parents[1]->requires_grad) {
      gw = Tensor(wv.shape());
      pgw = &gw;
    }
    conv1d_backward(n.grad, xv, wv, pad, pgx, pgw);
    if (pgx) add_grad(*n.parents[0], gx);
    if (pgw) add_grad(*n.parents[1], gw);
  });
}

Var conv2d(const Var& x, const Var& w, int padH, int padW) {
  return make_op("conv2d", latte::conv2d(x.value(), w.value(), padH, padW), {x, w}, [padH, padW](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    const Tensor& wv = n.parents[1]->value;
    Tensor gx, gw;
    Tensor* pgx = nullptr;
    Tensor* pgw = nullptr;
    if (n.parents[0]->requires_grad) {
      gx = Tensor(xv.shape());
      pgx = &gx;
    }
    if (n.parents[1]->requires_grad) {
      gw = Tensor(wv.shape());
      pgw = &gw;
    }
    conv2d_backward(n.grad, xv, wv, padH, padW, pgx, pgw);
    if (pgx) add_grad(*n.parents[0], gx);
    if (pgw) add_grad(*n.parents[1], gw);
  });
}

Var softmax_lastdim(const Var& a) {
  return make_op("softmax", latte::softmax_lastdim(a.value()), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    // dL/dx_i = s_i (g_i - sum_j g_j s_j)
    const Tensor& s = n.value;
    int64_t cols = s.dim(s.ndim() - 1);
    int64_t rows = s.numel() / cols;
    Tensor g(s.shape());
    const double* ps = s.data();
    const double* pg = n.grad.data();
    double* pd = g.data();
    for (int64_t r = 0; r < rows; ++r) {
      const double* sr = ps + r * cols;
      const double* gr = pg + r * cols;
      double* dr = pd + r * cols;
      double dot = 0.0;
      for (int64_t i = 0; i < cols; ++i) dot += gr[i] * sr[i];
      for (int64_t i = 0; i < cols; ++i) dr[i] = sr[i] * (gr[i] - dot);
    }
    add_grad(*n.parents[0], g);
  });
}

Var log_softmax_lastdim(const Var& a) {
  return make_op("log_softmax", latte::log_softmax_lastdim(a.value()), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    // dL/dx_i = g_i - softmax_i * sum_j g_j
    const Tensor& ls = n.value;
    int64_t cols = ls.dim(ls.ndim() - 1);
    int64_t rows = ls.numel() / cols;
    Tensor g(ls.shape());
    const double* pl = ls.data();
    const double* pg = n.grad.data();
    double* pd = g.data();
    for (int64_t r = 0; r < rows; ++r) {
      const double* lr = pl + r * cols;
      const double* gr = pg + r * cols;
      double* dr = pd + r * cols;
      double gsum = 0.0;
      for (int64_t i = 0; i < cols; ++i) gsum += gr[i];
      for (int64_t i = 0; i < cols; ++i) dr[i] = gr[i] - std::exp(lr[i]) * gsum;
    }
    add_grad(*n.parents[0], g);
  });
}

Var take_class(const Var& a, std::vector<int> labels) {
  const Tensor& x = a.value();
  if (x.ndim() != 2) throw std::invalid_argument("take_class expects rank-2 logits");
  int64_t B = x.dim(0), C = x.dim(1);
  if (static_cast<int64_t>(labels.size()) != B) throw std::invalid_argument("take_class label count mismatch");
  Tensor out({B});
  for (int64_t i = 0; i < B; ++i) {
    int c = labels[static_cast<size_t>(i)];
    if (c < 0 || c >= C) throw std::invalid_argument("label out of range");
    out[i] = x[i * C + c];
  }
  return make_op("take_class", std::move(out), {a}, [labels = std::move(labels)](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    const Tensor& x = n.parents[0]->value;
    int64_t B = x.dim(0), C = x.dim(1);
    Tensor g({B, C});
    for (int64_t i = 0; i < B; ++i) g[i * C + labels[static_cast<size_t>(i)]] = n.grad[i];
    add_grad(*n.parents[0], g);
  });
}

// ---- Parameter ----

Parameter::Parameter(std::string name, Tensor init, bool trainable) : name_(std::move(name)) {
  node_ = std::make_shared<Node>();
  node_->value = std::move(init);
  node_->requires_grad = trainable;
  node_->op = "param";
}

const Tensor& Parameter::grad() const {
  if (!node_->has_grad) throw std::logic_error("parameter '" + name_ + "' has no gradient");
  return node_->grad;
}

void Parameter::zero_grad() {
  node_->has_grad = false;
  node_->grad = Tensor();
}

}  // namespace latte::ad
