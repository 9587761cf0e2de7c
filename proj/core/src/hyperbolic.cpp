// SPDX-License-Identifier: Apache-2.0
#include "latte/hyperbolic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace latte::hyp {

using namespace latte::ad;

namespace {

int last_axis(const Var& x) { return x.ndim() - 1; }

int64_t ambient(const Var& x) { return x.dim(x.ndim() - 1); }

// constant [-1, 1, 1, ...] used to evaluate the Lorentzian inner product
Var metric_const(int64_t a) {
  Tensor m({a});
  m.fill(1.0);
  m[0] = -1.0;
  return Var::constant(std::move(m));
}

}  // namespace

Var time_part(const Var& x) { return slice(x, last_axis(x), 0, 1); }

Var space_part(const Var& x) { return slice(x, last_axis(x), 1, ambient(x) - 1); }

Var linner(const Var& x, const Var& y) {
  Var prod = x * y * metric_const(ambient(x));
  return sum(prod, {last_axis(prod)}, /*keepdim=*/true);
}

Var lift(const Var& space, double K) {
  Var sq = sum(space * space, {last_axis(space)}, true);
  Var t = ad::sqrt(sq + K);
  return concat({t, space}, last_axis(space));
}

Var sqdist(const Var& x, const Var& y, double K) { return linner(x, y) * -2.0 - 2.0 * K; }

Var sqdist_cross(const Var& q, const Var& k, double K) {
  Var qm = q * metric_const(ambient(q));
  Var ip = matmul(qm, transpose_last2(k));
  return ip * -2.0 - 2.0 * K;
}

Var gdist(const Var& x, const Var& y, double K) {
  Var arg = linner(x, y) * (-1.0 / K);
  return acosh_clamped(arg) * std::sqrt(K);
}

Var exp_origin(const Var& v_space, double K) {
  Var u = sum(v_space * v_space, {last_axis(v_space)}, true) * (1.0 / K);
  Var t = cosh_sqrt(u) * std::sqrt(K);
  Var s = sinhc_sqrt(u) * v_space;
  return concat({t, s}, last_axis(v_space));
}

Var log_origin(const Var& x, double K) {
  Var beta = time_part(x) * (1.0 / std::sqrt(K));
  return acosh_ratio(beta) * space_part(x);
}

Var exp_at(const Var& x, const Var& v, double K) {
  Var u = linner(v, v) * (1.0 / K);  // alpha^2; tiny negatives handled by the series forms
  return cosh_sqrt(u) * x + sinhc_sqrt(u) * v;
}

Var log_at(const Var& x, const Var& y, double K) {
  Var beta = linner(x, y) * (-1.0 / K);
  return acosh_ratio(beta) * (y - beta * x);
}

Var normalize_timelike(const Var& s, double K) {
  Var q = linner(s, s) * -1.0;
  int64_t n = q.numel();
  for (int64_t i = 0; i < n; ++i)
    if (q.value()[i] < 1e-12) throw std::runtime_error("degenerate point sum in Lorentzian centroid");
  return s * std::sqrt(K) / ad::sqrt(q);
}

Var centroid_uniform(const Var& points, int axis, double K) {
  if (axis == last_axis(points)) throw std::invalid_argument("centroid axis cannot be the ambient axis");
  Var s = sum(points, {axis}, false);
  return normalize_timelike(s, K);
}

Var boost(const Var& x, const Var& dir, const Var& xi, double K) {
  (void)K;
  Var nrm = ad::sqrt(sum(dir * dir, {last_axis(dir)}, true));
  for (int64_t i = 0; i < nrm.numel(); ++i)
    if (nrm.value()[i] < 1e-12) throw std::invalid_argument("boost direction has zero norm");
  Var u = dir / nrm;
  Var xs = space_part(x);
  Var xt = time_part(x);
  Var dot = sum(xs * u, {last_axis(xs)}, true);
  Var ch = ad::cosh(xi);
  Var sh = ad::sinh(xi);
  Var t_out = xt * ch + dot * sh;
  Var coef = dot * (ch - 1.0) + xt * sh;
  Var s_out = xs + coef * u;
  return concat({t_out, s_out}, last_axis(x));
}

bool batch_on_manifold(const Tensor& points, double K, double tol_scale) {
  return max_manifold_residual(points, K) <= tol_scale * K;
}

double max_manifold_residual(const Tensor& points, double K) {
  int64_t a = points.dim(points.ndim() - 1);
  int64_t rows = points.numel() / a;
  double worst = 0.0;
  const double* p = points.data();
  for (int64_t r = 0; r < rows; ++r) {
    const double* v = p + r * a;
    if (!(v[0] > 0.0)) return std::numeric_limits<double>::infinity();
    double ip = -v[0] * v[0];
    for (int64_t i = 1; i < a; ++i) ip += v[i] * v[i];
    worst = std::max(worst, std::fabs(ip + K));
  }
  return worst;
}

}  // namespace latte::hyp
