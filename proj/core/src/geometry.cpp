// SPDX-License-Identifier: Apache-2.0
#include "latte/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace latte::geo {

namespace {

constexpr double kExpLogEps = 1e-9;  // series-limit cutoff for exp/log maps

double sq_norm(const std::vector<double>& v, size_t from = 0) {
  double s = 0.0;
  for (size_t i = from; i < v.size(); ++i) s += v[i] * v[i];
  return s;
}

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

}  // namespace

Curvature::Curvature(double k_) : k(k_) {
  if (!(k > 0.0) || !std::isfinite(k)) throw std::invalid_argument("curvature surrogate K must be finite and > 0");
}

bool on_manifold(const std::vector<double>& ambient, Curvature K, double tol_scale) {
  if (ambient.size() < 2) return false;
  if (!(ambient[0] > 0.0)) return false;
  double res = lorentz_inner(ambient, ambient) + K.k;
  return std::fabs(res) <= tol_scale * K.k;
}

LorentzPoint unchecked_point(std::vector<double> ambient, Curvature K) {
  return LorentzPoint(std::move(ambient), K);
}

LorentzPoint LorentzPoint::origin(int space_dim, Curvature K) {
  std::vector<double> v(static_cast<size_t>(space_dim) + 1, 0.0);
  v[0] = std::sqrt(K.k);
  return LorentzPoint(std::move(v), K);
}

LorentzPoint LorentzPoint::from_ambient(std::vector<double> ambient, Curvature K) {
  if (ambient.size() < 2) throw std::invalid_argument("a Lorentz point needs ambient dimension >= 2");
  check_finite(ambient, "LorentzPoint");
  if (!(ambient[0] > 0.0)) throw std::invalid_argument("Lorentz point time component must be > 0");
  double res = lorentz_inner(ambient, ambient) + K.k;
  if (std::fabs(res) > 1e-5 * K.k)
    throw std::invalid_argument("point violates manifold constraint, residual " + std::to_string(res));
  return LorentzPoint(std::move(ambient), K);
}

TangentVector::TangentVector(std::vector<double> ambient, LorentzPoint base)
    : v_(std::move(ambient)), base_(std::move(base)) {
  if (v_.size() != base_.ambient().size())
    throw std::invalid_argument("tangent vector dimension does not match base point");
  check_finite(v_, "TangentVector");
  double ip = lorentz_inner(base_.ambient(), v_);
  double scale = 1.0;
  for (double x : v_) scale = std::max(scale, std::fabs(x));
  scale *= base_.time();
  if (std::fabs(ip) > 1e-6 * std::max(1.0, scale))
    throw std::invalid_argument("vector is not tangent at the base point, <x,v>_L = " + std::to_string(ip));
}

TangentVector TangentVector::zero(const LorentzPoint& base) {
  return TangentVector(std::vector<double>(base.ambient().size(), 0.0), base);
}

double lorentz_inner(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("lorentz_inner: dimension mismatch");
  if (x.size() < 2) throw std::invalid_argument("lorentz_inner: ambient dimension must be >= 2");
  double s = -x[0] * y[0];
  for (size_t i = 1; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

LorentzPoint lift_to_manifold(const std::vector<double>& space, Curvature K) {
  check_finite(space, "lift_to_manifold");
  std::vector<double> v(space.size() + 1);
  v[0] = std::sqrt(K.k + sq_norm(space));
  std::copy(space.begin(), space.end(), v.begin() + 1);
  return LorentzPoint(std::move(v), K);
}

LorentzPoint exp_map(const LorentzPoint& x, const TangentVector& v) {
  Curvature K = x.curvature();
  // re-validate tangency against x, not just v's recorded base
  double ip = lorentz_inner(x.ambient(), v.ambient());
  double scale = 1.0;
  for (double a : v.ambient()) scale = std::max(scale, std::fabs(a));
  if (std::fabs(ip) > 1e-6 * std::max(1.0, scale * x.time()))
    throw std::invalid_argument("exp_map: vector is not tangent at x");

  double vv = lorentz_inner(v.ambient(), v.ambient());
  if (vv < 0.0) vv = 0.0;  // round-off; tangent vectors at manifold points are spacelike
  double alpha = std::sqrt(vv / K.k);
  if (alpha < kExpLogEps) return x;

  double ca = std::cosh(alpha), sa = std::sinh(alpha) / alpha;
  std::vector<double> out(x.ambient().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = ca * x.ambient()[i] + sa * v.ambient()[i];
  return LorentzPoint::from_ambient(std::move(out), K);
}

TangentVector log_map(const LorentzPoint& x, const LorentzPoint& y) {
  Curvature K = x.curvature();
  double beta = -lorentz_inner(x.ambient(), y.ambient()) / K.k;
  if (beta - 1.0 < kExpLogEps) return TangentVector::zero(x);
  double factor = std::acosh(beta) / std::sqrt(beta * beta - 1.0);
  std::vector<double> out(x.ambient().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = factor * (y.ambient()[i] - beta * x.ambient()[i]);
  return TangentVector(std::move(out), x);
}

double geodesic_distance(const LorentzPoint& x, const LorentzPoint& y) {
  Curvature K = x.curvature();
  double arg = -lorentz_inner(x.ambient(), y.ambient()) / K.k;
  if (arg < 1.0) arg = 1.0;
  return std::sqrt(K.k) * std::acosh(arg);
}

double squared_lorentz_distance(const LorentzPoint& x, const LorentzPoint& y) {
  Curvature K = x.curvature();
  return -2.0 * K.k - 2.0 * lorentz_inner(x.ambient(), y.ambient());
}

LorentzPoint lorentz_centroid(const std::vector<LorentzPoint>& points,
                              const std::vector<double>& weights) {
  if (points.empty()) throw std::invalid_argument("lorentz_centroid: no points");
  if (points.size() != weights.size()) throw std::invalid_argument("lorentz_centroid: weight count mismatch");
  Curvature K = points[0].curvature();
  size_t dim = points[0].ambient().size();
  double wsum = 0.0;
  std::vector<double> s(dim, 0.0);
  for (size_t i = 0; i < points.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("lorentz_centroid: negative weight");
    if (points[i].ambient().size() != dim) throw std::invalid_argument("lorentz_centroid: dimension mismatch");
    wsum += weights[i];
    for (size_t j = 0; j < dim; ++j) s[j] += weights[i] * points[i].ambient()[j];
  }
  if (wsum == 0.0) throw std::invalid_argument("lorentz_centroid: all weights are zero");
  double q = lorentz_inner(s, s);
  if (std::fabs(q) < 1e-12) throw std::invalid_argument("lorentz_centroid: degenerate weighted sum");
  double norm = std::sqrt(std::fabs(q));
  double c = std::sqrt(K.k) / norm;
  for (double& v : s) v *= c;
  return LorentzPoint::from_ambient(std::move(s), K);
}

LorentzPoint lorentz_concat(const std::vector<LorentzPoint>& points) {
  if (points.empty()) throw std::invalid_argument("lorentz_concat: no points");
  Curvature K = points[0].curvature();
  std::vector<double> space;
  for (const LorentzPoint& p : points) {
    if (p.curvature().k != K.k) throw std::invalid_argument("lorentz_concat: mismatched curvature");
    space.insert(space.end(), p.ambient().begin() + 1, p.ambient().end());
  }
  return lift_to_manifold(space, K);
}

LorentzPoint lorentz_boost(const LorentzPoint& x, const std::vector<double>& v, double xi) {
  if (static_cast<int>(v.size()) != x.space_dim())
    throw std::invalid_argument("lorentz_boost: direction dimension mismatch");
  double nrm = std::sqrt(sq_norm(v));
  if (std::fabs(nrm - 1.0) > 1e-6) throw std::invalid_argument("lorentz_boost: direction must be unit length");
  double dot = 0.0;
  for (size_t i = 0; i < v.size(); ++i) dot += x.space(static_cast<int>(i)) * v[i];
  double ch = std::cosh(xi), sh = std::sinh(xi);
  std::vector<double> out(x.ambient().size());
  out[0] = x.time() * ch + dot * sh;
  double coef = dot * (ch - 1.0) + x.time() * sh;
  for (size_t i = 0; i < v.size(); ++i) out[i + 1] = x.space(static_cast<int>(i)) + v[i] * coef;
  return LorentzPoint::from_ambient(std::move(out), x.curvature());
}

LorentzPoint wrapped_normal_sample(double std, Curvature K, int space_dim, Rng& rng) {
  if (!(std > 0.0)) throw std::invalid_argument("wrapped_normal_sample: std must be > 0");
  std::vector<double> tangent(static_cast<size_t>(space_dim) + 1, 0.0);
  for (int i = 0; i < space_dim; ++i) tangent[static_cast<size_t>(i) + 1] = rng.normal(0.0, std);
  LorentzPoint o = LorentzPoint::origin(space_dim, K);
  return exp_map(o, TangentVector(std::move(tangent), o));
}

}  // namespace latte::geo
