// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "latte/rng.hpp"

namespace latte::geo {

// Positive curvature surrogate; the manifold's sectional curvature is -1/K.
struct Curvature {
  double k = 1.0;
  explicit Curvature(double k_);
  Curvature() = default;
};

// Point on the upper hyperboloid sheet: <x,x>_L = -K, time > 0.
// The ambient layout is [time, space...].
class LorentzPoint {
public:
  static LorentzPoint origin(int space_dim, Curvature K);
  // Validates the manifold invariant (tolerance 1e-5 * K) and time > 0.
  static LorentzPoint from_ambient(std::vector<double> ambient, Curvature K);

  double time() const { return v_[0]; }
  int space_dim() const { return static_cast<int>(v_.size()) - 1; }
  int ambient_dim() const { return static_cast<int>(v_.size()); }
  double space(int i) const { return v_[static_cast<size_t>(i) + 1]; }
  const std::vector<double>& ambient() const { return v_; }
  std::vector<double> space_vector() const { return {v_.begin() + 1, v_.end()}; }
  Curvature curvature() const { return k_; }

private:
  LorentzPoint(std::vector<double> v, Curvature k) : v_(std::move(v)), k_(k) {}
  std::vector<double> v_;
  Curvature k_;

  friend LorentzPoint lift_to_manifold(const std::vector<double>& space, Curvature K);
  friend LorentzPoint unchecked_point(std::vector<double> ambient, Curvature K);
};

// Element of the tangent space at `base`; tangency <base, v>_L = 0 is
// validated to 1e-6 at construction.
class TangentVector {
public:
  TangentVector(std::vector<double> ambient, LorentzPoint base);
  static TangentVector zero(const LorentzPoint& base);

  double time() const { return v_[0]; }
  const std::vector<double>& ambient() const { return v_; }
  const LorentzPoint& base() const { return base_; }

private:
  std::vector<double> v_;
  LorentzPoint base_;
};

// <x,y>_L = -x_t y_t + x_s . y_s on raw ambient vectors (dimension >= 2)
double lorentz_inner(const std::vector<double>& x, const std::vector<double>& y);

// (sqrt(K + |space|^2), space); satisfies the manifold constraint exactly
LorentzPoint lift_to_manifold(const std::vector<double>& space, Curvature K);

LorentzPoint exp_map(const LorentzPoint& x, const TangentVector& v);
TangentVector log_map(const LorentzPoint& x, const LorentzPoint& y);

// sqrt(K) * acosh(-<x,y>_L / K); the acosh argument is clamped to >= 1
double geodesic_distance(const LorentzPoint& x, const LorentzPoint& y);

// -2K - 2<x,y>_L
double squared_lorentz_distance(const LorentzPoint& x, const LorentzPoint& y);

// sqrt(K) * (sum w_i x_i) / ||sum w_i x_i||_L  with ||z||_L = sqrt(|<z,z>_L|)
LorentzPoint lorentz_centroid(const std::vector<LorentzPoint>& points,
                              const std::vector<double>& weights);

// concatenates space parts; time recomputed so the output lies on the manifold
LorentzPoint lorentz_concat(const std::vector<LorentzPoint>& points);

// pure boost along unit direction v (space dim) with rapidity xi; an isometry
LorentzPoint lorentz_boost(const LorentzPoint& x, const std::vector<double>& v, double xi);

// Gaussian in the tangent space at the origin pushed through the exp map
LorentzPoint wrapped_normal_sample(double std, Curvature K, int space_dim, Rng& rng);

bool on_manifold(const std::vector<double>& ambient, Curvature K, double tol_scale = 1e-5);

}  // namespace latte::geo
