// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "latte/autodiff.hpp"

namespace latte::hyp {

using ad::Var;

// Batched Lorentz-model operations. Tensors carry points along the last axis
// in ambient layout [time, space...]; any leading shape is a batch.

Var time_part(const Var& x);   // (..., 1)
Var space_part(const Var& x);  // (..., n)

// <x,y>_L along the last axis, keepdim -> (..., 1)
Var linner(const Var& x, const Var& y);

// (..., n) space coords -> (..., 1+n) point with time = sqrt(K + |space|^2)
Var lift(const Var& space, double K);

// -2K - 2<x,y>_L, keepdim
Var sqdist(const Var& x, const Var& y, double K);

// pairwise squared distances: q (..., m, 1+n) x k (..., w, 1+n) -> (..., m, w)
Var sqdist_cross(const Var& q, const Var& k, double K);

// sqrt(K) acosh(-<x,y>_L / K), argument clamped to >= 1, keepdim
Var gdist(const Var& x, const Var& y, double K);

// tangent coords at the origin (space only) <-> manifold points
Var exp_origin(const Var& v_space, double K);
Var log_origin(const Var& x, double K);

// general base point maps; v is an ambient tangent vector at x
Var exp_at(const Var& x, const Var& v, double K);
Var log_at(const Var& x, const Var& y, double K);

// sqrt(K) * s / sqrt(-<s,s>_L) for timelike s (weighted sums of points);
// throws if some |<s,s>_L| is below 1e-12
Var normalize_timelike(const Var& s, double K);

// uniform-weight Lorentzian centroid over `axis` (not the last axis)
Var centroid_uniform(const Var& points, int axis, double K);

// pure boost of every point along `dir` (shape (n), need not be unit: it is
// normalized here) with scalar rapidity `xi`
Var boost(const Var& x, const Var& dir, const Var& xi, double K);

// every point within tolerance of the manifold: |<x,x>_L + K| <= tol_scale*K
bool batch_on_manifold(const Tensor& points, double K, double tol_scale = 1e-5);
double max_manifold_residual(const Tensor& points, double K);

}  // namespace latte::hyp
