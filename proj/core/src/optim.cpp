// SPDX-License-Identifier: Apache-2.0
#include "latte/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace latte::ad {

void AdamW::add_group(std::vector<Parameter*> params, double lr, double weight_decay) {
  Group g;
  g.params = std::move(params);
  g.lr = lr;
  g.wd = weight_decay;
  g.m.reserve(g.params.size());
  g.v.reserve(g.params.size());
  for (Parameter* p : g.params) {
    g.m.emplace_back(p->value().shape());
    g.v.emplace_back(p->value().shape());
  }
  groups_.push_back(std::move(g));
}

void AdamW::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Group& g : groups_) {
    for (size_t i = 0; i < g.params.size(); ++i) {
      Parameter* p = g.params[i];
      if (!p->trainable()) continue;
      double* pv = p->value().data();
      double* m = g.m[i].data();
      double* v = g.v[i].data();
      const double* grad = p->has_grad() ? p->grad().data() : nullptr;
      int64_t n = p->value().numel();
      for (int64_t j = 0; j < n; ++j) {
        double gj = grad ? grad[j] : 0.0;
        m[j] = beta1_ * m[j] + (1.0 - beta1_) * gj;
        v[j] = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
        double mh = m[j] / bc1;
        double vh = v[j] / bc2;
        pv[j] -= g.lr * (mh / (std::sqrt(vh) + eps_) + g.wd * pv[j]);
      }
    }
  }
}

void AdamW::zero_grad() {
  for (Group& g : groups_)
    for (Parameter* p : g.params) p->zero_grad();
}

GradCheckReport grad_check(const std::function<Var(const std::vector<Var>&)>& f,
                           const std::vector<Tensor>& inputs, double tol, double h) {
  // analytic pass
  std::vector<Var> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& t : inputs) leaves.push_back(Var::leaf(t, /*requires_grad=*/true, "gc_input"));
  Var out = f(leaves);
  if (out.numel() != 1) throw std::invalid_argument("grad_check target must be scalar-valued");
  backward(out);

  GradCheckReport rep;
  rep.max_rel_err = 0.0;
  std::vector<Tensor> probe = inputs;
  for (size_t k = 0; k < inputs.size(); ++k) {
    const Tensor analytic = leaves[k].has_grad() ? leaves[k].grad() : Tensor(inputs[k].shape());
    for (int64_t i = 0; i < probe[k].numel(); ++i) {
      double orig = probe[k][i];
      probe[k][i] = orig + h;
      double fp;
      {
        std::vector<Var> vs;
        for (const Tensor& t : probe) vs.push_back(Var::constant(t));
        fp = f(vs).item();
      }
      probe[k][i] = orig - h;
      double fm;
      {
        std::vector<Var> vs;
        for (const Tensor& t : probe) vs.push_back(Var::constant(t));
        fm = f(vs).item();
      }
      probe[k][i] = orig;
      double numeric = (fp - fm) / (2.0 * h);
      double a = analytic[i];
      double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-4});
      double rel = std::fabs(a - numeric) / denom;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst = "input#" + std::to_string(k) + "[" + std::to_string(i) + "]";
      }
    }
  }
  rep.pass = rep.max_rel_err <= tol;
  return rep;
}

}  // namespace latte::ad
