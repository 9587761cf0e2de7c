// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "latte/autodiff.hpp"

namespace latte::ad {

// Adam with decoupled weight decay. Parameter groups carry their own learning
// rate and decay so adapter weights can be scheduled separately.
class AdamW {
public:
  AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void add_group(std::vector<Parameter*> params, double lr, double weight_decay);
  void step();
  void zero_grad();
  int64_t steps() const { return t_; }

private:
  struct Group {
    std::vector<Parameter*> params;
    double lr;
    double wd;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
  };
  std::vector<Group> groups_;
  int64_t t_ = 0;
  double beta1_, beta2_, eps_;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = false;
  std::string worst;  // "input#k[i]" of the worst element
};

// Central finite differences against the analytic gradient of a scalar-valued
// function of the given inputs. All inputs are treated as differentiable.
GradCheckReport grad_check(const std::function<Var(const std::vector<Var>&)>& f,
                           const std::vector<Tensor>& inputs, double tol, double h = 1e-5);

}  // namespace latte::ad
