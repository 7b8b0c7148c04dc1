#pragma once

#include <cmath>
#include <vector>

#include "fforge/autodiff.hpp"

namespace fforge {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update per parameter, then the gradient is cleared.
template <typename Scalar>
void adam_step(const std::vector<Parameter<Scalar>*>& params, const AdamOptions& opt) {
  for (Parameter<Scalar>* p : params) {
    ++p->step_count;
    const double t = static_cast<double>(p->step_count);
    const Scalar b1 = Scalar(opt.beta1);
    const Scalar b2 = Scalar(opt.beta2);
    const Scalar c1 = Scalar(1.0 - std::pow(opt.beta1, t));
    const Scalar c2 = Scalar(1.0 - std::pow(opt.beta2, t));
    auto& g = p->grad.data;
    p->adam_m.data = b1 * p->adam_m.data + (Scalar(1) - b1) * g;
    p->adam_v.data = b2 * p->adam_v.data + (Scalar(1) - b2) * g.square();
    p->value.data -= Scalar(opt.lr) * (p->adam_m.data / c1) / ((p->adam_v.data / c2).sqrt() + Scalar(opt.eps));
    g.setZero();
  }
}

}  // namespace fforge
