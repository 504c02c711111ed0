// Adam optimizer over a flat parameter vector (Kingma & Ba defaults).
#pragma once

#include <cmath>

#include "hf/types.hpp"

namespace hf {

class Adam {
 public:
  explicit Adam(int n, Real lr = 1e-3, Real beta1 = 0.9, Real beta2 = 0.999,
                Real eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(VecX::Zero(n)), v_(VecX::Zero(n)) {}

  Real learning_rate() const { return lr_; }
  void set_learning_rate(Real lr) { lr_ = lr; }

  void step(VecX& params, const VecX& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
      throw DimensionError("Adam::step: size mismatch");
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
    const Real bc1 = 1.0 - std::pow(beta1_, t_);
    const Real bc2 = 1.0 - std::pow(beta2_, t_);
    params.array() -=
        lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
  }

 private:
  Real lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  VecX m_, v_;
};

}  // namespace hf
