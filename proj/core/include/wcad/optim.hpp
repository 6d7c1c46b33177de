#pragma once

#include <map>
#include <string>
#include <vector>

#include "wcad/tensor.hpp"

namespace wcad {

// Plain gradient descent: p <- p - lr * grad. Throws NumericError on any
// non-finite gradient before touching a single parameter.
class SgdOptimizer {
  public:
    explicit SgdOptimizer(float lr) : lr_(lr) {}
    void step(ParamStore& params);
    float lr() const { return lr_; }

  private:
    float lr_;
};

// Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8 defaults).
// Moment state is keyed by parameter name.
class AdamOptimizer {
  public:
    explicit AdamOptimizer(float lr, float beta1 = 0.9f, float beta2 = 0.999f, float eps = 1e-8f)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(ParamStore& params);
    int steps_taken() const { return t_; }

  private:
    struct Moments {
        std::vector<float> m, v;
    };
    float lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::map<std::string, Moments> state_;
};

}  // namespace wcad
