#include "wcad/optim.hpp"

#include <cmath>

#include "wcad/error.hpp"

namespace wcad {

namespace {

void check_grads_finite(const ParamStore& params) {
    for (const auto& [name, p] : params) {
        const float* g = p.grad_data();
        if (!g) throw NumericError("parameter " + name + " has no gradient buffer");
        for (size_t i = 0; i < p.numel(); ++i) {
            if (!std::isfinite(g[i])) {
                throw NumericError("non-finite gradient in parameter " + name +
                                   "; aborting optimizer step");
            }
        }
    }
}

}  // namespace

void SgdOptimizer::step(ParamStore& params) {
    check_grads_finite(params);
    for (auto& [name, p] : params) {
        float* w = p.data();
        const float* g = p.grad_data();
        for (size_t i = 0; i < p.numel(); ++i) w[i] -= lr_ * g[i];
    }
}

void AdamOptimizer::step(ParamStore& params) {
    check_grads_finite(params);
    ++t_;
    double bc1 = 1.0 - std::pow(static_cast<double>(beta1_), t_);
    double bc2 = 1.0 - std::pow(static_cast<double>(beta2_), t_);
    for (auto& [name, p] : params) {
        Moments& mom = state_[name];
        if (mom.m.empty()) {
            mom.m.assign(p.numel(), 0.0f);
            mom.v.assign(p.numel(), 0.0f);
        }
        float* w = p.data();
        const float* g = p.grad_data();
        for (size_t i = 0; i < p.numel(); ++i) {
            float gi = g[i];
            mom.m[i] = beta1_ * mom.m[i] + (1.0f - beta1_) * gi;
            mom.v[i] = beta2_ * mom.v[i] + (1.0f - beta2_) * gi * gi;
            double mhat = mom.m[i] / bc1;
            double vhat = mom.v[i] / bc2;
            w[i] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
        }
    }
}

}  // namespace wcad
