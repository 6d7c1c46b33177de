#include "wcad/ops.hpp"

namespace wcad {

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, float eps) {
    NoGradGuard no_tape;
    Tensor probe = x.deep_clone();
    Tensor grad = Tensor::zeros(x.shape());
    float* pp = probe.data();
    float* gp = grad.data();
    size_t n = x.numel();
    for (size_t i = 0; i < n; ++i) {
        float orig = pp[i];
        // the perturbation actually applied after f32 rounding
        float hi = orig + eps;
        float lo = orig - eps;
        pp[i] = hi;
        double fp = f(probe);
        pp[i] = lo;
        double fm = f(probe);
        pp[i] = orig;
        gp[i] = static_cast<float>((fp - fm) /
                                   (static_cast<double>(hi) - static_cast<double>(lo)));
    }
    return grad;
}

}  // namespace wcad
