#include "wcad/diffusion.hpp"

#include <cmath>

#include "wcad/ops.hpp"
#include "wcad/rng.hpp"

namespace wcad {

Tensor training_loss(const DenoiserFn& model, const Tensor& x0, int t, const Tensor& eta,
                     const NoiseSchedule& sched) {
    Tensor x_t = forward_diffuse(x0, t, eta, sched);
    Tensor predicted = model(x_t, t);
    if (!same_shape(predicted.shape(), eta.shape())) {
        throw ShapeError("training_loss: model output " + shape_str(predicted.shape()) +
                         " != noise shape " + shape_str(eta.shape()));
    }
    Tensor residual = sub(predicted, eta);
    return mean_all(mul(residual, residual));
}

Tensor sample_start_noise(const Shape& shape, uint64_t seed) {
    if (shape.size() != 4) {
        throw ShapeError("sample_start_noise: expected [B,C,H,W], got " + shape_str(shape));
    }
    Tensor x = Tensor::zeros(shape);
    size_t per = x.numel() / static_cast<size_t>(shape[0]);
    float* xp = x.data();
    for (int b = 0; b < shape[0]; ++b) {
        Rng rng(seed + static_cast<uint64_t>(b));
        float* dst = xp + static_cast<size_t>(b) * per;
        for (size_t i = 0; i < per; ++i) dst[i] = rng.normal();
    }
    return x;
}

Tensor ddim_sample(const DenoiserFn& model, const NoiseSchedule& sched, int steps,
                   const Shape& shape, uint64_t seed) {
    int T = sched.steps;
    if (steps < 1 || steps > T) {
        throw ConfigError("ddim_sample: steps=" + std::to_string(steps) + " outside [1," +
                          std::to_string(T) + "]");
    }
    int stride = T / steps;
    Tensor x = sample_start_noise(shape, seed);
    size_t n = x.numel();
    for (int i = 0; i < steps; ++i) {
        int t = T - i * stride;
        int t_next = (i + 1 < steps) ? T - (i + 1) * stride : 0;
        Tensor eps = model(x, t);
        double ab = sched.alpha_bar(t);
        double ab_next = sched.alpha_bar(t_next);
        float inv_sa = static_cast<float>(1.0 / std::sqrt(ab));
        float sb = static_cast<float>(std::sqrt(1.0 - ab));
        float sa_n = static_cast<float>(std::sqrt(ab_next));
        float sb_n = static_cast<float>(std::sqrt(1.0 - ab_next));
        Tensor next = Tensor::zeros(shape);
        const float* xp = x.data();
        const float* ep = eps.data();
        float* np = next.data();
        for (size_t j = 0; j < n; ++j) {
            float x0_hat = (xp[j] - sb * ep[j]) * inv_sa;
            np[j] = sa_n * x0_hat + sb_n * ep[j];
        }
        x = next;
    }
    return x;
}

Tensor ddpm_sample(const DenoiserFn& model, const NoiseSchedule& sched, const Shape& shape,
                   uint64_t seed) {
    if (shape.size() != 4) {
        throw ShapeError("ddpm_sample: expected [B,C,H,W], got " + shape_str(shape));
    }
    int T = sched.steps;
    Tensor x = sample_start_noise(shape, seed);
    size_t per = x.numel() / static_cast<size_t>(shape[0]);

    std::vector<Rng> streams;
    streams.reserve(static_cast<size_t>(shape[0]));
    for (int b = 0; b < shape[0]; ++b) {
        streams.emplace_back(seed + kDdpmNoiseStreamOffset + static_cast<uint64_t>(b));
    }

    for (int t = T; t >= 1; --t) {
        Tensor eps = model(x, t);
        double b_t = sched.beta(t);
        double ab = sched.alpha_bar(t);
        float coeff = static_cast<float>(b_t / std::sqrt(1.0 - ab));
        float inv_sqrt_a = static_cast<float>(1.0 / std::sqrt(1.0 - b_t));
        float sigma = static_cast<float>(std::sqrt(b_t));
        Tensor next = Tensor::zeros(shape);
        const float* xp = x.data();
        const float* ep = eps.data();
        float* np = next.data();
        for (int b = 0; b < shape[0]; ++b) {
            float* dst = np + static_cast<size_t>(b) * per;
            const float* xs = xp + static_cast<size_t>(b) * per;
            const float* es = ep + static_cast<size_t>(b) * per;
            for (size_t j = 0; j < per; ++j) {
                float mean = inv_sqrt_a * (xs[j] - coeff * es[j]);
                dst[j] = (t > 1) ? mean + sigma * streams[static_cast<size_t>(b)].normal() : mean;
            }
        }
        x = next;
    }
    return x;
}

}  // namespace wcad
