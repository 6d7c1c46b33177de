#include "wcad/schedule.hpp"

#include <cmath>

#include "wcad/error.hpp"

namespace wcad {

double NoiseSchedule::beta(int t) const {
    if (t < 1 || t > steps) {
        throw ShapeError("schedule: t=" + std::to_string(t) + " outside [1," +
                         std::to_string(steps) + "]");
    }
    return betas[static_cast<size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t == 0) return 1.0;
    if (t < 0 || t > steps) {
        throw ShapeError("schedule: t=" + std::to_string(t) + " outside [0," +
                         std::to_string(steps) + "]");
    }
    return alpha_bars[static_cast<size_t>(t - 1)];
}

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
    if (T < 1) throw ConfigError("make_schedule: T must be >= 1, got " + std::to_string(T));
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
        throw ConfigError("make_schedule: need 0 < beta_start <= beta_end < 1, got [" +
                          std::to_string(beta_start) + ", " + std::to_string(beta_end) + "]");
    }
    NoiseSchedule s;
    s.steps = T;
    s.betas.resize(static_cast<size_t>(T));
    s.alpha_bars.resize(static_cast<size_t>(T));
    double running = 1.0;
    for (int t = 0; t < T; ++t) {
        double b = (T == 1) ? beta_start
                            : beta_start + (beta_end - beta_start) * t / static_cast<double>(T - 1);
        s.betas[static_cast<size_t>(t)] = b;
        running *= (1.0 - b);
        s.alpha_bars[static_cast<size_t>(t)] = running;
    }
    return s;
}

Tensor forward_diffuse_with(double alpha_bar, const Tensor& x0, const Tensor& eta) {
    if (!same_shape(x0.shape(), eta.shape())) {
        throw ShapeError("forward_diffuse: eta shape " + shape_str(eta.shape()) +
                         " != x0 shape " + shape_str(x0.shape()));
    }
    float a = static_cast<float>(std::sqrt(alpha_bar));
    float b = static_cast<float>(std::sqrt(1.0 - alpha_bar));
    Tensor out = Tensor::zeros(x0.shape());
    const float* xp = x0.data();
    const float* ep = eta.data();
    float* op = out.data();
    for (size_t i = 0; i < out.numel(); ++i) op[i] = a * xp[i] + b * ep[i];
    return out;
}

Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eta, const NoiseSchedule& sched) {
    return forward_diffuse_with(sched.alpha_bar(t), x0, eta);
}

}  // namespace wcad
