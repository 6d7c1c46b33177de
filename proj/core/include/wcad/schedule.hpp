#pragma once

#include <vector>

#include "wcad/tensor.hpp"

namespace wcad {

// Variance schedule {beta_t} with cumulative signal coefficients
// abar_t = prod_{i<=t} (1 - beta_i). Stored in double; abar(0) == 1.
struct NoiseSchedule {
    int steps = 0;  // T
    std::vector<double> betas;       // betas[t-1], t in [1,T]
    std::vector<double> alpha_bars;  // alpha_bars[t-1]

    double beta(int t) const;       // t in [1,T]
    double alpha_bar(int t) const;  // t in [0,T]
};

// Linear beta interpolation from beta_start to beta_end inclusive
// (T == 1 uses beta_start).
NoiseSchedule make_schedule(int T, double beta_start, double beta_end);

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eta
Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eta, const NoiseSchedule& sched);
// same affine map with an explicitly injected abar (degenerate-limit tests)
Tensor forward_diffuse_with(double alpha_bar, const Tensor& x0, const Tensor& eta);

}  // namespace wcad
