#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "wcad/ops.hpp"
#include "wcad/rng.hpp"
#include "wcad/tape.hpp"
#include "wcad/tensor.hpp"

namespace wcad::test {

inline Tensor random_tensor(const Shape& shape, Rng& rng, float lo = -2.0f, float hi = 2.0f) {
    return Tensor::uniform(shape, lo, hi, rng);
}

// independent six-loop convolution oracle, double accumulation
inline Tensor conv2d_oracle(const Tensor& x, const Tensor& k, const Tensor* bias, int stride,
                            int pad) {
    int b = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    int cout = k.dim(0), kh = k.dim(2), kw = k.dim(3);
    int ho = (h + 2 * pad - kh) / stride + 1;
    int wo = (w + 2 * pad - kw) / stride + 1;
    Tensor out = Tensor::zeros({b, cout, ho, wo});
    for (int n = 0; n < b; ++n) {
        for (int o = 0; o < cout; ++o) {
            for (int oh = 0; oh < ho; ++oh) {
                for (int ow = 0; ow < wo; ++ow) {
                    double acc = bias ? bias->data()[o] : 0.0;
                    for (int ci = 0; ci < cin; ++ci) {
                        for (int r = 0; r < kh; ++r) {
                            for (int q = 0; q < kw; ++q) {
                                int ih = oh * stride - pad + r;
                                int iw = ow * stride - pad + q;
                                if (ih < 0 || ih >= h || iw < 0 || iw >= w) continue;
                                acc += static_cast<double>(
                                           x.data()[((static_cast<size_t>(n) * cin + ci) * h + ih) * w +
                                                    iw]) *
                                       k.data()[((static_cast<size_t>(o) * cin + ci) * kh + r) * kw + q];
                            }
                        }
                    }
                    out.data()[((static_cast<size_t>(n) * cout + o) * ho + oh) * wo + ow] =
                        static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

// triple-loop batched matmul oracle
inline Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
    int r = a.rank();
    int m = a.dim(r - 2), k = a.dim(r - 1), n = b.dim(r - 1);
    size_t nb = a.numel() / (static_cast<size_t>(m) * k);
    Shape out_shape = a.shape();
    out_shape[static_cast<size_t>(r - 1)] = n;
    Tensor out = Tensor::zeros(out_shape);
    for (size_t q = 0; q < nb; ++q) {
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int kk = 0; kk < k; ++kk) {
                    acc += static_cast<double>(a.data()[(q * m + i) * k + kk]) *
                           b.data()[(q * k + kk) * n + j];
                }
                out.data()[(q * m + i) * n + j] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

inline double rel_err(float a, float b) {
    double denom = std::max({1e-4, std::abs(static_cast<double>(a)), std::abs(static_cast<double>(b))});
    return std::abs(static_cast<double>(a) - static_cast<double>(b)) / denom;
}

inline double max_rel_err(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.numel(); ++i) {
        worst = std::max(worst, rel_err(a.data()[i], b.data()[i]));
    }
    return worst;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.numel(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
    }
    return worst;
}

inline bool bit_identical(const Tensor& a, const Tensor& b) {
    if (a.numel() != b.numel()) return false;
    for (size_t i = 0; i < a.numel(); ++i) {
        if (a.data()[i] != b.data()[i]) return false;
    }
    return true;
}

// Gradient check for an op f: the reverse-mode gradient of a fixed random
// output projection is compared against central finite differences along
// random direction probes (eps 1e-3, >= 5 probes). The reference side uses
// the perturbation actually applied after f32 rounding, which keeps the
// check meaningful at single precision.
struct GradCheck {
    Tensor ad_grad;
    double max_rel;
};

inline GradCheck grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                            uint64_t seed, float eps = 1e-3f, int probes = 5) {
    Rng rng(seed);
    Tensor probe = x.deep_clone();
    probe.set_requires_grad(true);
    probe.zero_grad();

    std::vector<float> weights;
    {
        NoGradGuard no_tape;
        Tensor out0 = f(probe);
        weights.resize(out0.numel());
        for (auto& w : weights) w = rng.uniform(-1.0f, 1.0f);
    }

    {
        Tape tape;
        TapeGuard guard(tape);
        Tensor out = f(probe);
        Tensor w = Tensor::from(out.shape(), weights);
        Tensor loss = sum_all(mul(out, w));
        tape.backward(loss);
    }
    Tensor ad = Tensor::zeros(x.shape());
    std::copy(probe.grad_data(), probe.grad_data() + probe.numel(), ad.data());

    auto phi = [&](const Tensor& xx) {
        NoGradGuard no_tape;
        Tensor out = f(xx);
        double acc = 0.0;
        for (size_t i = 0; i < out.numel(); ++i) {
            acc += static_cast<double>(out.data()[i]) * weights[i];
        }
        return acc;
    };

    size_t n = x.numel();
    GradCheck result{ad, 0.0};
    Tensor hi = probe.deep_clone();
    Tensor lo = probe.deep_clone();
    for (int p = 0; p < probes; ++p) {
        // random magnitudes, signs aligned with the reported gradient so the
        // directional derivative cannot cancel to the f32 noise floor
        double ad_dir = 0.0;
        for (size_t i = 0; i < n; ++i) {
            float v = rng.uniform(0.25f, 1.0f);
            if (ad.data()[i] < 0.0f) v = -v;
            float xp = probe.data()[i] + eps * v;
            float xm = probe.data()[i] - eps * v;
            hi.data()[i] = xp;
            lo.data()[i] = xm;
            ad_dir += static_cast<double>(ad.data()[i]) *
                      (static_cast<double>(xp) - static_cast<double>(xm));
        }
        double fd_dir = phi(hi) - phi(lo);
        double denom = std::max({1e-4 * 2.0 * static_cast<double>(eps), std::abs(ad_dir),
                                 std::abs(fd_dir)});
        result.max_rel = std::max(result.max_rel, std::abs(ad_dir - fd_dir) / denom);
    }
    return result;
}

// Same directional check for a parameter used inside a model closure: the
// reverse-mode gradient is read from the parameter's own grad buffer and the
// finite-difference side mutates the parameter values in place.
inline GradCheck grad_check_param(const std::function<Tensor()>& run, Tensor& param,
                                  uint64_t seed, float eps = 1e-3f, int probes = 5) {
    Rng rng(seed);
    std::vector<float> weights;
    {
        NoGradGuard no_tape;
        Tensor out0 = run();
        weights.resize(out0.numel());
        for (auto& w : weights) w = rng.uniform(-1.0f, 1.0f);
    }

    bool was_trainable = param.requires_grad();
    param.set_requires_grad(true);
    param.zero_grad();
    {
        Tape tape;
        TapeGuard guard(tape);
        Tensor out = run();
        Tensor w = Tensor::from(out.shape(), weights);
        Tensor loss = sum_all(mul(out, w));
        tape.backward(loss);
    }
    Tensor ad = Tensor::zeros(param.shape());
    std::copy(param.grad_data(), param.grad_data() + param.numel(), ad.data());

    auto phi = [&]() {
        NoGradGuard no_tape;
        Tensor out = run();
        double acc = 0.0;
        for (size_t i = 0; i < out.numel(); ++i) {
            acc += static_cast<double>(out.data()[i]) * weights[i];
        }
        return acc;
    };

    size_t n = param.numel();
    std::vector<float> orig(param.data(), param.data() + n);
    GradCheck result{ad, 0.0};
    for (int p = 0; p < probes; ++p) {
        std::vector<float> hi(n), lo(n);
        double ad_dir = 0.0;
        for (size_t i = 0; i < n; ++i) {
            float v = rng.uniform(0.25f, 1.0f);
            if (ad.data()[i] < 0.0f) v = -v;
            hi[i] = orig[i] + eps * v;
            lo[i] = orig[i] - eps * v;
            ad_dir += static_cast<double>(ad.data()[i]) *
                      (static_cast<double>(hi[i]) - static_cast<double>(lo[i]));
        }
        std::copy(hi.begin(), hi.end(), param.data());
        double fp = phi();
        std::copy(lo.begin(), lo.end(), param.data());
        double fm = phi();
        std::copy(orig.begin(), orig.end(), param.data());
        double fd_dir = fp - fm;
        double denom = std::max({1e-4 * 2.0 * static_cast<double>(eps), std::abs(ad_dir),
                                 std::abs(fd_dir)});
        result.max_rel = std::max(result.max_rel, std::abs(ad_dir - fd_dir) / denom);
    }
    param.set_requires_grad(was_trainable);
    param.zero_grad();
    return result;
}

}  // namespace wcad::test
