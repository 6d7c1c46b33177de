#include <cmath>
#include <vector>

#include "wcad/ops.hpp"

namespace wcad {

Tensor group_norm(const Tensor& t, int groups, const Tensor& gain, const Tensor& bias, float eps) {
    if (t.rank() != 4) {
        throw ShapeError("group_norm: input must be rank 4, got " + shape_str(t.shape()));
    }
    int bsz = t.dim(0), c = t.dim(1), h = t.dim(2), w = t.dim(3);
    if (groups < 1 || c % groups != 0) {
        throw ShapeError("group_norm: channels " + std::to_string(c) + " not divisible by groups " +
                         std::to_string(groups));
    }
    if (gain.rank() != 1 || gain.dim(0) != c || bias.rank() != 1 || bias.dim(0) != c) {
        throw ShapeError("group_norm: gain/bias must be [" + std::to_string(c) + "], got " +
                         shape_str(gain.shape()) + " and " + shape_str(bias.shape()));
    }

    int cpg = c / groups;
    size_t plane = static_cast<size_t>(h) * w;
    size_t group_elems = static_cast<size_t>(cpg) * plane;

    Tensor out = Tensor::zeros(t.shape());
    const float* xp = t.data();
    const float* gp = gain.data();
    const float* bp = bias.data();
    float* op = out.data();

    // saved for backward
    auto stats = std::make_shared<std::vector<double>>(static_cast<size_t>(bsz) * groups * 2);

    for (int n = 0; n < bsz; ++n) {
        for (int g = 0; g < groups; ++g) {
            size_t base = (static_cast<size_t>(n) * c + static_cast<size_t>(g) * cpg) * plane;
            double mean = 0.0;
            for (size_t i = 0; i < group_elems; ++i) mean += xp[base + i];
            mean /= static_cast<double>(group_elems);
            double var = 0.0;
            for (size_t i = 0; i < group_elems; ++i) {
                double d = xp[base + i] - mean;
                var += d * d;
            }
            var /= static_cast<double>(group_elems);
            double invstd = 1.0 / std::sqrt(var + static_cast<double>(eps));
            (*stats)[(static_cast<size_t>(n) * groups + g) * 2] = mean;
            (*stats)[(static_cast<size_t>(n) * groups + g) * 2 + 1] = invstd;
            for (int cc = 0; cc < cpg; ++cc) {
                int ch = g * cpg + cc;
                size_t off = base + static_cast<size_t>(cc) * plane;
                for (size_t i = 0; i < plane; ++i) {
                    double xhat = (xp[off + i] - mean) * invstd;
                    op[off + i] = static_cast<float>(xhat * gp[ch] + bp[ch]);
                }
            }
        }
    }

    Tape* tp = Tape::active();
    if (tp && (tp->tracked(t) || tp->tracked(gain) || tp->tracked(bias))) {
        int idx = tp->input_id(t), idg = tp->input_id(gain), idb = tp->input_id(bias);
        BufferPtr xbuf = t.buffer(), gainbuf = gain.buffer();
        out.node = tp->record(out.numel(), [=](Tape& tape, const float* g) {
            float* gx = (idx >= 0) ? tape.grad_of(idx) : nullptr;
            float* gg = (idg >= 0) ? tape.grad_of(idg) : nullptr;
            float* gb = (idb >= 0) ? tape.grad_of(idb) : nullptr;
            for (int n = 0; n < bsz; ++n) {
                for (int grp = 0; grp < groups; ++grp) {
                    size_t base = (static_cast<size_t>(n) * c + static_cast<size_t>(grp) * cpg) * plane;
                    double mean = (*stats)[(static_cast<size_t>(n) * groups + grp) * 2];
                    double invstd = (*stats)[(static_cast<size_t>(n) * groups + grp) * 2 + 1];
                    if (gx) {
                        double sum1 = 0.0, sum2 = 0.0;
                        for (int cc = 0; cc < cpg; ++cc) {
                            int ch = grp * cpg + cc;
                            size_t off = base + static_cast<size_t>(cc) * plane;
                            double wv = gainbuf->v[static_cast<size_t>(ch)];
                            for (size_t i = 0; i < plane; ++i) {
                                double dxhat = g[off + i] * wv;
                                double xhat = (xbuf->v[off + i] - mean) * invstd;
                                sum1 += dxhat;
                                sum2 += dxhat * xhat;
                            }
                        }
                        double inv_m = 1.0 / static_cast<double>(group_elems);
                        for (int cc = 0; cc < cpg; ++cc) {
                            int ch = grp * cpg + cc;
                            size_t off = base + static_cast<size_t>(cc) * plane;
                            double wv = gainbuf->v[static_cast<size_t>(ch)];
                            for (size_t i = 0; i < plane; ++i) {
                                double dxhat = g[off + i] * wv;
                                double xhat = (xbuf->v[off + i] - mean) * invstd;
                                gx[off + i] += static_cast<float>(
                                    invstd * (dxhat - sum1 * inv_m - xhat * sum2 * inv_m));
                            }
                        }
                    }
                    if (gg || gb) {
                        for (int cc = 0; cc < cpg; ++cc) {
                            int ch = grp * cpg + cc;
                            size_t off = base + static_cast<size_t>(cc) * plane;
                            double acc_g = 0.0, acc_b = 0.0;
                            for (size_t i = 0; i < plane; ++i) {
                                double xhat = (xbuf->v[off + i] - mean) * invstd;
                                acc_g += g[off + i] * xhat;
                                acc_b += g[off + i];
                            }
                            if (gg) gg[ch] += static_cast<float>(acc_g);
                            if (gb) gb[ch] += static_cast<float>(acc_b);
                        }
                    }
                }
            }
        });
        out.owner = tp;
    }
    return out;
}

}  // namespace wcad
