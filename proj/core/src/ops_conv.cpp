#include <vector>

#include "wcad/gemm.hpp"
#include "wcad/ops.hpp"
#include "wcad/parallel.hpp"

namespace wcad {

namespace {

struct ConvDims {
    int batch, cin, h, w;
    int cout, kh, kw;
    int stride, pad;
    int ho, wo;
    size_t ck() const { return static_cast<size_t>(cin) * kh * kw; }
    size_t hw() const { return static_cast<size_t>(ho) * wo; }
    size_t in_plane() const { return static_cast<size_t>(cin) * h * w; }
    size_t out_plane() const { return static_cast<size_t>(cout) * ho * wo; }
    bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

// cols: [cin*kh*kw, ho*wo]
void im2col(const float* x, const ConvDims& d, float* cols) {
    size_t hw = d.hw();
    for (int ci = 0; ci < d.cin; ++ci) {
        const float* xc = x + static_cast<size_t>(ci) * d.h * d.w;
        for (int r = 0; r < d.kh; ++r) {
            for (int q = 0; q < d.kw; ++q) {
                float* row = cols + ((static_cast<size_t>(ci) * d.kh + r) * d.kw + q) * hw;
                for (int oh = 0; oh < d.ho; ++oh) {
                    int ih = oh * d.stride - d.pad + r;
                    float* dst = row + static_cast<size_t>(oh) * d.wo;
                    if (ih < 0 || ih >= d.h) {
                        for (int ow = 0; ow < d.wo; ++ow) dst[ow] = 0.0f;
                        continue;
                    }
                    const float* src = xc + static_cast<size_t>(ih) * d.w;
                    for (int ow = 0; ow < d.wo; ++ow) {
                        int iw = ow * d.stride - d.pad + q;
                        dst[ow] = (iw >= 0 && iw < d.w) ? src[iw] : 0.0f;
                    }
                }
            }
        }
    }
}

// colsT: [ho*wo, cin*kh*kw]
void im2col_t(const float* x, const ConvDims& d, float* colsT) {
    size_t ck = d.ck();
    for (int oh = 0; oh < d.ho; ++oh) {
        for (int ow = 0; ow < d.wo; ++ow) {
            float* row = colsT + (static_cast<size_t>(oh) * d.wo + ow) * ck;
            size_t idx = 0;
            for (int ci = 0; ci < d.cin; ++ci) {
                const float* xc = x + static_cast<size_t>(ci) * d.h * d.w;
                for (int r = 0; r < d.kh; ++r) {
                    int ih = oh * d.stride - d.pad + r;
                    for (int q = 0; q < d.kw; ++q, ++idx) {
                        int iw = ow * d.stride - d.pad + q;
                        row[idx] = (ih >= 0 && ih < d.h && iw >= 0 && iw < d.w)
                                       ? xc[static_cast<size_t>(ih) * d.w + iw]
                                       : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im_add(const float* cols, const ConvDims& d, float* dx) {
    size_t hw = d.hw();
    for (int ci = 0; ci < d.cin; ++ci) {
        float* xc = dx + static_cast<size_t>(ci) * d.h * d.w;
        for (int r = 0; r < d.kh; ++r) {
            for (int q = 0; q < d.kw; ++q) {
                const float* row = cols + ((static_cast<size_t>(ci) * d.kh + r) * d.kw + q) * hw;
                for (int oh = 0; oh < d.ho; ++oh) {
                    int ih = oh * d.stride - d.pad + r;
                    if (ih < 0 || ih >= d.h) continue;
                    const float* src = row + static_cast<size_t>(oh) * d.wo;
                    float* dst = xc + static_cast<size_t>(ih) * d.w;
                    for (int ow = 0; ow < d.wo; ++ow) {
                        int iw = ow * d.stride - d.pad + q;
                        if (iw >= 0 && iw < d.w) dst[iw] += src[ow];
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const std::optional<Tensor>& bias,
              int stride, int padding) {
    if (input.rank() != 4) {
        throw ShapeError("conv2d: input must be rank 4 [B,C,H,W], got " + shape_str(input.shape()));
    }
    if (kernel.rank() != 4) {
        throw ShapeError("conv2d: kernel must be rank 4 [Cout,Cin,kh,kw], got " +
                         shape_str(kernel.shape()));
    }
    if (stride < 1) throw ShapeError("conv2d: stride must be >= 1, got " + std::to_string(stride));
    if (padding < 0) throw ShapeError("conv2d: padding must be >= 0, got " + std::to_string(padding));

    ConvDims d;
    d.batch = input.dim(0);
    d.cin = input.dim(1);
    d.h = input.dim(2);
    d.w = input.dim(3);
    d.cout = kernel.dim(0);
    d.kh = kernel.dim(2);
    d.kw = kernel.dim(3);
    d.stride = stride;
    d.pad = padding;

    if (kernel.dim(1) != d.cin) {
        throw ShapeError("conv2d: kernel input channels " + std::to_string(kernel.dim(1)) +
                         " != input channels " + std::to_string(d.cin));
    }
    if (d.kh > d.h + 2 * padding) {
        throw ShapeError("conv2d: kernel height " + std::to_string(d.kh) +
                         " exceeds padded input height " + std::to_string(d.h + 2 * padding));
    }
    if (d.kw > d.w + 2 * padding) {
        throw ShapeError("conv2d: kernel width " + std::to_string(d.kw) +
                         " exceeds padded input width " + std::to_string(d.w + 2 * padding));
    }
    if (bias && (bias->rank() != 1 || bias->dim(0) != d.cout)) {
        throw ShapeError("conv2d: bias shape " + shape_str(bias->shape()) + " != [" +
                         std::to_string(d.cout) + "]");
    }

    d.ho = (d.h + 2 * padding - d.kh) / stride + 1;
    d.wo = (d.w + 2 * padding - d.kw) / stride + 1;

    Tensor out = Tensor::zeros({d.batch, d.cout, d.ho, d.wo});
    const float* xp = input.data();
    const float* wp = kernel.data();
    float* op = out.data();
    const size_t hw = d.hw(), ck = d.ck();

    parallel_for(static_cast<size_t>(d.batch), [&](size_t b0, size_t b1) {
        BufferPtr scratch = d.pointwise() ? nullptr : make_buffer(ck * hw);
        for (size_t b = b0; b < b1; ++b) {
            const float* xb = xp + b * d.in_plane();
            const float* cols = xb;
            if (scratch) {
                im2col(xb, d, scratch->v.data());
                cols = scratch->v.data();
            }
            float* ob = op + b * d.out_plane();
            gemm_nn(wp, cols, ob, d.cout, static_cast<int>(hw), static_cast<int>(ck));
            if (bias) {
                const float* bp = bias->data();
                for (int o = 0; o < d.cout; ++o) {
                    float bv = bp[o];
                    float* orow = ob + static_cast<size_t>(o) * hw;
                    for (size_t i = 0; i < hw; ++i) orow[i] += bv;
                }
            }
        }
    });

    Tape* tp = Tape::active();
    bool bias_tracked = bias && tp && tp->tracked(*bias);
    if (tp && (tp->tracked(input) || tp->tracked(kernel) || bias_tracked)) {
        int idx = tp->input_id(input);
        int idk = tp->input_id(kernel);
        int idb = bias ? tp->input_id(*bias) : -1;
        BufferPtr xbuf = input.buffer(), wbuf = kernel.buffer();
        out.node = tp->record(out.numel(), [=](Tape& t, const float* g) {
            if (idx >= 0) {
                float* gx = t.grad_of(idx);
                parallel_for(static_cast<size_t>(d.batch), [&](size_t b0, size_t b1) {
                    BufferPtr scratch = d.pointwise() ? nullptr : make_buffer(ck * hw);
                    for (size_t b = b0; b < b1; ++b) {
                        const float* gb = g + b * d.out_plane();
                        float* gxb = gx + b * d.in_plane();
                        if (!scratch) {
                            gemm_tn(wbuf->v.data(), gb, gxb, static_cast<int>(ck),
                                    static_cast<int>(hw), d.cout, true);
                        } else {
                            gemm_tn(wbuf->v.data(), gb, scratch->v.data(), static_cast<int>(ck),
                                    static_cast<int>(hw), d.cout, false);
                            col2im_add(scratch->v.data(), d, gxb);
                        }
                    }
                });
            }
            if (idk >= 0) {
                float* gw = t.grad_of(idk);
                size_t wn = static_cast<size_t>(d.cout) * ck;
                std::vector<double> acc(wn, 0.0);
                BufferPtr scratch = make_buffer(hw * ck);
                for (int b = 0; b < d.batch; ++b) {
                    im2col_t(xbuf->v.data() + static_cast<size_t>(b) * d.in_plane(), d,
                             scratch->v.data());
                    gemm_nn_acc(g + static_cast<size_t>(b) * d.out_plane(), scratch->v.data(),
                                acc.data(), d.cout, static_cast<int>(ck), static_cast<int>(hw));
                }
                for (size_t i = 0; i < wn; ++i) gw[i] += static_cast<float>(acc[i]);
            }
            if (idb >= 0) {
                float* gb = t.grad_of(idb);
                for (int o = 0; o < d.cout; ++o) {
                    double acc = 0.0;
                    for (int b = 0; b < d.batch; ++b) {
                        const float* grow = g + static_cast<size_t>(b) * d.out_plane() +
                                            static_cast<size_t>(o) * hw;
                        for (size_t i = 0; i < hw; ++i) acc += grow[i];
                    }
                    gb[o] += static_cast<float>(acc);
                }
            }
        });
        out.owner = tp;
    }
    return out;
}

}  // namespace wcad
