#include <cstring>
#include <vector>

#include "wcad/gemm.hpp"
#include "wcad/ops.hpp"
#include "wcad/parallel.hpp"

namespace wcad {

// ---------------------------------------------------------------------------
// GEMM cores
// ---------------------------------------------------------------------------

namespace {

// Outer-product formulation: streams b once, keeps an f64 accumulator block
// for the assigned rows. Summation order over k is ascending for every
// output element.
void gemm_nn_rows(const float* a, const float* b, float* c, int n, int k, int i0, int i1,
                  bool add) {
    int rows = i1 - i0;
    std::vector<double> acc(static_cast<size_t>(rows) * n, 0.0);
    for (int kk = 0; kk < k; ++kk) {
        const float* brow = b + static_cast<size_t>(kk) * n;
        for (int i = 0; i < rows; ++i) {
            double av = a[static_cast<size_t>(i0 + i) * k + kk];
            if (av == 0.0) continue;
            double* arow = acc.data() + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) arow[j] += av * brow[j];
        }
    }
    for (int i = 0; i < rows; ++i) {
        float* crow = c + static_cast<size_t>(i0 + i) * n;
        const double* arow = acc.data() + static_cast<size_t>(i) * n;
        if (add) {
            for (int j = 0; j < n; ++j) crow[j] += static_cast<float>(arow[j]);
        } else {
            for (int j = 0; j < n; ++j) crow[j] = static_cast<float>(arow[j]);
        }
    }
}

void gemm_tn_rows(const float* a, const float* b, float* c, int m, int n, int k, int i0, int i1,
                  bool add) {
    std::vector<double> acc(static_cast<size_t>(n), 0.0);
    for (int i = i0; i < i1; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int kk = 0; kk < k; ++kk) {
            double av = a[static_cast<size_t>(kk) * m + i];
            if (av == 0.0) continue;
            const float* brow = b + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) acc[j] += av * brow[j];
        }
        float* crow = c + static_cast<size_t>(i) * n;
        if (add) {
            for (int j = 0; j < n; ++j) crow[j] += static_cast<float>(acc[j]);
        } else {
            for (int j = 0; j < n; ++j) crow[j] = static_cast<float>(acc[j]);
        }
    }
}

void gemm_nt_rows(const float* a, const float* b, float* c, int n, int k, int i0, int i1,
                  bool add) {
    for (int i = i0; i < i1; ++i) {
        const float* arow = a + static_cast<size_t>(i) * k;
        float* crow = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const float* brow = b + static_cast<size_t>(j) * k;
            double acc = 0.0;
            for (int kk = 0; kk < k; ++kk) acc += static_cast<double>(arow[kk]) * brow[kk];
            if (add) {
                crow[j] += static_cast<float>(acc);
            } else {
                crow[j] = static_cast<float>(acc);
            }
        }
    }
}

constexpr size_t kParallelFlopCutoff = 1 << 16;

}  // namespace

void gemm_nn(const float* a, const float* b, float* c, int m, int n, int k, bool add) {
    size_t work = static_cast<size_t>(m) * n * k;
    if (work < kParallelFlopCutoff || m == 1) {
        gemm_nn_rows(a, b, c, n, k, 0, m, add);
        return;
    }
    parallel_for(static_cast<size_t>(m), [&](size_t i0, size_t i1) {
        gemm_nn_rows(a, b, c, n, k, static_cast<int>(i0), static_cast<int>(i1), add);
    });
}

void gemm_nn_acc(const float* a, const float* b, double* c, int m, int n, int k) {
    parallel_for(static_cast<size_t>(m), [&](size_t i0, size_t i1) {
        for (size_t i = i0; i < i1; ++i) {
            double* crow = c + i * n;
            for (int kk = 0; kk < k; ++kk) {
                double av = a[i * k + kk];
                if (av == 0.0) continue;
                const float* brow = b + static_cast<size_t>(kk) * n;
                for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    });
}

void gemm_tn(const float* a, const float* b, float* c, int m, int n, int k, bool add) {
    size_t work = static_cast<size_t>(m) * n * k;
    if (work < kParallelFlopCutoff || m == 1) {
        gemm_tn_rows(a, b, c, m, n, k, 0, m, add);
        return;
    }
    parallel_for(static_cast<size_t>(m), [&](size_t i0, size_t i1) {
        gemm_tn_rows(a, b, c, m, n, k, static_cast<int>(i0), static_cast<int>(i1), add);
    });
}

void gemm_nt(const float* a, const float* b, float* c, int m, int n, int k, bool add) {
    size_t work = static_cast<size_t>(m) * n * k;
    if (work < kParallelFlopCutoff || m == 1) {
        gemm_nt_rows(a, b, c, n, k, 0, m, add);
        return;
    }
    parallel_for(static_cast<size_t>(m), [&](size_t i0, size_t i1) {
        gemm_nt_rows(a, b, c, n, k, static_cast<int>(i0), static_cast<int>(i1), add);
    });
}

// ---------------------------------------------------------------------------
// batched_matmul
// ---------------------------------------------------------------------------

Tensor batched_matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() < 2 || b.rank() < 2) {
        throw ShapeError("batched_matmul needs rank >= 2, got " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    }
    if (a.rank() != b.rank()) {
        throw ShapeError("batched_matmul rank mismatch: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
    int r = a.rank();
    int m = a.dim(r - 2), ka = a.dim(r - 1);
    int kb = b.dim(r - 2), n = b.dim(r - 1);
    if (ka != kb) {
        throw ShapeError("batched_matmul inner dimension mismatch: " + std::to_string(ka) +
                         " vs " + std::to_string(kb));
    }
    size_t nb = 1;
    Shape out_shape;
    for (int i = 0; i < r - 2; ++i) {
        if (a.dim(i) != b.dim(i)) {
            throw ShapeError("batched_matmul leading dimension " + std::to_string(i) +
                             " mismatch: " + std::to_string(a.dim(i)) + " vs " +
                             std::to_string(b.dim(i)));
        }
        nb *= static_cast<size_t>(a.dim(i));
        out_shape.push_back(a.dim(i));
    }
    out_shape.push_back(m);
    out_shape.push_back(n);

    Tensor out = Tensor::zeros(out_shape);
    const float* ap = a.data();
    const float* bp = b.data();
    float* op = out.data();
    size_t as = static_cast<size_t>(m) * ka, bs = static_cast<size_t>(ka) * n,
           os = static_cast<size_t>(m) * n;
    parallel_for(nb, [&](size_t q0, size_t q1) {
        for (size_t q = q0; q < q1; ++q) {
            gemm_nn_rows(ap + q * as, bp + q * bs, op + q * os, n, ka, 0, m, false);
        }
    });

    Tape* tp = Tape::active();
    if (tp && (tp->tracked(a) || tp->tracked(b))) {
        int ida = tp->input_id(a), idb = tp->input_id(b);
        BufferPtr abuf = a.buffer(), bbuf = b.buffer();
        out.node = tp->record(out.numel(), [=](Tape& t, const float* g) {
            if (ida >= 0) {
                float* ga = t.grad_of(ida);
                for (size_t q = 0; q < nb; ++q) {
                    // dA = g * B^T
                    gemm_nt(g + q * os, bbuf->v.data() + q * bs, ga + q * as, m, ka, n, true);
                }
            }
            if (idb >= 0) {
                float* gb = t.grad_of(idb);
                for (size_t q = 0; q < nb; ++q) {
                    // dB = A^T * g
                    gemm_tn(abuf->v.data() + q * as, g + q * os, gb + q * bs, ka, n, m, true);
                }
            }
        });
        out.owner = tp;
    }
    return out;
}

Tensor transpose_last2(const Tensor& t) {
    if (t.rank() < 2) throw ShapeError("transpose_last2 needs rank >= 2, got " + shape_str(t.shape()));
    int r = t.rank();
    int m = t.dim(r - 2), n = t.dim(r - 1);
    Shape out_shape = t.shape();
    std::swap(out_shape[static_cast<size_t>(r - 2)], out_shape[static_cast<size_t>(r - 1)]);
    size_t nb = t.numel() / (static_cast<size_t>(m) * n);

    Tensor out = Tensor::zeros(out_shape);
    const float* xp = t.data();
    float* op = out.data();
    size_t stride = static_cast<size_t>(m) * n;
    for (size_t q = 0; q < nb; ++q) {
        const float* xq = xp + q * stride;
        float* oq = op + q * stride;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) oq[static_cast<size_t>(j) * m + i] = xq[static_cast<size_t>(i) * n + j];
        }
    }

    Tape* tp = Tape::active();
    if (tp && tp->tracked(t)) {
        int id = tp->input_id(t);
        out.node = tp->record(out.numel(), [=](Tape& tape, const float* g) {
            float* gx = tape.grad_of(id);
            for (size_t q = 0; q < nb; ++q) {
                const float* gq = g + q * stride;
                float* gxq = gx + q * stride;
                // g has shape [.., n, m]
                for (int j = 0; j < n; ++j) {
                    for (int i = 0; i < m; ++i) gxq[static_cast<size_t>(i) * n + j] += gq[static_cast<size_t>(j) * m + i];
                }
            }
        });
        out.owner = tp;
    }
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    if (x.rank() != 2 || w.rank() != 2) {
        throw ShapeError("linear expects rank-2 input and weight, got " + shape_str(x.shape()) +
                         " and " + shape_str(w.shape()));
    }
    int bsz = x.dim(0), kdim = x.dim(1);
    int ndim = w.dim(0);
    if (w.dim(1) != kdim) {
        throw ShapeError("linear weight inner dim " + std::to_string(w.dim(1)) +
                         " != input features " + std::to_string(kdim));
    }
    if (bias.rank() != 1 || bias.dim(0) != ndim) {
        throw ShapeError("linear bias shape " + shape_str(bias.shape()) + " != [" +
                         std::to_string(ndim) + "]");
    }

    Tensor out = Tensor::zeros({bsz, ndim});
    gemm_nt(x.data(), w.data(), out.data(), bsz, ndim, kdim);
    float* op = out.data();
    const float* bp = bias.data();
    for (int i = 0; i < bsz; ++i) {
        for (int j = 0; j < ndim; ++j) op[static_cast<size_t>(i) * ndim + j] += bp[j];
    }

    Tape* tp = Tape::active();
    if (tp && (tp->tracked(x) || tp->tracked(w) || tp->tracked(bias))) {
        int idx = tp->input_id(x), idw = tp->input_id(w), idb = tp->input_id(bias);
        BufferPtr xbuf = x.buffer(), wbuf = w.buffer();
        out.node = tp->record(out.numel(), [=](Tape& t, const float* g) {
            if (idx >= 0) gemm_nn(g, wbuf->v.data(), t.grad_of(idx), bsz, kdim, ndim, true);
            if (idw >= 0) gemm_tn(g, xbuf->v.data(), t.grad_of(idw), ndim, kdim, bsz, true);
            if (idb >= 0) {
                float* gb = t.grad_of(idb);
                for (int j = 0; j < ndim; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < bsz; ++i) acc += g[static_cast<size_t>(i) * ndim + j];
                    gb[j] += static_cast<float>(acc);
                }
            }
        });
        out.owner = tp;
    }
    return out;
}

}  // namespace wcad
