#include <cmath>
#include <cstring>

#include "wcad/ops.hpp"
#include "wcad/parallel.hpp"

namespace wcad {

namespace {

float stable_sigmoid(float x) {
    if (x >= 0.0f) {
        return 1.0f / (1.0f + std::exp(-x));
    }
    float e = std::exp(x);
    return e / (1.0f + e);
}

enum class Layout { Same, BroadcastA, BroadcastB };  // Broadcast*: that side is [B,1,H,W]

Layout binary_layout(const Tensor& a, const Tensor& b, const char* op) {
    if (same_shape(a.shape(), b.shape())) return Layout::Same;
    if (a.rank() == 4 && b.rank() == 4 && a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) &&
        a.dim(3) == b.dim(3)) {
        if (a.dim(1) == 1 && b.dim(1) > 1) return Layout::BroadcastA;
        if (b.dim(1) == 1 && a.dim(1) > 1) return Layout::BroadcastB;
        throw ShapeError(std::string(op) + ": channel dims " + std::to_string(a.dim(1)) + " vs " +
                         std::to_string(b.dim(1)) + " (broadcast needs one side with 1 channel)");
    }
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()) + " (only channel-wise 1->C broadcast is allowed)");
}

enum class BinOp { Add, Sub, Mul };

Tensor binary_pointwise(const Tensor& a, const Tensor& b, BinOp op, const char* name) {
    Layout layout = binary_layout(a, b, name);
    const Tensor& wide = (layout == Layout::BroadcastA) ? b : a;
    Tensor out = Tensor::zeros(wide.shape());

    const float* ap = a.data();
    const float* bp = b.data();
    float* op_ = out.data();

    size_t batch = 1, chans = 1, plane = 1;
    if (layout == Layout::Same) {
        plane = out.numel();
    } else {
        batch = static_cast<size_t>(wide.dim(0));
        chans = static_cast<size_t>(wide.dim(1));
        plane = static_cast<size_t>(wide.dim(2)) * wide.dim(3);
    }

    auto apply = [op](float x, float y) {
        switch (op) {
            case BinOp::Add: return x + y;
            case BinOp::Sub: return x - y;
            default: return x * y;
        }
    };

    if (layout == Layout::Same) {
        for (size_t i = 0; i < plane; ++i) op_[i] = apply(ap[i], bp[i]);
    } else {
        for (size_t n = 0; n < batch; ++n) {
            const float* narrow =
                ((layout == Layout::BroadcastA) ? ap : bp) + n * plane;  // [1,H,W] slice
            for (size_t c = 0; c < chans; ++c) {
                size_t off = (n * chans + c) * plane;
                for (size_t i = 0; i < plane; ++i) {
                    float x = (layout == Layout::BroadcastA) ? narrow[i] : ap[off + i];
                    float y = (layout == Layout::BroadcastB) ? narrow[i] : bp[off + i];
                    op_[off + i] = apply(x, y);
                }
            }
        }
    }

    Tape* tp = Tape::active();
    if (tp && (tp->tracked(a) || tp->tracked(b))) {
        int ida = tp->input_id(a), idb = tp->input_id(b);
        BufferPtr abuf = a.buffer(), bbuf = b.buffer();
        size_t total = out.numel();
        out.node = tp->record(total, [=](Tape& t, const float* g) {
            auto accumulate = [&](int id, bool is_a) {
                if (id < 0) return;
                float* gx = t.grad_of(id);
                bool narrow = (is_a && layout == Layout::BroadcastA) ||
                              (!is_a && layout == Layout::BroadcastB);
                for (size_t n = 0; n < ((layout == Layout::Same) ? 1 : batch); ++n) {
                    for (size_t i = 0; i < plane; ++i) {
                        // gradient of out element w.r.t. this operand element
                        if (layout == Layout::Same) {
                            float gv = g[i];
                            switch (op) {
                                case BinOp::Add: gx[i] += gv; break;
                                case BinOp::Sub: gx[i] += is_a ? gv : -gv; break;
                                case BinOp::Mul:
                                    gx[i] += gv * (is_a ? bbuf->v[i] : abuf->v[i]);
                                    break;
                            }
                        } else if (narrow) {
                            double acc = 0.0;
                            for (size_t c = 0; c < chans; ++c) {
                                size_t off = (n * chans + c) * plane + i;
                                double gv = g[off];
                                switch (op) {
                                    case BinOp::Add: acc += gv; break;
                                    case BinOp::Sub: acc += is_a ? gv : -gv; break;
                                    case BinOp::Mul:
                                        acc += gv * (is_a ? bbuf->v[off] : abuf->v[off]);
                                        break;
                                }
                            }
                            gx[n * plane + i] += static_cast<float>(acc);
                        } else {
                            for (size_t c = 0; c < chans; ++c) {
                                size_t off = (n * chans + c) * plane + i;
                                float gv = g[off];
                                switch (op) {
                                    case BinOp::Add: gx[off] += gv; break;
                                    case BinOp::Sub: gx[off] += is_a ? gv : -gv; break;
                                    case BinOp::Mul: {
                                        size_t noff = n * plane + i;
                                        gx[off] += gv * (is_a ? bbuf->v[noff] : abuf->v[noff]);
                                        break;
                                    }
                                }
                            }
                        }
                    }
                }
            };
            accumulate(ida, true);
            accumulate(idb, false);
        });
        out.owner = tp;
    }
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_pointwise(a, b, BinOp::Add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_pointwise(a, b, BinOp::Sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_pointwise(a, b, BinOp::Mul, "mul"); }

Tensor scale(const Tensor& t, float s) {
    Tensor out = Tensor::zeros(t.shape());
    const float* xp = t.data();
    float* op = out.data();
    size_t n = t.numel();
    for (size_t i = 0; i < n; ++i) op[i] = xp[i] * s;

    Tape* tp = Tape::active();
    if (tp && tp->tracked(t)) {
        int id = tp->input_id(t);
        out.node = tp->record(n, [=](Tape& tape, const float* g) {
            float* gx = tape.grad_of(id);
            for (size_t i = 0; i < n; ++i) gx[i] += g[i] * s;
        });
        out.owner = tp;
    }
    return out;
}

Tensor add_scalar(const Tensor& t, float s) {
    Tensor out = Tensor::zeros(t.shape());
    const float* xp = t.data();
    float* op = out.data();
    size_t n = t.numel();
    for (size_t i = 0; i < n; ++i) op[i] = xp[i] + s;

    Tape* tp = Tape::active();
    if (tp && tp->tracked(t)) {
        int id = tp->input_id(t);
        out.node = tp->record(n, [=](Tape& tape, const float* g) {
            float* gx = tape.grad_of(id);
            for (size_t i = 0; i < n; ++i) gx[i] += g[i];
        });
        out.owner = tp;
    }
    return out;
}

Tensor sigmoid(const Tensor& t) {
    Tensor out = Tensor::zeros(t.shape());
    const float* xp = t.data();
    float* op = out.data();
    size_t n = t.numel();
    for (size_t i = 0; i < n; ++i) op[i] = stable_sigmoid(xp[i]);

    Tape* tp = Tape::active();
    if (tp && tp->tracked(t)) {
        int id = tp->input_id(t);
        BufferPtr ybuf = out.buffer();
        out.node = tp->record(n, [=](Tape& tape, const float* g) {
            float* gx = tape.grad_of(id);
            for (size_t i = 0; i < n; ++i) {
                float y = ybuf->v[i];
                gx[i] += g[i] * y * (1.0f - y);
            }
        });
        out.owner = tp;
    }
    return out;
}

Tensor silu(const Tensor& t) {
    Tensor out = Tensor::zeros(t.shape());
    const float* xp = t.data();
    float* op = out.data();
    size_t n = t.numel();
    for (size_t i = 0; i < n; ++i) op[i] = xp[i] * stable_sigmoid(xp[i]);

    Tape* tp = Tape::active();
    if (tp && tp->tracked(t)) {
        int id = tp->input_id(t);
        BufferPtr xbuf = t.buffer();
        out.node = tp->record(n, [=](Tape& tape, const float* g) {
            float* gx = tape.grad_of(id);
            for (size_t i = 0; i < n; ++i) {
                float x = xbuf->v[i];
                float s = stable_sigmoid(x);
                gx[i] += g[i] * (s + x * s * (1.0f - s));
            }
        });
        out.owner = tp;
    }
    return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.rank() != 4 || b.rank() != 4) {
        throw ShapeError("concat_channels: both inputs must be rank 4, got " +
                         shape_str(a.shape()) + " and " + shape_str(b.shape()));
    }
    for (int i : {0, 2, 3}) {
        if (a.dim(i) != b.dim(i)) {
            throw ShapeError("concat_channels: dimension " + std::to_string(i) + " mismatch: " +
                             std::to_string(a.dim(i)) + " vs " + std::to_string(b.dim(i)));
        }
    }
    int bsz = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    size_t plane = static_cast<size_t>(a.dim(2)) * a.dim(3);
    Tensor out = Tensor::zeros({bsz, ca + cb, a.dim(2), a.dim(3)});
    float* op = out.data();
    const float* ap = a.data();
    const float* bp = b.data();
    for (int n = 0; n < bsz; ++n) {
        std::memcpy(op + (static_cast<size_t>(n) * (ca + cb)) * plane,
                    ap + static_cast<size_t>(n) * ca * plane, sizeof(float) * ca * plane);
        std::memcpy(op + (static_cast<size_t>(n) * (ca + cb) + ca) * plane,
                    bp + static_cast<size_t>(n) * cb * plane, sizeof(float) * cb * plane);
    }

    Tape* tp = Tape::active();
    if (tp && (tp->tracked(a) || tp->tracked(b))) {
        int ida = tp->input_id(a), idb = tp->input_id(b);
        out.node = tp->record(out.numel(), [=](Tape& t, const float* g) {
            for (int n = 0; n < bsz; ++n) {
                const float* ga = g + (static_cast<size_t>(n) * (ca + cb)) * plane;
                const float* gb = ga + static_cast<size_t>(ca) * plane;
                if (ida >= 0) {
                    float* dst = t.grad_of(ida) + static_cast<size_t>(n) * ca * plane;
                    for (size_t i = 0; i < static_cast<size_t>(ca) * plane; ++i) dst[i] += ga[i];
                }
                if (idb >= 0) {
                    float* dst = t.grad_of(idb) + static_cast<size_t>(n) * cb * plane;
                    for (size_t i = 0; i < static_cast<size_t>(cb) * plane; ++i) dst[i] += gb[i];
                }
            }
        });
        out.owner = tp;
    }
    return out;
}

Tensor add_channel_shift(const Tensor& x, const Tensor& s) {
    if (x.rank() != 4 || s.rank() != 2 || x.dim(0) != s.dim(0) || x.dim(1) != s.dim(1)) {
        throw ShapeError("add_channel_shift: expected x [B,C,H,W] with s [B,C], got " +
                         shape_str(x.shape()) + " and " + shape_str(s.shape()));
    }
    int bsz = x.dim(0), c = x.dim(1);
    size_t plane = static_cast<size_t>(x.dim(2)) * x.dim(3);
    Tensor out = Tensor::zeros(x.shape());
    const float* xp = x.data();
    const float* sp = s.data();
    float* op = out.data();
    for (int n = 0; n < bsz; ++n) {
        for (int ci = 0; ci < c; ++ci) {
            float sv = sp[static_cast<size_t>(n) * c + ci];
            size_t off = (static_cast<size_t>(n) * c + ci) * plane;
            for (size_t i = 0; i < plane; ++i) op[off + i] = xp[off + i] + sv;
        }
    }

    Tape* tp = Tape::active();
    if (tp && (tp->tracked(x) || tp->tracked(s))) {
        int idx = tp->input_id(x), ids = tp->input_id(s);
        out.node = tp->record(out.numel(), [=](Tape& t, const float* g) {
            if (idx >= 0) {
                float* gx = t.grad_of(idx);
                size_t n = static_cast<size_t>(bsz) * c * plane;
                for (size_t i = 0; i < n; ++i) gx[i] += g[i];
            }
            if (ids >= 0) {
                float* gs = t.grad_of(ids);
                for (int n = 0; n < bsz; ++n) {
                    for (int ci = 0; ci < c; ++ci) {
                        size_t off = (static_cast<size_t>(n) * c + ci) * plane;
                        double acc = 0.0;
                        for (size_t i = 0; i < plane; ++i) acc += g[off + i];
                        gs[static_cast<size_t>(n) * c + ci] += static_cast<float>(acc);
                    }
                }
            }
        });
        out.owner = tp;
    }
    return out;
}

Tensor embed_rows(const Tensor& table, const std::vector<int>& ids) {
    if (table.rank() != 2) {
        throw ShapeError("embed_rows: table must be rank 2, got " + shape_str(table.shape()));
    }
    int rows = table.dim(0), dim = table.dim(1);
    for (int id : ids) {
        if (id < 0 || id >= rows) {
            throw ShapeError("embed_rows: index " + std::to_string(id) + " out of range [0," +
                             std::to_string(rows) + ")");
        }
    }
    int n = static_cast<int>(ids.size());
    Tensor out = Tensor::zeros({n, dim});
    const float* tpail = table.data();
    float* op = out.data();
    for (int i = 0; i < n; ++i) {
        std::memcpy(op + static_cast<size_t>(i) * dim,
                    tpail + static_cast<size_t>(ids[static_cast<size_t>(i)]) * dim,
                    sizeof(float) * dim);
    }

    Tape* tp = Tape::active();
    if (tp && tp->tracked(table)) {
        int idt = tp->input_id(table);
        std::vector<int> ids_copy = ids;
        out.node = tp->record(out.numel(), [=](Tape& t, const float* g) {
            float* gt = t.grad_of(idt);
            for (int i = 0; i < n; ++i) {
                float* row = gt + static_cast<size_t>(ids_copy[static_cast<size_t>(i)]) * dim;
                const float* grow = g + static_cast<size_t>(i) * dim;
                for (int j = 0; j < dim; ++j) row[j] += grow[j];
            }
        });
        out.owner = tp;
    }
    return out;
}

Tensor upsample_nearest2x(const Tensor& t) {
    if (t.rank() != 4) {
        throw ShapeError("upsample_nearest2x: input must be rank 4, got " + shape_str(t.shape()));
    }
    int bsz = t.dim(0), c = t.dim(1), h = t.dim(2), w = t.dim(3);
    Tensor out = Tensor::zeros({bsz, c, 2 * h, 2 * w});
    const float* xp = t.data();
    float* op = out.data();
    size_t planes = static_cast<size_t>(bsz) * c;
    for (size_t p = 0; p < planes; ++p) {
        const float* src = xp + p * h * w;
        float* dst = op + p * 4 * h * w;
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                float v = src[static_cast<size_t>(i) * w + j];
                size_t o = (static_cast<size_t>(2 * i) * 2 * w) + 2 * j;
                dst[o] = v;
                dst[o + 1] = v;
                dst[o + 2 * w] = v;
                dst[o + 2 * w + 1] = v;
            }
        }
    }

    Tape* tp = Tape::active();
    if (tp && tp->tracked(t)) {
        int id = tp->input_id(t);
        out.node = tp->record(out.numel(), [=](Tape& tape, const float* g) {
            float* gx = tape.grad_of(id);
            for (size_t p = 0; p < planes; ++p) {
                const float* gsrc = g + p * 4 * h * w;
                float* gdst = gx + p * h * w;
                for (int i = 0; i < h; ++i) {
                    for (int j = 0; j < w; ++j) {
                        size_t o = (static_cast<size_t>(2 * i) * 2 * w) + 2 * j;
                        gdst[static_cast<size_t>(i) * w + j] +=
                            gsrc[o] + gsrc[o + 1] + gsrc[o + 2 * w] + gsrc[o + 2 * w + 1];
                    }
                }
            }
        });
        out.owner = tp;
    }
    return out;
}

Tensor global_avg_pool(const Tensor& t) {
    if (t.rank() != 4) {
        throw ShapeError("global_avg_pool: input must be rank 4, got " + shape_str(t.shape()));
    }
    int bsz = t.dim(0), c = t.dim(1);
    size_t plane = static_cast<size_t>(t.dim(2)) * t.dim(3);
    Tensor out = Tensor::zeros({bsz, c});
    const float* xp = t.data();
    float* op = out.data();
    for (int n = 0; n < bsz; ++n) {
        for (int ci = 0; ci < c; ++ci) {
            size_t off = (static_cast<size_t>(n) * c + ci) * plane;
            double acc = 0.0;
            for (size_t i = 0; i < plane; ++i) acc += xp[off + i];
            op[static_cast<size_t>(n) * c + ci] = static_cast<float>(acc / static_cast<double>(plane));
        }
    }

    Tape* tp = Tape::active();
    if (tp && tp->tracked(t)) {
        int id = tp->input_id(t);
        float inv = 1.0f / static_cast<float>(plane);
        out.node = tp->record(out.numel(), [=](Tape& tape, const float* g) {
            float* gx = tape.grad_of(id);
            for (int n = 0; n < bsz; ++n) {
                for (int ci = 0; ci < c; ++ci) {
                    float gv = g[static_cast<size_t>(n) * c + ci] * inv;
                    size_t off = (static_cast<size_t>(n) * c + ci) * plane;
                    for (size_t i = 0; i < plane; ++i) gx[off + i] += gv;
                }
            }
        });
        out.owner = tp;
    }
    return out;
}

Tensor sum_all(const Tensor& t) {
    double acc = 0.0;
    const float* xp = t.data();
    size_t n = t.numel();
    for (size_t i = 0; i < n; ++i) acc += xp[i];
    Tensor out = Tensor::scalar(static_cast<float>(acc));

    Tape* tp = Tape::active();
    if (tp && tp->tracked(t)) {
        int id = tp->input_id(t);
        out.node = tp->record(1, [=](Tape& tape, const float* g) {
            float* gx = tape.grad_of(id);
            for (size_t i = 0; i < n; ++i) gx[i] += g[0];
        });
        out.owner = tp;
    }
    return out;
}

Tensor mean_all(const Tensor& t) {
    double acc = 0.0;
    const float* xp = t.data();
    size_t n = t.numel();
    for (size_t i = 0; i < n; ++i) acc += xp[i];
    Tensor out = Tensor::scalar(static_cast<float>(acc / static_cast<double>(n)));

    Tape* tp = Tape::active();
    if (tp && tp->tracked(t)) {
        int id = tp->input_id(t);
        float inv = 1.0f / static_cast<float>(n);
        out.node = tp->record(1, [=](Tape& tape, const float* g) {
            float* gx = tape.grad_of(id);
            float gv = g[0] * inv;
            for (size_t i = 0; i < n; ++i) gx[i] += gv;
        });
        out.owner = tp;
    }
    return out;
}

Tensor softmax(const Tensor& t, int axis) {
    int r = t.rank();
    if (axis < 0) axis += r;
    if (axis < 0 || axis >= r) {
        throw ShapeError("softmax: axis " + std::to_string(axis) + " invalid for shape " +
                         shape_str(t.shape()));
    }
    size_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= static_cast<size_t>(t.dim(i));
    for (int i = axis + 1; i < r; ++i) inner *= static_cast<size_t>(t.dim(i));
    size_t len = static_cast<size_t>(t.dim(axis));

    Tensor out = Tensor::zeros(t.shape());
    const float* xp = t.data();
    float* op = out.data();
    for (size_t o = 0; o < outer; ++o) {
        for (size_t in = 0; in < inner; ++in) {
            size_t base = o * len * inner + in;
            float m = xp[base];
            for (size_t j = 1; j < len; ++j) m = std::max(m, xp[base + j * inner]);
            double sum = 0.0;
            for (size_t j = 0; j < len; ++j) sum += std::exp(static_cast<double>(xp[base + j * inner]) - m);
            for (size_t j = 0; j < len; ++j) {
                op[base + j * inner] = static_cast<float>(
                    std::exp(static_cast<double>(xp[base + j * inner]) - m) / sum);
            }
        }
    }

    Tape* tp = Tape::active();
    if (tp && tp->tracked(t)) {
        int id = tp->input_id(t);
        BufferPtr ybuf = out.buffer();
        out.node = tp->record(out.numel(), [=](Tape& tape, const float* g) {
            float* gx = tape.grad_of(id);
            for (size_t o = 0; o < outer; ++o) {
                for (size_t in = 0; in < inner; ++in) {
                    size_t base = o * len * inner + in;
                    double dot = 0.0;
                    for (size_t j = 0; j < len; ++j) {
                        size_t k = base + j * inner;
                        dot += static_cast<double>(g[k]) * ybuf->v[k];
                    }
                    for (size_t j = 0; j < len; ++j) {
                        size_t k = base + j * inner;
                        gx[k] += static_cast<float>(ybuf->v[k] * (g[k] - dot));
                    }
                }
            }
        });
        out.owner = tp;
    }
    return out;
}

Tensor cross_entropy_logits(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) {
        throw ShapeError("cross_entropy_logits: logits must be rank 2, got " +
                         shape_str(logits.shape()));
    }
    int bsz = logits.dim(0), k = logits.dim(1);
    if (static_cast<int>(labels.size()) != bsz) {
        throw ShapeError("cross_entropy_logits: " + std::to_string(labels.size()) +
                         " labels for batch " + std::to_string(bsz));
    }
    for (int l : labels) {
        if (l < 0 || l >= k) {
            throw ShapeError("cross_entropy_logits: label " + std::to_string(l) +
                             " out of range [0," + std::to_string(k) + ")");
        }
    }

    const float* xp = logits.data();
    double total = 0.0;
    for (int b = 0; b < bsz; ++b) {
        const float* row = xp + static_cast<size_t>(b) * k;
        float m = row[0];
        for (int j = 1; j < k; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += std::exp(static_cast<double>(row[j]) - m);
        total += (m + std::log(sum)) - row[labels[static_cast<size_t>(b)]];
    }
    Tensor out = Tensor::scalar(static_cast<float>(total / bsz));

    Tape* tp = Tape::active();
    if (tp && tp->tracked(logits)) {
        int id = tp->input_id(logits);
        BufferPtr xbuf = logits.buffer();
        std::vector<int> labels_copy = labels;
        out.node = tp->record(1, [=](Tape& tape, const float* g) {
            float* gx = tape.grad_of(id);
            float gv = g[0] / static_cast<float>(bsz);
            for (int b = 0; b < bsz; ++b) {
                const float* row = xbuf->v.data() + static_cast<size_t>(b) * k;
                float m = row[0];
                for (int j = 1; j < k; ++j) m = std::max(m, row[j]);
                double sum = 0.0;
                for (int j = 0; j < k; ++j) sum += std::exp(static_cast<double>(row[j]) - m);
                for (int j = 0; j < k; ++j) {
                    double p = std::exp(static_cast<double>(row[j]) - m) / sum;
                    float target = (j == labels_copy[static_cast<size_t>(b)]) ? 1.0f : 0.0f;
                    gx[static_cast<size_t>(b) * k + j] += gv * (static_cast<float>(p) - target);
                }
            }
        });
        out.owner = tp;
    }
    return out;
}

}  // namespace wcad
