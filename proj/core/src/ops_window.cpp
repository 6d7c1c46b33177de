#include "wcad/ops.hpp"

namespace wcad {

namespace {

void check_divisible(int h, int w, int ws, const char* who) {
    if (ws < 2) {
        throw ShapeError(std::string(who) + ": window size must be >= 2, got " + std::to_string(ws));
    }
    if (h % ws != 0 || w % ws != 0) {
        throw ShapeError(std::string(who) + ": spatial dims " + std::to_string(h) + "x" +
                         std::to_string(w) + " not divisible by window size " + std::to_string(ws) +
                         "; choose a resolution divisible by the window size (no implicit padding)");
    }
}

}  // namespace

Tensor window_partition(const Tensor& t, int ws) {
    if (t.rank() != 4) {
        throw ShapeError("window_partition: input must be rank 4, got " + shape_str(t.shape()));
    }
    int bsz = t.dim(0), c = t.dim(1), h = t.dim(2), w = t.dim(3);
    check_divisible(h, w, ws, "window_partition");
    int nh = h / ws, nw = w / ws;
    int tokens = ws * ws;
    Tensor out = Tensor::zeros({bsz * nh * nw, tokens, c});

    const float* xp = t.data();
    float* op = out.data();
    for (int b = 0; b < bsz; ++b) {
        for (int wr = 0; wr < nh; ++wr) {
            for (int wc = 0; wc < nw; ++wc) {
                size_t win = (static_cast<size_t>(b) * nh + wr) * nw + wc;
                for (int ty = 0; ty < ws; ++ty) {
                    for (int tx = 0; tx < ws; ++tx) {
                        size_t tok = static_cast<size_t>(ty) * ws + tx;
                        size_t dst = (win * tokens + tok) * c;
                        int ih = wr * ws + ty, iw = wc * ws + tx;
                        for (int ci = 0; ci < c; ++ci) {
                            op[dst + ci] =
                                xp[((static_cast<size_t>(b) * c + ci) * h + ih) * w + iw];
                        }
                    }
                }
            }
        }
    }

    Tape* tp = Tape::active();
    if (tp && tp->tracked(t)) {
        int id = tp->input_id(t);
        out.node = tp->record(out.numel(), [=](Tape& tape, const float* g) {
            float* gx = tape.grad_of(id);
            for (int b = 0; b < bsz; ++b) {
                for (int wr = 0; wr < nh; ++wr) {
                    for (int wc = 0; wc < nw; ++wc) {
                        size_t win = (static_cast<size_t>(b) * nh + wr) * nw + wc;
                        for (int ty = 0; ty < ws; ++ty) {
                            for (int tx = 0; tx < ws; ++tx) {
                                size_t tok = static_cast<size_t>(ty) * ws + tx;
                                size_t src = (win * tokens + tok) * c;
                                int ih = wr * ws + ty, iw = wc * ws + tx;
                                for (int ci = 0; ci < c; ++ci) {
                                    gx[((static_cast<size_t>(b) * c + ci) * h + ih) * w + iw] +=
                                        g[src + ci];
                                }
                            }
                        }
                    }
                }
            }
        });
        out.owner = tp;
    }
    return out;
}

Tensor window_merge(const Tensor& tokens_t, int ws, const Shape& image_shape) {
    if (tokens_t.rank() != 3) {
        throw ShapeError("window_merge: tokens must be rank 3, got " + shape_str(tokens_t.shape()));
    }
    if (image_shape.size() != 4) {
        throw ShapeError("window_merge: image shape must be rank 4, got " + shape_str(image_shape));
    }
    int bsz = image_shape[0], c = image_shape[1], h = image_shape[2], w = image_shape[3];
    check_divisible(h, w, ws, "window_merge");
    int nh = h / ws, nw = w / ws;
    int tokens = ws * ws;
    if (tokens_t.dim(0) != bsz * nh * nw) {
        throw ShapeError("window_merge: window count " + std::to_string(tokens_t.dim(0)) +
                         " != expected " + std::to_string(bsz * nh * nw) + " for image " +
                         shape_str(image_shape));
    }
    if (tokens_t.dim(1) != tokens) {
        throw ShapeError("window_merge: tokens-per-window " + std::to_string(tokens_t.dim(1)) +
                         " != ws*ws = " + std::to_string(tokens));
    }
    if (tokens_t.dim(2) != c) {
        throw ShapeError("window_merge: token feature dim " + std::to_string(tokens_t.dim(2)) +
                         " != channels " + std::to_string(c));
    }

    Tensor out = Tensor::zeros(image_shape);
    const float* xp = tokens_t.data();
    float* op = out.data();
    for (int b = 0; b < bsz; ++b) {
        for (int wr = 0; wr < nh; ++wr) {
            for (int wc = 0; wc < nw; ++wc) {
                size_t win = (static_cast<size_t>(b) * nh + wr) * nw + wc;
                for (int ty = 0; ty < ws; ++ty) {
                    for (int tx = 0; tx < ws; ++tx) {
                        size_t tok = static_cast<size_t>(ty) * ws + tx;
                        size_t src = (win * tokens + tok) * c;
                        int ih = wr * ws + ty, iw = wc * ws + tx;
                        for (int ci = 0; ci < c; ++ci) {
                            op[((static_cast<size_t>(b) * c + ci) * h + ih) * w + iw] =
                                xp[src + ci];
                        }
                    }
                }
            }
        }
    }

    Tape* tp = Tape::active();
    if (tp && tp->tracked(tokens_t)) {
        int id = tp->input_id(tokens_t);
        out.node = tp->record(out.numel(), [=](Tape& tape, const float* g) {
            float* gx = tape.grad_of(id);
            for (int b = 0; b < bsz; ++b) {
                for (int wr = 0; wr < nh; ++wr) {
                    for (int wc = 0; wc < nw; ++wc) {
                        size_t win = (static_cast<size_t>(b) * nh + wr) * nw + wc;
                        for (int ty = 0; ty < ws; ++ty) {
                            for (int tx = 0; tx < ws; ++tx) {
                                size_t tok = static_cast<size_t>(ty) * ws + tx;
                                size_t dst = (win * tokens + tok) * c;
                                int ih = wr * ws + ty, iw = wc * ws + tx;
                                for (int ci = 0; ci < c; ++ci) {
                                    gx[dst + ci] +=
                                        g[((static_cast<size_t>(b) * c + ci) * h + ih) * w + iw];
                                }
                            }
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
