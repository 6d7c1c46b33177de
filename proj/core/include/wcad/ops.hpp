#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "wcad/tape.hpp"
#include "wcad/tensor.hpp"

namespace wcad {

// All ops are pure: identical inputs give bit-identical outputs. Reductions
// accumulate in double with a fixed summation order. Every op records itself
// on the active tape when an input is tracked.

// --- elementwise family ------------------------------------------------------
// add/sub/mul accept equal shapes, or rank-4 operands where exactly one side
// has a single channel (channel-wise 1->C broadcast). No spatial broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, float s);
Tensor add_scalar(const Tensor& t, float s);
Tensor sigmoid(const Tensor& t);
Tensor silu(const Tensor& t);
Tensor concat_channels(const Tensor& a, const Tensor& b);

// x: [B,C,H,W] plus per-(batch,channel) shift s: [B,C]
Tensor add_channel_shift(const Tensor& x, const Tensor& s);

// rows of table ([L,D]) gathered into [n,D]
Tensor embed_rows(const Tensor& table, const std::vector<int>& ids);

Tensor upsample_nearest2x(const Tensor& t);

// [B,C,H,W] -> [B,C] spatial mean
Tensor global_avg_pool(const Tensor& t);

// --- reductions ---------------------------------------------------------------
Tensor sum_all(const Tensor& t);
Tensor mean_all(const Tensor& t);
Tensor softmax(const Tensor& t, int axis);
// mean over batch of (logsumexp(row) - row[label]); labels.size() == rows
Tensor cross_entropy_logits(const Tensor& logits, const std::vector<int>& labels);

// --- linear algebra -----------------------------------------------------------
// a: [...,m,k] x b: [...,k,n] -> [...,m,n]; leading dims must match
Tensor batched_matmul(const Tensor& a, const Tensor& b);
Tensor transpose_last2(const Tensor& t);
// x: [B,K], w: [N,K], bias: [N] -> [B,N]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);

// --- convolution & normalization ----------------------------------------------
Tensor conv2d(const Tensor& input, const Tensor& kernel, const std::optional<Tensor>& bias,
              int stride, int padding);
Tensor group_norm(const Tensor& t, int groups, const Tensor& gain, const Tensor& bias, float eps);

// --- windowing reshape ----------------------------------------------------------
// [B,C,H,W] -> [B*(H/ws)*(W/ws), ws*ws, C]; windows row-major over
// (batch, window-row, window-col), tokens row-major inside a window.
Tensor window_partition(const Tensor& t, int ws);
// exact inverse given the original image shape
Tensor window_merge(const Tensor& tokens, int ws, const Shape& image_shape);

// --- verification oracle --------------------------------------------------------
// central differences, (f(x+eps e_i) - f(x-eps e_i)) / (2 eps); f must be a
// pure function and is evaluated without tape recording
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, float eps);

}  // namespace wcad
