#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wcad/control.hpp"
#include "wcad/data_synth.hpp"
#include "wcad/schedule.hpp"
#include "wcad/tensor.hpp"
#include "wcad/unet.hpp"

namespace wcad {

// ---------------------------------------------------------------------------
// Feature extractor: 3 conv levels + global average pool (64-dim feature) +
// linear head over scene labels. Self-trained stand-in for a pretrained
// backbone behind the Frechet metric.
// ---------------------------------------------------------------------------
constexpr int kFeatureDim = 64;

struct FeatureExtractor {
    ParamStore params;
    int num_labels = 8;
};

FeatureExtractor train_feature_extractor(const Dataset& data, int epochs, uint64_t seed,
                                         float* train_accuracy = nullptr);

// images: [B,3,H,W] -> features [B,64]
Tensor extractor_features(const FeatureExtractor& fx, const Tensor& images);
Tensor extractor_logits(const FeatureExtractor& fx, const Tensor& images);

// ---------------------------------------------------------------------------
// Gaussian fit + Frechet distance
// ---------------------------------------------------------------------------
struct GaussianFit {
    std::vector<double> mean;  // [d]
    std::vector<double> cov;   // [d*d], symmetric
    int dim = 0;
};

GaussianFit fit_gaussian(const Tensor& features);  // [n,d], n >= 2

// |mu1-mu2|^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2}); the product is symmetrized
// before the eigendecomposition and negative eigenvalues clamp to zero.
double frechet_distance(const GaussianFit& g1, const GaussianFit& g2);

// principal square root of a symmetric PSD matrix (eigendecomposition route)
std::vector<double> sqrt_spd(const std::vector<double>& m, int n);

// images per side as [n] tensors of shape [3,H,W]
double fid(const FeatureExtractor& fx, const std::vector<Tensor>& real,
           const std::vector<Tensor>& generated);

// ---------------------------------------------------------------------------
// Geometry alignment
// ---------------------------------------------------------------------------
struct IouReport {
    std::array<double, kNumTileClasses> per_class{};   // NaN when class absent from both
    std::array<bool, kNumTileClasses> in_tile{};
    double mean = 0.0;  // over classes present in the tile
};

IouReport alignment_iou(const Tensor& gen_image, const GeometryTile& tile);

// ---------------------------------------------------------------------------
// Parameter / FLOP accounting
// ---------------------------------------------------------------------------
int64_t count_params(const ParamStore& store, bool trainable_only);

struct LayerDesc {
    enum class Kind { Conv, Matmul, Attention, Elementwise, Norm, Activation };
    Kind kind = Kind::Elementwise;
    // conv: batch cin cout kh kw ho wo | matmul: batch m k n
    // attention: batch(=windows) m(=tokens) k(=dim)
    // elementwise/norm/activation: count
    int64_t batch = 1, cin = 0, cout = 0, kh = 0, kw = 0, ho = 0, wo = 0;
    int64_t m = 0, k = 0, n = 0;
    int64_t count = 0;
};

// FLOP conventions (documented in the README table): conv and matmul cost
// 2*MACs, attention = both matmuls + 5 flops per score for the softmax,
// elementwise = 1, activation = 4 and normalization = 8 flops per element.
int64_t count_flops(const std::vector<LayerDesc>& layers);

std::vector<LayerDesc> describe_unet_forward(const UNetConfig& cfg, int resolution, int batch);
std::vector<LayerDesc> describe_controlled_forward(const UNetConfig& cfg,
                                                   const ControlConfig& ccfg, int resolution,
                                                   int batch);

// ---------------------------------------------------------------------------
// Runtime benchmark (Table-style accounting over full DDIM sampling calls)
// ---------------------------------------------------------------------------
struct RuntimeStats {
    double time_ms_mean = 0.0;
    double time_ms_std = 0.0;
    int64_t params_total = 0;
    int64_t params_trainable = 0;
    int64_t flops_per_batch = 0;  // analytic, forward flops x DDIM steps
    size_t peak_bytes = 0;
};

RuntimeStats benchmark_variant(const UNetModel& base, const ControlState& state,
                               const NoiseSchedule& sched, int resolution, int batch,
                               int ddim_steps, int repeats, uint64_t seed);

}  // namespace wcad
