#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wcad/tensor.hpp"

namespace wcad {

struct UNetConfig {
    int in_channels = 3;
    int base_channels = 32;
    std::vector<int> channel_mults = {1, 2, 4};
    int time_embed_dim = 128;
    int cond_embed_dim = 128;
    int num_scene_labels = 8;
    int groups = 8;

    int levels() const { return static_cast<int>(channel_mults.size()); }
    int level_channels(int i) const { return base_channels * channel_mults[static_cast<size_t>(i)]; }
    void validate() const;
};

// Ordered skip features, s[0] at the finest resolution.
struct SkipFeatures {
    std::vector<Tensor> s;
    int levels() const { return static_cast<int>(s.size()); }
};

// Denoiser parameters: stem, per-level encoder blocks with downsamples,
// a mid block, decoder blocks with upsamples, zero-initialized output head,
// and the scene-label embedding table.
struct UNetModel {
    UNetConfig cfg;
    ParamStore params;
};

// Sinusoidal embedding: pairs (sin(t*w_j), cos(t*w_j)) with w_j geometric
// from 1 down to 1e-4.
Tensor time_embedding(int t, int dim);

UNetModel build_unet(const UNetConfig& cfg, uint64_t seed);

// t/label conditioning vector [B, embed_dim]; differentiable into the label
// table.
Tensor cond_embedding(const UNetConfig& cfg, const ParamStore& params, int t,
                      const std::vector<int>& labels);

// Encoder: returns the bottleneck feature and one skip per level, captured
// after the level's conv stack and before downsampling. The parameter store
// is an argument so a cloned encoder can reuse the same forward.
std::pair<Tensor, SkipFeatures> unet_encode(const UNetConfig& cfg, const ParamStore& params,
                                            const Tensor& z_t, const Tensor& emb);

// Decoder consuming (possibly mixed) skips by channel concatenation.
Tensor unet_decode(const UNetConfig& cfg, const ParamStore& params, const Tensor& bottleneck,
                   const SkipFeatures& skips, const Tensor& emb);

// Base (uncontrolled) forward pass.
Tensor predict_noise(const UNetModel& model, const Tensor& z_t, int t,
                     const std::vector<int>& labels);

// Names of encoder-side parameters (stem, enc*, down*, mid). Used to clone
// the encoder for control branches.
std::vector<std::string> encoder_param_names(const UNetConfig& cfg);

// turn gradient tracking on/off for every parameter in a store
void set_trainable(ParamStore& params, bool trainable);

}  // namespace wcad
