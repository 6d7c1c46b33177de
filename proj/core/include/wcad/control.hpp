#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wcad/tensor.hpp"
#include "wcad/unet.hpp"

namespace wcad {

enum class ControlVariant { None, ControlNetLike, SmartControlLike, WCA };

std::string variant_name(ControlVariant v);
ControlVariant variant_from_name(const std::string& name);

struct ControlConfig {
    ControlVariant variant = ControlVariant::None;
    // one entry for all levels, or one per level ordered finest -> coarsest
    std::vector<int> window_sizes = {4};
    // scale QK^T by 1/sqrt(C); false restores the literal unscaled form
    bool scaled_attention = true;
    int embed_hidden = 16;

    int window_size_for_level(int level, int num_levels) const;
    void validate(const UNetConfig& cfg, int resolution) const;
};

// Adapter parameters for one control variant, built against a base model.
//  - embed:   the 3-layer control-map embedder (always trainable)
//  - adapter: WCA kernels / scale-predictor convs / zero convs
//  - clone:   trainable encoder copy (ControlNetLike only), parameter names
//             identical to the base encoder's
struct ControlState {
    ControlConfig ccfg;
    ParamStore embed;
    ParamStore adapter;
    ParamStore clone;

    // union of the trainable stores under "ctrl." prefixes
    ParamStore trainable_union() const;
};

ControlState build_control_state(const UNetModel& base, const ControlConfig& ccfg, uint64_t seed);

// Control-map embedder: maps c to the denoiser input shape; the final conv is
// zero-initialized so control starts silent.
Tensor embed_control(const Tensor& c, const ControlState& state, const UNetConfig& cfg);

struct ControlFeatures {
    SkipFeatures skips;
    Tensor bottleneck;
};

// Control-branch features {s_i^ctr}: the frozen base encoder (WCA /
// SmartControlLike) or the trainable clone (ControlNetLike) applied to
// z_t + embed_control(c).
ControlFeatures control_skips(const UNetModel& base, const ControlState& state, const Tensor& c,
                              const Tensor& z_t, const Tensor& emb);

// Windowed cross-attention gate: Q from the control skip, K/V from the base
// skip, per-window attention, merged and squashed to one channel.
Tensor wca_alpha(const Tensor& s, const Tensor& s_ctr, const ParamStore& adapter,
                 const std::string& prefix, int ws, bool scaled_attention);

// SmartControl-style gate: conv stack over the concatenated skips.
Tensor smartcontrol_alpha(const Tensor& s, const Tensor& s_ctr, const ParamStore& adapter,
                          const std::string& prefix);

// s + alpha (.) s_ctr with single-channel alpha broadcast over channels.
Tensor mix_skip(const Tensor& s, const Tensor& s_ctr, const Tensor& alpha);

struct ControlOptions {
    bool force_alpha_zero = false;  // test hook: reproduces the base model
};

// Dispatch over variants; ControlVariant::None is exactly the base forward.
Tensor controlled_predict_noise(const UNetModel& base, const ControlState& state,
                                const Tensor& z_t, int t, const std::vector<int>& labels,
                                const Tensor& c, const ControlOptions& opts = {});

}  // namespace wcad
