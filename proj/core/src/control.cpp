#include "wcad/control.hpp"

#include <cmath>

#include "wcad/ops.hpp"
#include "wcad/rng.hpp"

namespace wcad {

namespace {

constexpr float kSilentBias = -5.0f;  // sigma(-5) ~ 0.0067: control starts near-silent

Tensor conv_weight(int cout, int cin, int k, Rng& rng) {
    float bound = 1.0f / std::sqrt(static_cast<float>(cin * k * k));
    return Tensor::uniform({cout, cin, k, k}, -bound, bound, rng);
}

Tensor conv_bias(int cout, int cin, int k, Rng& rng) {
    float bound = 1.0f / std::sqrt(static_cast<float>(cin * k * k));
    return Tensor::uniform({cout}, -bound, bound, rng);
}

}  // namespace

std::string variant_name(ControlVariant v) {
    switch (v) {
        case ControlVariant::None: return "none";
        case ControlVariant::ControlNetLike: return "controlnet";
        case ControlVariant::SmartControlLike: return "smartcontrol";
        case ControlVariant::WCA: return "wca";
    }
    return "none";
}

ControlVariant variant_from_name(const std::string& name) {
    if (name == "none") return ControlVariant::None;
    if (name == "controlnet") return ControlVariant::ControlNetLike;
    if (name == "smartcontrol") return ControlVariant::SmartControlLike;
    if (name == "wca") return ControlVariant::WCA;
    throw ConfigError("unknown control variant '" + name +
                      "' (expected none|controlnet|smartcontrol|wca)");
}

int ControlConfig::window_size_for_level(int level, int num_levels) const {
    if (window_sizes.size() == 1) return window_sizes[0];
    if (static_cast<int>(window_sizes.size()) != num_levels) {
        throw ConfigError("window_sizes has " + std::to_string(window_sizes.size()) +
                          " entries for " + std::to_string(num_levels) + " levels");
    }
    return window_sizes[static_cast<size_t>(level)];
}

void ControlConfig::validate(const UNetConfig& cfg, int resolution) const {
    if (variant != ControlVariant::WCA) return;
    int n = cfg.levels();
    if (window_sizes.size() != 1 && static_cast<int>(window_sizes.size()) != n) {
        throw ConfigError("window_sizes must have 1 or " + std::to_string(n) + " entries, got " +
                          std::to_string(window_sizes.size()));
    }
    for (int level = 0; level < n; ++level) {
        int ws = window_size_for_level(level, n);
        int res = resolution >> level;
        if (ws < 2) {
            throw ConfigError("window size " + std::to_string(ws) + " at level " +
                              std::to_string(level) + " must be >= 2");
        }
        if (res % ws != 0) {
            throw ConfigError("level " + std::to_string(level) + " resolution " +
                              std::to_string(res) + " not divisible by window size " +
                              std::to_string(ws));
        }
    }
}

ParamStore ControlState::trainable_union() const {
    ParamStore out;
    out.merge_prefixed(embed, "ctrl.embed.");
    out.merge_prefixed(adapter, "ctrl.adapter.");
    out.merge_prefixed(clone, "ctrl.clone.");
    return out;
}

ControlState build_control_state(const UNetModel& base, const ControlConfig& ccfg, uint64_t seed) {
    ControlState st;
    st.ccfg = ccfg;
    if (ccfg.variant == ControlVariant::None) return st;
    Rng rng(seed);
    const UNetConfig& cfg = base.cfg;
    int hidden = ccfg.embed_hidden;

    st.embed.add("e1.w", conv_weight(hidden, cfg.in_channels, 3, rng));
    st.embed.add("e1.b", conv_bias(hidden, cfg.in_channels, 3, rng));
    st.embed.add("e2.w", conv_weight(hidden, hidden, 3, rng));
    st.embed.add("e2.b", conv_bias(hidden, hidden, 3, rng));
    st.embed.add("e3.w", Tensor::zeros({cfg.in_channels, hidden, 3, 3}));
    st.embed.add("e3.b", Tensor::zeros({cfg.in_channels}));

    int n = cfg.levels();
    switch (ccfg.variant) {
        case ControlVariant::WCA: {
            for (int i = 0; i < n; ++i) {
                int c = cfg.level_channels(i);
                std::string lp = "wca.l" + std::to_string(i);
                st.adapter.add(lp + ".wq", conv_weight(c, c, 3, rng));
                st.adapter.add(lp + ".wk", conv_weight(c, c, 3, rng));
                st.adapter.add(lp + ".wv", conv_weight(c, c, 3, rng));
                st.adapter.add(lp + ".w1.w", conv_weight(1, c, 1, rng));
                st.adapter.add(lp + ".w1.b", Tensor::full({1}, kSilentBias));
            }
            break;
        }
        case ControlVariant::SmartControlLike: {
            for (int i = 0; i < n; ++i) {
                int c = cfg.level_channels(i);
                std::string lp = "sc.l" + std::to_string(i);
                st.adapter.add(lp + ".c1.w", conv_weight(c, 2 * c, 3, rng));
                st.adapter.add(lp + ".c1.b", conv_bias(c, 2 * c, 3, rng));
                st.adapter.add(lp + ".c2.w", conv_weight(c, c, 3, rng));
                st.adapter.add(lp + ".c2.b", conv_bias(c, c, 3, rng));
                st.adapter.add(lp + ".c3.w", Tensor::zeros({1, c, 1, 1}));
                st.adapter.add(lp + ".c3.b", Tensor::full({1}, kSilentBias));
            }
            break;
        }
        case ControlVariant::ControlNetLike: {
            // learnable encoder copy initialized from the (current) base weights
            for (const std::string& name : encoder_param_names(cfg)) {
                st.clone.add(name, base.params.at(name).deep_clone());
            }
            for (int i = 0; i < n; ++i) {
                int c = cfg.level_channels(i);
                std::string zp = "zero" + std::to_string(i);
                st.adapter.add(zp + ".w", Tensor::zeros({c, c, 1, 1}));
                st.adapter.add(zp + ".b", Tensor::zeros({c}));
            }
            int cb = cfg.level_channels(n - 1);
            st.adapter.add("zmid.w", Tensor::zeros({cb, cb, 1, 1}));
            st.adapter.add("zmid.b", Tensor::zeros({cb}));
            break;
        }
        case ControlVariant::None: break;
    }
    return st;
}

Tensor embed_control(const Tensor& c, const ControlState& state, const UNetConfig& cfg) {
    if (c.rank() != 4 || c.dim(1) != cfg.in_channels) {
        throw ShapeError("embed_control: expected [B," + std::to_string(cfg.in_channels) +
                         ",H,W] control raster, got " + shape_str(c.shape()));
    }
    Tensor h = conv2d(c, state.embed.at("e1.w"), state.embed.at("e1.b"), 1, 1);
    h = silu(h);
    h = conv2d(h, state.embed.at("e2.w"), state.embed.at("e2.b"), 1, 1);
    h = silu(h);
    return conv2d(h, state.embed.at("e3.w"), state.embed.at("e3.b"), 1, 1);
}

ControlFeatures control_skips(const UNetModel& base, const ControlState& state, const Tensor& c,
                              const Tensor& z_t, const Tensor& emb) {
    if (state.ccfg.variant == ControlVariant::None) {
        throw ConfigError("control_skips: variant 'none' has no control branch");
    }
    if (c.dim(2) != z_t.dim(2) || c.dim(3) != z_t.dim(3)) {
        throw ShapeError("control_skips: control raster " + shape_str(c.shape()) +
                         " does not match input " + shape_str(z_t.shape()));
    }
    Tensor hint = embed_control(c, state, base.cfg);
    Tensor ctrl_in = add(z_t, hint);
    const ParamStore& encoder_params =
        (state.ccfg.variant == ControlVariant::ControlNetLike) ? state.clone : base.params;
    auto [bottleneck, skips] = unet_encode(base.cfg, encoder_params, ctrl_in, emb);
    return {std::move(skips), std::move(bottleneck)};
}

Tensor wca_alpha(const Tensor& s, const Tensor& s_ctr, const ParamStore& adapter,
                 const std::string& prefix, int ws, bool scaled_attention) {
    if (!same_shape(s.shape(), s_ctr.shape())) {
        throw ShapeError("wca_alpha: skip shapes differ: " + shape_str(s.shape()) + " vs " +
                         shape_str(s_ctr.shape()));
    }
    int c = s.dim(1);
    Tensor q = conv2d(s_ctr, adapter.at(prefix + ".wq"), std::nullopt, 1, 1);
    Tensor k = conv2d(s, adapter.at(prefix + ".wk"), std::nullopt, 1, 1);
    Tensor v = conv2d(s, adapter.at(prefix + ".wv"), std::nullopt, 1, 1);
    Tensor qt = window_partition(q, ws);
    Tensor kt = window_partition(k, ws);
    Tensor vt = window_partition(v, ws);
    Tensor scores = batched_matmul(qt, transpose_last2(kt));
    if (scaled_attention) {
        scores = scale(scores, 1.0f / std::sqrt(static_cast<float>(c)));
    }
    Tensor attn = softmax(scores, -1);
    Tensor out_tokens = batched_matmul(attn, vt);
    Tensor merged = window_merge(out_tokens, ws, s.shape());
    Tensor logits = conv2d(merged, adapter.at(prefix + ".w1.w"), adapter.at(prefix + ".w1.b"), 1, 0);
    return sigmoid(logits);
}

Tensor smartcontrol_alpha(const Tensor& s, const Tensor& s_ctr, const ParamStore& adapter,
                          const std::string& prefix) {
    if (!same_shape(s.shape(), s_ctr.shape())) {
        throw ShapeError("smartcontrol_alpha: skip shapes differ: " + shape_str(s.shape()) +
                         " vs " + shape_str(s_ctr.shape()));
    }
    Tensor h = concat_channels(s, s_ctr);
    h = conv2d(h, adapter.at(prefix + ".c1.w"), adapter.at(prefix + ".c1.b"), 1, 1);
    h = silu(h);
    h = conv2d(h, adapter.at(prefix + ".c2.w"), adapter.at(prefix + ".c2.b"), 1, 1);
    h = silu(h);
    Tensor logits = conv2d(h, adapter.at(prefix + ".c3.w"), adapter.at(prefix + ".c3.b"), 1, 0);
    return sigmoid(logits);
}

Tensor mix_skip(const Tensor& s, const Tensor& s_ctr, const Tensor& alpha) {
    if (!same_shape(s.shape(), s_ctr.shape())) {
        throw ShapeError("mix_skip: skip shapes differ: " + shape_str(s.shape()) + " vs " +
                         shape_str(s_ctr.shape()));
    }
    if (alpha.rank() != 4 || alpha.dim(1) != 1 || alpha.dim(0) != s.dim(0) ||
        alpha.dim(2) != s.dim(2) || alpha.dim(3) != s.dim(3)) {
        throw ShapeError("mix_skip: alpha must be [B,1,H,W] matching " + shape_str(s.shape()) +
                         ", got " + shape_str(alpha.shape()));
    }
    return add(s, mul(s_ctr, alpha));
}

Tensor controlled_predict_noise(const UNetModel& base, const ControlState& state,
                                const Tensor& z_t, int t, const std::vector<int>& labels,
                                const Tensor& c, const ControlOptions& opts) {
    if (state.ccfg.variant == ControlVariant::None) {
        return predict_noise(base, z_t, t, labels);
    }
    const UNetConfig& cfg = base.cfg;
    state.ccfg.validate(cfg, z_t.dim(2));
    Tensor emb = cond_embedding(cfg, base.params, t, labels);
    auto [bottleneck, skips] = unet_encode(cfg, base.params, z_t, emb);
    ControlFeatures ctrl = control_skips(base, state, c, z_t, emb);

    int n = cfg.levels();
    SkipFeatures mixed;
    Tensor mid = bottleneck;
    if (state.ccfg.variant == ControlVariant::ControlNetLike) {
        for (int i = 0; i < n; ++i) {
            std::string zp = "zero" + std::to_string(i);
            Tensor r = conv2d(ctrl.skips.s[static_cast<size_t>(i)], state.adapter.at(zp + ".w"),
                              state.adapter.at(zp + ".b"), 1, 0);
            mixed.s.push_back(add(skips.s[static_cast<size_t>(i)], r));
        }
        Tensor r_mid =
            conv2d(ctrl.bottleneck, state.adapter.at("zmid.w"), state.adapter.at("zmid.b"), 1, 0);
        mid = add(bottleneck, r_mid);
    } else {
        bool is_wca = state.ccfg.variant == ControlVariant::WCA;
        for (int i = 0; i < n; ++i) {
            const Tensor& s = skips.s[static_cast<size_t>(i)];
            const Tensor& s_ctr = ctrl.skips.s[static_cast<size_t>(i)];
            Tensor alpha;
            if (opts.force_alpha_zero) {
                alpha = Tensor::zeros({s.dim(0), 1, s.dim(2), s.dim(3)});
            } else if (is_wca) {
                int ws = state.ccfg.window_size_for_level(i, n);
                alpha = wca_alpha(s, s_ctr, state.adapter, "wca.l" + std::to_string(i), ws,
                                  state.ccfg.scaled_attention);
            } else {
                alpha = smartcontrol_alpha(s, s_ctr, state.adapter, "sc.l" + std::to_string(i));
            }
            mixed.s.push_back(mix_skip(s, s_ctr, alpha));
        }
    }
    return unet_decode(cfg, base.params, mid, mixed, emb);
}

}  // namespace wcad
