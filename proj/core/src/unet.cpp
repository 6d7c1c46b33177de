#include "wcad/unet.hpp"

#include <cmath>

#include "wcad/ops.hpp"
#include "wcad/rng.hpp"

namespace wcad {

namespace {

constexpr float kNormEps = 1e-5f;

Tensor conv_weight(int cout, int cin, int k, Rng& rng) {
    float bound = 1.0f / std::sqrt(static_cast<float>(cin * k * k));
    return Tensor::uniform({cout, cin, k, k}, -bound, bound, rng);
}

Tensor conv_bias(int cout, int cin, int k, Rng& rng) {
    float bound = 1.0f / std::sqrt(static_cast<float>(cin * k * k));
    return Tensor::uniform({cout}, -bound, bound, rng);
}

Tensor linear_weight(int nout, int nin, Rng& rng) {
    float bound = 1.0f / std::sqrt(static_cast<float>(nin));
    return Tensor::uniform({nout, nin}, -bound, bound, rng);
}

Tensor linear_bias(int nout, int nin, Rng& rng) {
    float bound = 1.0f / std::sqrt(static_cast<float>(nin));
    return Tensor::uniform({nout}, -bound, bound, rng);
}

void add_block(ParamStore& p, const std::string& prefix, int cin, int cout, int emb_dim,
               Rng& rng) {
    p.add(prefix + ".conv1.w", conv_weight(cout, cin, 3, rng));
    p.add(prefix + ".conv1.b", conv_bias(cout, cin, 3, rng));
    p.add(prefix + ".gn1.g", Tensor::full({cout}, 1.0f));
    p.add(prefix + ".gn1.b", Tensor::zeros({cout}));
    p.add(prefix + ".emb.w", linear_weight(cout, emb_dim, rng));
    p.add(prefix + ".emb.b", linear_bias(cout, emb_dim, rng));
    p.add(prefix + ".conv2.w", conv_weight(cout, cout, 3, rng));
    p.add(prefix + ".conv2.b", conv_bias(cout, cout, 3, rng));
    p.add(prefix + ".gn2.g", Tensor::full({cout}, 1.0f));
    p.add(prefix + ".gn2.b", Tensor::zeros({cout}));
}

// conv -> norm -> silu, injection, conv -> norm -> silu
Tensor run_block(const UNetConfig& cfg, const ParamStore& p, const std::string& prefix,
                 const Tensor& x, const Tensor& emb) {
    Tensor h = conv2d(x, p.at(prefix + ".conv1.w"), p.at(prefix + ".conv1.b"), 1, 1);
    h = group_norm(h, cfg.groups, p.at(prefix + ".gn1.g"), p.at(prefix + ".gn1.b"), kNormEps);
    h = silu(h);
    Tensor shift = linear(emb, p.at(prefix + ".emb.w"), p.at(prefix + ".emb.b"));
    h = add_channel_shift(h, shift);
    h = conv2d(h, p.at(prefix + ".conv2.w"), p.at(prefix + ".conv2.b"), 1, 1);
    h = group_norm(h, cfg.groups, p.at(prefix + ".gn2.g"), p.at(prefix + ".gn2.b"), kNormEps);
    return silu(h);
}

}  // namespace

void UNetConfig::validate() const {
    if (levels() < 2) {
        throw ConfigError("unet: need at least 2 encoder levels, got " + std::to_string(levels()));
    }
    if (in_channels < 1) throw ConfigError("unet: in_channels must be positive");
    if (base_channels < 1) throw ConfigError("unet: base_channels must be positive");
    for (int m : channel_mults) {
        if (m < 1) throw ConfigError("unet: channel multipliers must be positive");
    }
    if (groups < 1 || base_channels % groups != 0) {
        throw ConfigError("unet: base_channels " + std::to_string(base_channels) +
                          " not divisible by groups " + std::to_string(groups));
    }
    for (int i = 0; i < levels(); ++i) {
        if (level_channels(i) % groups != 0) {
            throw ConfigError("unet: level " + std::to_string(i) + " channels " +
                              std::to_string(level_channels(i)) + " not divisible by groups " +
                              std::to_string(groups));
        }
    }
    if (time_embed_dim < 2 || time_embed_dim % 2 != 0) {
        throw ConfigError("unet: time_embed_dim must be even and >= 2");
    }
    if (cond_embed_dim != time_embed_dim) {
        throw ConfigError("unet: cond_embed_dim must equal time_embed_dim (embeddings are summed)");
    }
    if (num_scene_labels < 1) throw ConfigError("unet: num_scene_labels must be positive");
}

Tensor time_embedding(int t, int dim) {
    if (dim < 2 || dim % 2 != 0) {
        throw ShapeError("time_embedding: dim must be even and >= 2, got " + std::to_string(dim));
    }
    int half = dim / 2;
    Tensor out = Tensor::zeros({dim});
    float* op = out.data();
    for (int j = 0; j < half; ++j) {
        double omega =
            (half == 1) ? 1.0 : std::pow(10000.0, -static_cast<double>(j) / (half - 1));
        double angle = static_cast<double>(t) * omega;
        op[2 * j] = static_cast<float>(std::sin(angle));
        op[2 * j + 1] = static_cast<float>(std::cos(angle));
    }
    return out;
}

UNetModel build_unet(const UNetConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    UNetModel m;
    m.cfg = cfg;
    ParamStore& p = m.params;
    int n = cfg.levels();

    p.add("stem.w", conv_weight(cfg.level_channels(0), cfg.in_channels, 3, rng));
    p.add("stem.b", conv_bias(cfg.level_channels(0), cfg.in_channels, 3, rng));
    for (int i = 0; i < n; ++i) {
        int c = cfg.level_channels(i);
        add_block(p, "enc" + std::to_string(i), c, c, cfg.time_embed_dim, rng);
        if (i < n - 1) {
            int cn = cfg.level_channels(i + 1);
            p.add("down" + std::to_string(i) + ".w", conv_weight(cn, c, 3, rng));
            p.add("down" + std::to_string(i) + ".b", conv_bias(cn, c, 3, rng));
        }
    }
    int cb = cfg.level_channels(n - 1);
    add_block(p, "mid", cb, cb, cfg.time_embed_dim, rng);
    for (int j = 0; j < n; ++j) {
        int level = n - 1 - j;
        int c = cfg.level_channels(level);
        add_block(p, "dec" + std::to_string(j), 2 * c, c, cfg.time_embed_dim, rng);
        if (level > 0) {
            int cn = cfg.level_channels(level - 1);
            p.add("up" + std::to_string(j) + ".w", conv_weight(cn, c, 3, rng));
            p.add("up" + std::to_string(j) + ".b", conv_bias(cn, c, 3, rng));
        }
    }
    p.add("head.gn.g", Tensor::full({cfg.level_channels(0)}, 1.0f));
    p.add("head.gn.b", Tensor::zeros({cfg.level_channels(0)}));
    p.add("head.w", Tensor::zeros({cfg.in_channels, cfg.level_channels(0), 3, 3}));
    p.add("head.b", Tensor::zeros({cfg.in_channels}));
    {
        float bound = 1.0f / std::sqrt(static_cast<float>(cfg.cond_embed_dim));
        p.add("cond.table",
              Tensor::uniform({cfg.num_scene_labels, cfg.cond_embed_dim}, -bound, bound, rng));
    }
    return m;
}

Tensor cond_embedding(const UNetConfig& cfg, const ParamStore& params, int t,
                      const std::vector<int>& labels) {
    if (t < 0) throw ShapeError("cond_embedding: negative timestep " + std::to_string(t));
    for (int l : labels) {
        if (l < 0 || l >= cfg.num_scene_labels) {
            throw ShapeError("cond_embedding: label " + std::to_string(l) + " out of range [0," +
                             std::to_string(cfg.num_scene_labels) + ")");
        }
    }
    Tensor t_emb = time_embedding(t, cfg.time_embed_dim);
    int b = static_cast<int>(labels.size());
    Tensor tiled = Tensor::zeros({b, cfg.time_embed_dim});
    float* tp = tiled.data();
    const float* src = t_emb.data();
    for (int i = 0; i < b; ++i) {
        for (int j = 0; j < cfg.time_embed_dim; ++j) {
            tp[static_cast<size_t>(i) * cfg.time_embed_dim + j] = src[j];
        }
    }
    Tensor label_emb = embed_rows(params.at("cond.table"), labels);
    return add(label_emb, tiled);
}

std::pair<Tensor, SkipFeatures> unet_encode(const UNetConfig& cfg, const ParamStore& params,
                                            const Tensor& z_t, const Tensor& emb) {
    int n = cfg.levels();
    int factor = 1 << (n - 1);
    if (z_t.rank() != 4 || z_t.dim(1) != cfg.in_channels) {
        throw ShapeError("unet_encode: expected [B," + std::to_string(cfg.in_channels) +
                         ",H,W], got " + shape_str(z_t.shape()));
    }
    if (z_t.dim(2) % factor != 0 || z_t.dim(3) % factor != 0) {
        throw ShapeError("unet_encode: resolution " + std::to_string(z_t.dim(2)) + "x" +
                         std::to_string(z_t.dim(3)) + " not divisible by 2^(N-1) = " +
                         std::to_string(factor));
    }
    Tensor x = conv2d(z_t, params.at("stem.w"), params.at("stem.b"), 1, 1);
    SkipFeatures skips;
    for (int i = 0; i < n; ++i) {
        Tensor h = run_block(cfg, params, "enc" + std::to_string(i), x, emb);
        skips.s.push_back(h);
        if (i < n - 1) {
            x = conv2d(h, params.at("down" + std::to_string(i) + ".w"),
                       params.at("down" + std::to_string(i) + ".b"), 2, 1);
        } else {
            x = h;
        }
    }
    Tensor bottleneck = run_block(cfg, params, "mid", x, emb);
    return {bottleneck, skips};
}

Tensor unet_decode(const UNetConfig& cfg, const ParamStore& params, const Tensor& bottleneck,
                   const SkipFeatures& skips, const Tensor& emb) {
    int n = cfg.levels();
    if (skips.levels() != n) {
        throw ShapeError("unet_decode: got " + std::to_string(skips.levels()) + " skips for " +
                         std::to_string(n) + " levels");
    }
    Tensor d = bottleneck;
    for (int j = 0; j < n; ++j) {
        int level = n - 1 - j;
        const Tensor& skip = skips.s[static_cast<size_t>(level)];
        if (skip.dim(1) != cfg.level_channels(level) || skip.dim(2) != d.dim(2) ||
            skip.dim(3) != d.dim(3)) {
            throw ShapeError("unet_decode: skip at level " + std::to_string(level) + " has shape " +
                             shape_str(skip.shape()) + ", expected [B," +
                             std::to_string(cfg.level_channels(level)) + "," +
                             std::to_string(d.dim(2)) + "," + std::to_string(d.dim(3)) + "]");
        }
        d = concat_channels(d, skip);
        d = run_block(cfg, params, "dec" + std::to_string(j), d, emb);
        if (level > 0) {
            d = upsample_nearest2x(d);
            d = conv2d(d, params.at("up" + std::to_string(j) + ".w"),
                       params.at("up" + std::to_string(j) + ".b"), 1, 1);
        }
    }
    d = group_norm(d, cfg.groups, params.at("head.gn.g"), params.at("head.gn.b"), kNormEps);
    d = silu(d);
    return conv2d(d, params.at("head.w"), params.at("head.b"), 1, 1);
}

Tensor predict_noise(const UNetModel& model, const Tensor& z_t, int t,
                     const std::vector<int>& labels) {
    if (t < 1) throw ShapeError("predict_noise: timestep must be >= 1, got " + std::to_string(t));
    if (static_cast<int>(labels.size()) != z_t.dim(0)) {
        throw ShapeError("predict_noise: " + std::to_string(labels.size()) + " labels for batch " +
                         std::to_string(z_t.dim(0)));
    }
    Tensor emb = cond_embedding(model.cfg, model.params, t, labels);
    auto [bottleneck, skips] = unet_encode(model.cfg, model.params, z_t, emb);
    return unet_decode(model.cfg, model.params, bottleneck, skips, emb);
}

std::vector<std::string> encoder_param_names(const UNetConfig& cfg) {
    std::vector<std::string> names = {"stem.w", "stem.b"};
    auto block = [&](const std::string& prefix) {
        for (const char* suffix : {".conv1.w", ".conv1.b", ".gn1.g", ".gn1.b", ".emb.w", ".emb.b",
                                   ".conv2.w", ".conv2.b", ".gn2.g", ".gn2.b"}) {
            names.push_back(prefix + suffix);
        }
    };
    for (int i = 0; i < cfg.levels(); ++i) {
        block("enc" + std::to_string(i));
        if (i < cfg.levels() - 1) {
            names.push_back("down" + std::to_string(i) + ".w");
            names.push_back("down" + std::to_string(i) + ".b");
        }
    }
    block("mid");
    return names;
}

void set_trainable(ParamStore& params, bool trainable) {
    for (auto& [name, p] : params) p.set_requires_grad(trainable);
}

}  // namespace wcad
