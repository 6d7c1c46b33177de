#include "wcad/eval.hpp"

namespace wcad {

int64_t count_params(const ParamStore& store, bool trainable_only) {
    int64_t total = 0;
    for (const auto& [name, p] : store) {
        if (trainable_only && !p.requires_grad()) continue;
        total += static_cast<int64_t>(p.numel());
    }
    return total;
}

int64_t count_flops(const std::vector<LayerDesc>& layers) {
    int64_t total = 0;
    for (const LayerDesc& l : layers) {
        switch (l.kind) {
            case LayerDesc::Kind::Conv:
                total += 2 * l.batch * l.cout * l.cin * l.kh * l.kw * l.ho * l.wo;
                break;
            case LayerDesc::Kind::Matmul: total += 2 * l.batch * l.m * l.k * l.n; break;
            case LayerDesc::Kind::Attention:
                // QK^T and AV matmuls plus 5 flops per softmax element
                total += l.batch * (4 * l.m * l.m * l.k + 5 * l.m * l.m);
                break;
            case LayerDesc::Kind::Elementwise: total += l.count; break;
            case LayerDesc::Kind::Activation: total += 4 * l.count; break;
            case LayerDesc::Kind::Norm: total += 8 * l.count; break;
        }
    }
    return total;
}

namespace {

LayerDesc conv_desc(int64_t batch, int64_t cin, int64_t cout, int64_t k, int64_t ho, int64_t wo) {
    LayerDesc d;
    d.kind = LayerDesc::Kind::Conv;
    d.batch = batch;
    d.cin = cin;
    d.cout = cout;
    d.kh = k;
    d.kw = k;
    d.ho = ho;
    d.wo = wo;
    return d;
}

LayerDesc matmul_desc(int64_t batch, int64_t m, int64_t k, int64_t n) {
    LayerDesc d;
    d.kind = LayerDesc::Kind::Matmul;
    d.batch = batch;
    d.m = m;
    d.k = k;
    d.n = n;
    return d;
}

LayerDesc simple_desc(LayerDesc::Kind kind, int64_t count) {
    LayerDesc d;
    d.kind = kind;
    d.count = count;
    return d;
}

// conv1 + norm + act + injection + conv2 + norm + act
void push_block(std::vector<LayerDesc>& out, int64_t b, int64_t cin, int64_t cout, int64_t res,
                int64_t emb_dim) {
    int64_t plane = res * res;
    out.push_back(conv_desc(b, cin, cout, 3, res, res));
    out.push_back(simple_desc(LayerDesc::Kind::Norm, b * cout * plane));
    out.push_back(simple_desc(LayerDesc::Kind::Activation, b * cout * plane));
    out.push_back(matmul_desc(1, b, emb_dim, cout));
    out.push_back(simple_desc(LayerDesc::Kind::Elementwise, b * cout * plane));
    out.push_back(conv_desc(b, cout, cout, 3, res, res));
    out.push_back(simple_desc(LayerDesc::Kind::Norm, b * cout * plane));
    out.push_back(simple_desc(LayerDesc::Kind::Activation, b * cout * plane));
}

void push_encoder(std::vector<LayerDesc>& out, const UNetConfig& cfg, int64_t b, int64_t res) {
    int n = cfg.levels();
    out.push_back(conv_desc(b, cfg.in_channels, cfg.level_channels(0), 3, res, res));
    int64_t r = res;
    for (int i = 0; i < n; ++i) {
        int64_t c = cfg.level_channels(i);
        push_block(out, b, c, c, r, cfg.time_embed_dim);
        if (i < n - 1) {
            out.push_back(conv_desc(b, c, cfg.level_channels(i + 1), 3, r / 2, r / 2));
            r /= 2;
        }
    }
    push_block(out, b, cfg.level_channels(n - 1), cfg.level_channels(n - 1), r,
               cfg.time_embed_dim);
}

void push_decoder(std::vector<LayerDesc>& out, const UNetConfig& cfg, int64_t b, int64_t res) {
    int n = cfg.levels();
    int64_t r = res >> (n - 1);
    for (int j = 0; j < n; ++j) {
        int level = n - 1 - j;
        int64_t c = cfg.level_channels(level);
        push_block(out, b, 2 * c, c, r, cfg.time_embed_dim);
        if (level > 0) {
            out.push_back(conv_desc(b, c, cfg.level_channels(level - 1), 3, 2 * r, 2 * r));
            r *= 2;
        }
    }
    int64_t c0 = cfg.level_channels(0);
    out.push_back(simple_desc(LayerDesc::Kind::Norm, b * c0 * res * res));
    out.push_back(simple_desc(LayerDesc::Kind::Activation, b * c0 * res * res));
    out.push_back(conv_desc(b, c0, cfg.in_channels, 3, res, res));
}

}  // namespace

std::vector<LayerDesc> describe_unet_forward(const UNetConfig& cfg, int resolution, int batch) {
    std::vector<LayerDesc> out;
    // conditioning: label embedding + tiled time embedding add
    out.push_back(simple_desc(LayerDesc::Kind::Elementwise,
                              static_cast<int64_t>(batch) * cfg.time_embed_dim));
    push_encoder(out, cfg, batch, resolution);
    push_decoder(out, cfg, batch, resolution);
    return out;
}

std::vector<LayerDesc> describe_controlled_forward(const UNetConfig& cfg,
                                                   const ControlConfig& ccfg, int resolution,
                                                   int batch) {
    std::vector<LayerDesc> out = describe_unet_forward(cfg, resolution, batch);
    if (ccfg.variant == ControlVariant::None) return out;

    int64_t b = batch, res = resolution;
    // control-map embedder + hint add
    int64_t hid = ccfg.embed_hidden;
    out.push_back(conv_desc(b, cfg.in_channels, hid, 3, res, res));
    out.push_back(simple_desc(LayerDesc::Kind::Activation, b * hid * res * res));
    out.push_back(conv_desc(b, hid, hid, 3, res, res));
    out.push_back(simple_desc(LayerDesc::Kind::Activation, b * hid * res * res));
    out.push_back(conv_desc(b, hid, cfg.in_channels, 3, res, res));
    out.push_back(simple_desc(LayerDesc::Kind::Elementwise, b * cfg.in_channels * res * res));

    // control branch encoder (frozen copy or trainable clone: same shape)
    push_encoder(out, cfg, b, res);

    int n = cfg.levels();
    for (int i = 0; i < n; ++i) {
        int64_t c = cfg.level_channels(i);
        int64_t r = res >> i;
        int64_t plane = r * r;
        switch (ccfg.variant) {
            case ControlVariant::WCA: {
                int ws = ccfg.window_size_for_level(i, n);
                for (int q = 0; q < 3; ++q) out.push_back(conv_desc(b, c, c, 3, r, r));
                LayerDesc attn;
                attn.kind = LayerDesc::Kind::Attention;
                attn.batch = b * (r / ws) * (r / ws);
                attn.m = static_cast<int64_t>(ws) * ws;
                attn.k = c;
                out.push_back(attn);
                if (ccfg.scaled_attention) {
                    out.push_back(simple_desc(LayerDesc::Kind::Elementwise,
                                              attn.batch * attn.m * attn.m));
                }
                out.push_back(conv_desc(b, c, 1, 1, r, r));
                out.push_back(simple_desc(LayerDesc::Kind::Activation, b * plane));
                out.push_back(simple_desc(LayerDesc::Kind::Elementwise, 2 * b * c * plane));
                break;
            }
            case ControlVariant::SmartControlLike: {
                out.push_back(conv_desc(b, 2 * c, c, 3, r, r));
                out.push_back(simple_desc(LayerDesc::Kind::Activation, b * c * plane));
                out.push_back(conv_desc(b, c, c, 3, r, r));
                out.push_back(simple_desc(LayerDesc::Kind::Activation, b * c * plane));
                out.push_back(conv_desc(b, c, 1, 1, r, r));
                out.push_back(simple_desc(LayerDesc::Kind::Activation, b * plane));
                out.push_back(simple_desc(LayerDesc::Kind::Elementwise, 2 * b * c * plane));
                break;
            }
            case ControlVariant::ControlNetLike: {
                out.push_back(conv_desc(b, c, c, 1, r, r));
                out.push_back(simple_desc(LayerDesc::Kind::Elementwise, b * c * plane));
                break;
            }
            case ControlVariant::None: break;
        }
    }
    if (ccfg.variant == ControlVariant::ControlNetLike) {
        int64_t cb = cfg.level_channels(n - 1);
        int64_t rb = res >> (n - 1);
        out.push_back(conv_desc(b, cb, cb, 1, rb, rb));
        out.push_back(simple_desc(LayerDesc::Kind::Elementwise, b * cb * rb * rb));
    }
    return out;
}

}  // namespace wcad
