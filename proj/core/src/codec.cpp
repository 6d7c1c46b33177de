#include "wcad/codec.hpp"

#include <cmath>

#include "wcad/optim.hpp"
#include "wcad/ops.hpp"
#include "wcad/rng.hpp"
#include "wcad/tape.hpp"

namespace wcad {

namespace {

Tensor conv_init(int cout, int cin, int k, Rng& rng) {
    float bound = 1.0f / std::sqrt(static_cast<float>(cin * k * k));
    return Tensor::uniform({cout, cin, k, k}, -bound, bound, rng);
}

Tensor bias_init(int cout, int cin, int k, Rng& rng) {
    float bound = 1.0f / std::sqrt(static_cast<float>(cin * k * k));
    return Tensor::uniform({cout}, -bound, bound, rng);
}

}  // namespace

LatentCodec LatentCodec::build(const CodecConfig& cfg, uint64_t seed) {
    LatentCodec codec;
    codec.cfg_ = cfg;
    if (cfg.identity) return codec;
    Rng rng(seed);
    int hc = cfg.hidden_channels, lc = cfg.latent_channels, ic = cfg.in_channels;
    codec.params_.add("enc1.w", conv_init(hc, ic, 3, rng));
    codec.params_.add("enc1.b", bias_init(hc, ic, 3, rng));
    codec.params_.add("enc2.w", conv_init(lc, hc, 3, rng));
    codec.params_.add("enc2.b", bias_init(lc, hc, 3, rng));
    codec.params_.add("dec1.w", conv_init(hc, lc, 3, rng));
    codec.params_.add("dec1.b", bias_init(hc, lc, 3, rng));
    codec.params_.add("dec2.w", conv_init(hc, hc, 3, rng));
    codec.params_.add("dec2.b", bias_init(hc, hc, 3, rng));
    codec.params_.add("dec3.w", conv_init(ic, hc, 3, rng));
    codec.params_.add("dec3.b", bias_init(ic, hc, 3, rng));
    return codec;
}

Tensor LatentCodec::encode(const Tensor& x) const {
    if (cfg_.identity) return x;
    if (x.rank() != 4 || x.dim(1) != cfg_.in_channels) {
        throw ShapeError("codec encode: expected [B," + std::to_string(cfg_.in_channels) +
                         ",H,W], got " + shape_str(x.shape()));
    }
    if (x.dim(2) % 4 != 0 || x.dim(3) % 4 != 0) {
        throw ShapeError("codec encode: spatial dims " + std::to_string(x.dim(2)) + "x" +
                         std::to_string(x.dim(3)) + " not divisible by 4");
    }
    Tensor h = conv2d(x, params_.at("enc1.w"), params_.at("enc1.b"), 2, 1);
    h = silu(h);
    return conv2d(h, params_.at("enc2.w"), params_.at("enc2.b"), 2, 1);
}

Tensor LatentCodec::decode(const Tensor& z) const {
    if (cfg_.identity) return z;
    if (z.rank() != 4 || z.dim(1) != cfg_.latent_channels) {
        throw ShapeError("codec decode: expected [B," + std::to_string(cfg_.latent_channels) +
                         ",h,w] latent, got " + shape_str(z.shape()));
    }
    Tensor h = conv2d(z, params_.at("dec1.w"), params_.at("dec1.b"), 1, 1);
    h = silu(h);
    h = upsample_nearest2x(h);
    h = conv2d(h, params_.at("dec2.w"), params_.at("dec2.b"), 1, 1);
    h = silu(h);
    h = upsample_nearest2x(h);
    return conv2d(h, params_.at("dec3.w"), params_.at("dec3.b"), 1, 1);
}

std::vector<float> codec_train(LatentCodec& codec, const std::vector<Tensor>& images, int steps,
                               int batch, float lr, uint64_t seed) {
    if (codec.config().identity) {
        throw ConfigError("codec_train: identity codec has no trainable parameters");
    }
    if (images.empty()) throw ConfigError("codec_train: empty dataset");
    Rng rng(seed);
    AdamOptimizer opt(lr);
    std::vector<float> history;
    history.reserve(static_cast<size_t>(steps));
    for (int step = 0; step < steps; ++step) {
        // assemble a batch
        const Tensor& first = images[0];
        int c = first.dim(0), h = first.dim(1), w = first.dim(2);
        Tensor xb = Tensor::zeros({batch, c, h, w});
        float* xp = xb.data();
        size_t per = static_cast<size_t>(c) * h * w;
        for (int b = 0; b < batch; ++b) {
            const Tensor& img = images[rng.next_below(images.size())];
            const float* src = img.data();
            for (size_t i = 0; i < per; ++i) xp[static_cast<size_t>(b) * per + i] = src[i];
        }
        Tape tape;
        TapeGuard guard(tape);
        Tensor recon = codec.decode(codec.encode(xb));
        Tensor diff = sub(recon, xb);
        Tensor loss = mean_all(mul(diff, diff));
        codec.params().zero_grads();
        tape.backward(loss);
        opt.step(codec.params());
        history.push_back(loss.item());
    }
    return history;
}

}  // namespace wcad
