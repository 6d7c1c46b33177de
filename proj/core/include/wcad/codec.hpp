#pragma once

#include <cstdint>
#include <vector>

#include "wcad/tensor.hpp"

namespace wcad {

// Small strided-conv autoencoder with 4x spatial downsampling, used when the
// diffusion process runs in latent space. The identity codec (default) makes
// pixel space a special case of the same interface.
struct CodecConfig {
    bool identity = true;
    int in_channels = 3;
    int latent_channels = 4;
    int hidden_channels = 16;
};

class LatentCodec {
  public:
    static LatentCodec build(const CodecConfig& cfg, uint64_t seed);

    Tensor encode(const Tensor& x) const;
    Tensor decode(const Tensor& z) const;

    const CodecConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    int latent_channels() const { return cfg_.identity ? cfg_.in_channels : cfg_.latent_channels; }
    int spatial_factor() const { return cfg_.identity ? 1 : 4; }

  private:
    CodecConfig cfg_;
    ParamStore params_;
};

// Reconstruction training (MSE, Adam); returns the per-step loss history.
std::vector<float> codec_train(LatentCodec& codec, const std::vector<Tensor>& images, int steps,
                               int batch, float lr, uint64_t seed);

}  // namespace wcad
