#pragma once

#include <cstdint>
#include <string>

#include "wcad/tensor.hpp"

namespace wcad {

// Checkpoint file layout (little-endian):
//   bytes 0..3   magic "WCAD"
//   u32          version (currently 1)
//   u64          JSON header length
//   header       JSON: {"config": <echo>, "manifest": [{"name","shape"}...],
//                       "step": int, "rng_state": uint64}
//   payload      each tensor's f32 values, row-major, manifest order
struct CheckpointData {
    std::string config_json;
    ParamStore params;
    int64_t step = 0;
    uint64_t rng_state = 0;
};

constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParamStore& params, const std::string& config_json, int64_t step,
                     uint64_t rng_state, const std::string& path);
CheckpointData load_checkpoint(const std::string& path);

}  // namespace wcad
