#pragma once

#include <string>
#include <vector>

#include "wcad/config.hpp"

namespace wcad {

struct TrainResult {
    std::string checkpoint_path;
    std::string loss_csv_path;
    std::vector<float> losses;
};

// Full training run per the config: deterministic batch/t/noise streams from
// training.seed, optimizer over the variant's trainable parameters only,
// loss CSV plus periodic and final checkpoints under paths.out_dir.
TrainResult run_train(const Config& cfg);

// DDIM sampling from a checkpoint: writes sample_%06d_gen.ppm and
// sample_%06d_control.ppm pairs plus index.json.
void run_sample(const Config& cfg);

// Per-variant comparison table (fid, alignment IoU, runtime block) over the
// checkpoints listed in eval.checkpoints, with a real-data baseline row.
void run_eval(const Config& cfg);

// Runtime/parameter/FLOP table over bench.variants.
void run_bench(const Config& cfg);

// Dataset export: PPM pairs plus JSON index with seeds and labels.
void run_dataset_export(const Config& cfg);

}  // namespace wcad
