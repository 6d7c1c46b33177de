#pragma once

#include <map>
#include <string>
#include <vector>

#include "wcad/control.hpp"
#include "wcad/unet.hpp"

namespace wcad {

struct DatasetConfig {
    int n = 200;
    uint64_t base_seed = 1234;
    int size = 32;
};

struct DiffusionConfig {
    int T = 200;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    bool latent_mode = false;
    int latent_channels = 4;
};

struct TrainingConfig {
    int epochs = 1;
    double lr = 1e-3;
    int batch = 8;
    uint64_t seed = 0;
    int max_steps = 0;  // when > 0, overrides epochs with an exact step count
};

struct SamplingConfig {
    int ddim_steps = 20;
    int count = 16;
    uint64_t seed = 0;
};

struct PathsConfig {
    std::string out_dir = "out";
    std::string checkpoint;
};

struct EvalConfig {
    std::map<std::string, std::string> checkpoints;  // variant name -> checkpoint path
    int count = 64;
    int extractor_epochs = 5;
    uint64_t extractor_seed = 7;
};

struct BenchConfig {
    std::vector<std::string> variants = {"none", "controlnet", "smartcontrol", "wca"};
    std::map<std::string, std::string> checkpoints;  // optional, per variant
    int batch = 4;
    int ddim_steps = 20;
    int repeats = 10;
    uint64_t seed = 1;
};

struct Config {
    DatasetConfig dataset;
    UNetConfig model;
    DiffusionConfig diffusion;
    ControlConfig control;
    TrainingConfig training;
    SamplingConfig sampling;
    PathsConfig paths;
    EvalConfig eval;
    BenchConfig bench;

    // resolution the denoiser operates at (dataset size, or /4 in latent mode)
    int operating_resolution() const;
};

// Strict parser: unknown keys anywhere are errors.
Config parse_config_json(const std::string& text);
Config load_config_file(const std::string& path);
std::string config_to_json(const Config& cfg);

// Total validation: after this passes, no module-level precondition can fail.
void validate_config(const Config& cfg);

// Field-by-field comparison of the sections a checkpoint must agree on
// (model, diffusion, control); returns the first mismatched field name or "".
std::string config_compat_mismatch(const Config& a, const Config& b);

}  // namespace wcad
