#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wcad/tensor.hpp"

namespace wcad {

// Tile classes, also the painter order indices into the palettes.
enum TileClass : int {
    kBackground = 0,
    kRoad = 1,
    kBuilding = 2,
    kWater = 3,
    kVegetation = 4,
};
constexpr int kNumTileClasses = 5;

// Flat colors of the control raster (map-like tile), one RGB triple per class.
extern const float kControlPalette[kNumTileClasses][3];
// Base colors of the rendered target ("satellite" look); pairwise separated by
// more than 0.6 so the nearest-color mask stays exact under texture noise.
extern const float kTargetPalette[kNumTileClasses][3];

constexpr float kTargetNoiseAmplitude = 0.15f;

struct Primitive {
    TileClass kind = kRoad;
    // road: polyline in points with stroke width
    // building: axis-aligned rect, points = {top-left, bottom-right}
    // water/vegetation: closed polygon
    std::vector<std::pair<double, double>> points;
    double width = 0.0;
};

struct SceneSpec {
    uint64_t seed = 0;
    int size = 32;
    int scene_label = 0;
    std::vector<Primitive> primitives;
};

struct GeometryTile {
    Tensor raster;                 // [3,size,size], palette colors only
    std::vector<uint8_t> class_map;  // size*size, row-major TileClass values
    int size = 0;
};

struct Sample {
    Tensor x0;  // [3,size,size] in [-1,1]
    GeometryTile tile;
    int label = 0;
    uint64_t seed = 0;
};

struct Dataset {
    std::vector<Sample> samples;
    size_t train_count = 0;  // first train_count samples form the train split

    size_t eval_count() const { return samples.size() - train_count; }
    const Sample& train(size_t i) const { return samples[i]; }
    const Sample& eval(size_t i) const { return samples[train_count + i]; }
};

// Procedural scene from a seed: label, then 1-3 roads, 0-6 buildings,
// 0-1 water blob and 0-2 vegetation blobs with label-dependent frequencies.
// size must be a power of two >= 16.
SceneSpec generate_scene(uint64_t seed, int size);

// Hard-edged flat-color control raster plus class map, painter order
// background -> water -> vegetation -> road -> building.
GeometryTile render_control(const SceneSpec& spec);

// Target image: same geometry, per-class base colors plus seeded value-noise
// texture of the given amplitude, clamped to [-1,1].
Tensor render_target(const SceneSpec& spec, float noise_amplitude = kTargetNoiseAmplitude);

// Nearest-target-color class assignment; inverts render_target exactly at
// zero noise.
std::vector<uint8_t> class_mask(const Tensor& image);

// Sample i uses seed base_seed + i; first ceil(0.9 n) samples are the train
// split.
Dataset make_dataset(int n, uint64_t base_seed, int size);

// JSON description of a spec (golden-file snapshots).
std::string scene_spec_json(const SceneSpec& spec);

}  // namespace wcad
