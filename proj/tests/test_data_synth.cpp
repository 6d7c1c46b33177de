#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "wcad/data_synth.hpp"

using namespace wcad;
using namespace wcad::test;

namespace {

// per-pixel containment oracle: evaluates every primitive predicate directly
// at each pixel center with the same painter precedence
std::vector<uint8_t> class_map_oracle(const SceneSpec& spec) {
    int size = spec.size;
    std::vector<uint8_t> map(static_cast<size_t>(size) * size, kBackground);
    auto point_in_polygon = [](const Primitive& prim, double xc, double yc) {
        bool inside = false;
        size_t nv = prim.points.size();
        for (size_t e = 0; e < nv; ++e) {
            const auto& p = prim.points[e];
            const auto& q = prim.points[(e + 1) % nv];
            if ((p.second <= yc) != (q.second <= yc)) {
                double x_int =
                    p.first + (yc - p.second) * (q.first - p.first) / (q.second - p.second);
                if (xc < x_int) inside = !inside;
            }
        }
        return inside;
    };
    auto on_road = [](const Primitive& prim, double xc, double yc) {
        for (size_t s = 0; s + 1 < prim.points.size(); ++s) {
            double ax = prim.points[s].first, ay = prim.points[s].second;
            double bx = prim.points[s + 1].first, by = prim.points[s + 1].second;
            double dx = bx - ax, dy = by - ay;
            double len2 = dx * dx + dy * dy;
            double t = len2 > 0.0 ? ((xc - ax) * dx + (yc - ay) * dy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            double cx = ax + t * dx, cy = ay + t * dy;
            double d2 = (xc - cx) * (xc - cx) + (yc - cy) * (yc - cy);
            if (d2 <= prim.width * prim.width / 4.0) return true;
        }
        return false;
    };
    auto in_rect = [](const Primitive& prim, double xc, double yc) {
        double x0 = std::lround(prim.points[0].first), y0 = std::lround(prim.points[0].second);
        double x1 = std::lround(prim.points[1].first), y1 = std::lround(prim.points[1].second);
        return xc >= x0 && xc <= x1 + 0.999 && yc >= y0 && yc <= y1 + 0.999;
    };
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double xc = x + 0.5, yc = y + 0.5;
            uint8_t cls = kBackground;
            for (TileClass pass : {kWater, kVegetation, kRoad, kBuilding}) {
                for (const Primitive& prim : spec.primitives) {
                    if (prim.kind != pass) continue;
                    bool hit = false;
                    switch (prim.kind) {
                        case kWater:
                        case kVegetation: hit = point_in_polygon(prim, xc, yc); break;
                        case kRoad: hit = on_road(prim, xc, yc); break;
                        case kBuilding:
                            hit = xc >= prim.points[0].first && xc <= prim.points[1].first + 0.5 &&
                                  yc >= prim.points[0].second && yc <= prim.points[1].second + 0.5;
                            break;
                        default: break;
                    }
                    if (hit) cls = static_cast<uint8_t>(pass);
                }
            }
            map[static_cast<size_t>(y) * size + x] = cls;
        }
    }
    (void)in_rect;
    return map;
}

}  // namespace

TEST_CASE("generate_scene: deterministic and in bounds") {
    SceneSpec a = generate_scene(123, 32);
    SceneSpec b = generate_scene(123, 32);
    CHECK(scene_spec_json(a) == scene_spec_json(b));
    CHECK_THROWS_AS(generate_scene(1, 24), ConfigError);
    CHECK_THROWS_AS(generate_scene(1, 8), ConfigError);
}

TEST_CASE("generate_scene: 1000 seeds keep all primitives inside the tile") {
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        SceneSpec spec = generate_scene(seed, 32);
        CHECK(spec.scene_label >= 0);
        CHECK(spec.scene_label < 8);
        int roads = 0, buildings = 0, water = 0, veg = 0;
        for (const Primitive& p : spec.primitives) {
            double margin = p.kind == kRoad ? p.width / 2.0 : 0.0;
            for (const auto& [x, y] : p.points) {
                CHECK(x >= margin - 1e-9);
                CHECK(x <= 32.0 - margin + 1e-9);
                CHECK(y >= margin - 1e-9);
                CHECK(y <= 32.0 - margin + 1e-9);
            }
            switch (p.kind) {
                case kRoad: ++roads; break;
                case kBuilding: ++buildings; break;
                case kWater: ++water; break;
                case kVegetation: ++veg; break;
                default: break;
            }
        }
        CHECK(roads >= 1);
        CHECK(roads <= 3);
        CHECK(buildings <= 6);
        CHECK(water <= 1);
        CHECK(veg <= 2);
    }
}

TEST_CASE("generate_scene: seed 0 matches the committed golden snapshot") {
    SceneSpec spec = generate_scene(0, 32);
    std::ifstream golden(std::string(WCAD_TEST_DATA_DIR) + "/scene_seed0_size32.json");
    REQUIRE(golden.good());
    std::ostringstream ss;
    ss << golden.rdbuf();
    CHECK(scene_spec_json(spec) + "\n" == ss.str());
}

TEST_CASE("render_control: empty primitive list gives a uniform background tile") {
    SceneSpec spec;
    spec.seed = 1;
    spec.size = 16;
    GeometryTile tile = render_control(spec);
    size_t plane = 16 * 16;
    for (size_t i = 0; i < plane; ++i) {
        CHECK(tile.class_map[i] == kBackground);
        CHECK(tile.raster.data()[i] == kControlPalette[kBackground][0]);
        CHECK(tile.raster.data()[plane + i] == kControlPalette[kBackground][1]);
        CHECK(tile.raster.data()[2 * plane + i] == kControlPalette[kBackground][2]);
    }
}

TEST_CASE("render_control: bit-identical across calls; palette colors only") {
    SceneSpec spec = generate_scene(7, 32);
    GeometryTile a = render_control(spec);
    GeometryTile b = render_control(spec);
    CHECK(bit_identical(a.raster, b.raster));
    CHECK(a.class_map == b.class_map);
    size_t plane = 32 * 32;
    for (size_t i = 0; i < plane; ++i) {
        int cls = a.class_map[i];
        CHECK(a.raster.data()[i] == kControlPalette[cls][0]);
        CHECK(a.raster.data()[plane + i] == kControlPalette[cls][1]);
        CHECK(a.raster.data()[2 * plane + i] == kControlPalette[cls][2]);
    }
}

TEST_CASE("render_control: class map equals the per-pixel containment oracle") {
    for (uint64_t seed : {1ULL, 5ULL, 9ULL, 33ULL, 77ULL}) {
        SceneSpec spec = generate_scene(seed, 32);
        GeometryTile tile = render_control(spec);
        std::vector<uint8_t> oracle = class_map_oracle(spec);
        size_t mismatches = 0;
        for (size_t i = 0; i < oracle.size(); ++i) {
            if (tile.class_map[i] != oracle[i]) ++mismatches;
        }
        CHECK(mismatches == 0);
    }
}

TEST_CASE("render_target: deterministic, in range, palette plus bounded noise") {
    SceneSpec spec = generate_scene(11, 32);
    Tensor a = render_target(spec);
    Tensor b = render_target(spec);
    CHECK(bit_identical(a, b));
    GeometryTile tile = render_control(spec);
    size_t plane = 32 * 32;
    for (size_t i = 0; i < plane; ++i) {
        int cls = tile.class_map[i];
        for (int ch = 0; ch < 3; ++ch) {
            float v = a.data()[static_cast<size_t>(ch) * plane + i];
            CHECK(v >= -1.0f);
            CHECK(v <= 1.0f);
            CHECK(std::abs(v - kTargetPalette[cls][ch]) <= kTargetNoiseAmplitude + 1e-6ف);
        }
    }
}

TEST_CASE("class_mask: inverts the zero-noise render exactly") {
    SceneSpec spec = generate_scene(13, 32);
    Tensor clean = render_target(spec, 0.0f);
    GeometryTile tile = render_control(spec);
    std::vector<uint8_t> mask = class_mask(clean);
    CHECK(mask == tile.class_map);
}

TEST_CASE("class_mask: uniform background image maps to all background") {
    Tensor img = Tensor::zeros({3, 16, 16});
    for (int ch = 0; ch < 3; ++ch) {
        for (size_t i = 0; i < 256; ++i) {
            img.data()[static_cast<size_t>(ch) * 256 + i] = kTargetPalette[kBackground][ch];
        }
    }
    std::vector<uint8_t> mask = class_mask(img);
    for (uint8_t m : mask) CHECK(m == kBackground);
}

TEST_CASE("class_mask: accuracy under texture noise stays above 99 percent") {
    size_t total = 0, correct = 0;
    for (uint64_t seed = 100; seed < 200; ++seed) {
        SceneSpec spec = generate_scene(seed, 32);
        Tensor noisy = render_target(spec);
        GeometryTile tile = render_control(spec);
        std::vector<uint8_t> mask = class_mask(noisy);
        for (size_t i = 0; i < mask.size(); ++i) {
            ++total;
            if (mask[i] == tile.class_map[i]) ++correct;
        }
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(total) > 0.99);
}

TEST_CASE("target palette colors are separated by more than 0.6") {
    for (int a = 0; a < kNumTileClasses; ++a) {
        for (int b = a + 1; b < kNumTileClasses; ++b) {
            double d = 0.0;
            for (int ch = 0; ch < 3; ++ch) {
                double diff = kTargetPalette[a][ch] - kTargetPalette[b][ch];
                d += diff * diff;
            }
            CHECK(std::sqrt(d) > 0.6);
        }
    }
}

TEST_CASE("make_dataset: split law, determinism, disjointness") {
    Dataset ds = make_dataset(10, 42, 16);
    CHECK(ds.train_count == 9);
    CHECK(ds.eval_count() == 1);
    CHECK(ds.samples.size() == 10);
    for (size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(ds.samples[i].seed == 42 + i);  // disjoint deterministic seeds
        CHECK(ds.samples[i].label == generate_scene(42 + i, 16).scene_label);
    }
    Dataset again = make_dataset(10, 42, 16);
    for (size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(bit_identical(ds.samples[i].x0, again.samples[i].x0));
        CHECK(bit_identical(ds.samples[i].tile.raster, again.samples[i].tile.raster));
    }
    CHECK_THROWS_AS(make_dataset(5, 1, 16), ConfigError);
}
