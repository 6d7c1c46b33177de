#include "wcad/data_synth.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "wcad/rng.hpp"

namespace wcad {

const float kControlPalette[kNumTileClasses][3] = {
    {0.9f, 0.9f, 0.9f},  // background
    {0.2f, 0.2f, 0.2f},  // road
    {0.8f, 0.3f, 0.2f},  // building
    {0.3f, 0.5f, 0.9f},  // water
    {0.4f, 0.7f, 0.4f},  // vegetation
};

const float kTargetPalette[kNumTileClasses][3] = {
    {0.55f, 0.45f, 0.30f},    // background: dry earth
    {-0.60f, -0.60f, -0.58f}, // road: asphalt
    {0.45f, -0.15f, -0.25f},  // building: roof brick
    {-0.45f, -0.10f, 0.60f},  // water
    {-0.35f, 0.45f, -0.30f},  // vegetation
};

namespace {

uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// lattice hash in [-1,1]
double lattice_noise(uint64_t seed, int ix, int iy) {
    uint64_t key = seed ^ (static_cast<uint64_t>(static_cast<int64_t>(ix)) * 0x9E3779B97F4A7C15ULL) ^
                   (static_cast<uint64_t>(static_cast<int64_t>(iy)) * 0xC2B2AE3D27D4EB4FULL);
    return static_cast<double>(mix64(key) >> 11) * 0x1.0p-52 - 1.0;
}

// bilinear value noise, lattice cell 4 px
double value_noise(uint64_t seed, int x, int y) {
    constexpr int cell = 4;
    int ix = x / cell, iy = y / cell;
    double fx = static_cast<double>(x % cell) / cell;
    double fy = static_cast<double>(y % cell) / cell;
    double v00 = lattice_noise(seed, ix, iy);
    double v10 = lattice_noise(seed, ix + 1, iy);
    double v01 = lattice_noise(seed, ix, iy + 1);
    double v11 = lattice_noise(seed, ix + 1, iy + 1);
    double top = v00 + (v10 - v00) * fx;
    double bot = v01 + (v11 - v01) * fx;
    return top + (bot - top) * fy;
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

double dist_point_segment(double px, double py, double ax, double ay, double bx, double by) {
    double dx = bx - ax, dy = by - ay;
    double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) {
        t = ((px - ax) * dx + (py - ay) * dy) / len2;
        t = std::clamp(t, 0.0, 1.0);
    }
    double cx = ax + t * dx, cy = ay + t * dy;
    return std::sqrt((px - cx) * (px - cx) + (py - cy) * (py - cy));
}

void paint_polygon_scanline(const Primitive& prim, int size, uint8_t cls,
                            std::vector<uint8_t>& map) {
    const auto& pts = prim.points;
    size_t nv = pts.size();
    std::vector<double> xs;
    for (int y = 0; y < size; ++y) {
        double yc = y + 0.5;
        xs.clear();
        for (size_t e = 0; e < nv; ++e) {
            const auto& p = pts[e];
            const auto& q = pts[(e + 1) % nv];
            if ((p.second <= yc) != (q.second <= yc)) {
                double x_int =
                    p.first + (yc - p.second) * (q.first - p.first) / (q.second - p.second);
                xs.push_back(x_int);
            }
        }
        std::sort(xs.begin(), xs.end());
        for (size_t i = 0; i + 1 < xs.size(); i += 2) {
            for (int x = 0; x < size; ++x) {
                double xc = x + 0.5;
                if (xc >= xs[i] && xc < xs[i + 1]) {
                    map[static_cast<size_t>(y) * size + x] = cls;
                }
            }
        }
    }
}

void paint_road(const Primitive& prim, int size, std::vector<uint8_t>& map) {
    double half = prim.width * 0.5;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double xc = x + 0.5, yc = y + 0.5;
            for (size_t s = 0; s + 1 < prim.points.size(); ++s) {
                if (dist_point_segment(xc, yc, prim.points[s].first, prim.points[s].second,
                                       prim.points[s + 1].first, prim.points[s + 1].second) <=
                    half) {
                    map[static_cast<size_t>(y) * size + x] = kRoad;
                    break;
                }
            }
        }
    }
}

void paint_rect(const Primitive& prim, int size, std::vector<uint8_t>& map) {
    int x0 = static_cast<int>(std::lround(prim.points[0].first));
    int y0 = static_cast<int>(std::lround(prim.points[0].second));
    int x1 = static_cast<int>(std::lround(prim.points[1].first));
    int y1 = static_cast<int>(std::lround(prim.points[1].second));
    x0 = std::clamp(x0, 0, size - 1);
    y0 = std::clamp(y0, 0, size - 1);
    x1 = std::clamp(x1, 0, size - 1);
    y1 = std::clamp(y1, 0, size - 1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) map[static_cast<size_t>(y) * size + x] = kBuilding;
    }
}

Primitive make_blob(Rng& rng, int size, TileClass kind, double rmin, double rmax) {
    Primitive prim;
    prim.kind = kind;
    int nv = rng.range_int(6, 9);
    double margin = rmax + 1.0;
    double cx = rng.uniform(static_cast<float>(margin), static_cast<float>(size - margin));
    double cy = rng.uniform(static_cast<float>(margin), static_cast<float>(size - margin));
    for (int i = 0; i < nv; ++i) {
        double angle = (static_cast<double>(i) + 0.5 * rng.next_double()) * 2.0 * M_PI / nv;
        double r = rmin + (rmax - rmin) * rng.next_double();
        prim.points.emplace_back(cx + r * std::cos(angle), cy + r * std::sin(angle));
    }
    return prim;
}

}  // namespace

SceneSpec generate_scene(uint64_t seed, int size) {
    if (!is_power_of_two(size) || size < 16) {
        throw ConfigError("generate_scene: size must be a power of two >= 16, got " +
                          std::to_string(size));
    }
    Rng rng(seed);
    SceneSpec spec;
    spec.seed = seed;
    spec.size = size;

    // three composition bits make labels visually separable:
    //   bit0 water, bit1 buildings, bit2 vegetation
    spec.scene_label = rng.range_int(0, 7);
    bool has_water = spec.scene_label & 1;
    bool has_buildings = spec.scene_label & 2;
    bool has_vegetation = spec.scene_label & 4;

    double s = static_cast<double>(size);

    if (has_water) {
        spec.primitives.push_back(make_blob(rng, size, kWater, s / 6.0, s / 3.4));
    }
    if (has_vegetation) {
        int count = 2;
        for (int i = 0; i < count; ++i) {
            spec.primitives.push_back(make_blob(rng, size, kVegetation, s / 9.0, s / 5.0));
        }
    }
    int roads = rng.range_int(1, 3);
    for (int i = 0; i < roads; ++i) {
        Primitive prim;
        prim.kind = kRoad;
        prim.width = rng.range_int(2, 3);
        double margin = prim.width * 0.5 + 1.0;
        int npts = rng.range_int(2, 3);
        for (int p = 0; p < npts; ++p) {
            prim.points.emplace_back(
                rng.uniform(static_cast<float>(margin), static_cast<float>(s - margin)),
                rng.uniform(static_cast<float>(margin), static_cast<float>(s - margin)));
        }
        spec.primitives.push_back(prim);
    }
    if (has_buildings) {
        int count = rng.range_int(4, 6);
        for (int i = 0; i < count; ++i) {
            Primitive prim;
            prim.kind = kBuilding;
            int bw = rng.range_int(3, std::max(3, size / 5));
            int bh = rng.range_int(3, std::max(3, size / 5));
            int x0 = rng.range_int(1, size - 2 - bw);
            int y0 = rng.range_int(1, size - 2 - bh);
            prim.points.emplace_back(static_cast<double>(x0), static_cast<double>(y0));
            prim.points.emplace_back(static_cast<double>(x0 + bw), static_cast<double>(y0 + bh));
            spec.primitives.push_back(prim);
        }
    }
    return spec;
}

GeometryTile render_control(const SceneSpec& spec) {
    GeometryTile tile;
    tile.size = spec.size;
    tile.class_map.assign(static_cast<size_t>(spec.size) * spec.size, kBackground);

    // painter order: background -> water -> vegetation -> road -> building
    for (TileClass pass : {kWater, kVegetation, kRoad, kBuilding}) {
        for (const Primitive& prim : spec.primitives) {
            if (prim.kind != pass) continue;
            switch (prim.kind) {
                case kWater:
                case kVegetation:
                    paint_polygon_scanline(prim, spec.size, static_cast<uint8_t>(pass),
                                           tile.class_map);
                    break;
                case kRoad: paint_road(prim, spec.size, tile.class_map); break;
                case kBuilding: paint_rect(prim, spec.size, tile.class_map); break;
                default: break;
            }
        }
    }

    tile.raster = Tensor::zeros({3, spec.size, spec.size});
    float* rp = tile.raster.data();
    size_t plane = static_cast<size_t>(spec.size) * spec.size;
    for (size_t i = 0; i < plane; ++i) {
        int cls = tile.class_map[i];
        for (int ch = 0; ch < 3; ++ch) rp[static_cast<size_t>(ch) * plane + i] = kControlPalette[cls][ch];
    }
    return tile;
}

Tensor render_target(const SceneSpec& spec, float noise_amplitude) {
    GeometryTile tile = render_control(spec);
    Tensor img = Tensor::zeros({3, spec.size, spec.size});
    float* ip = img.data();
    size_t plane = static_cast<size_t>(spec.size) * spec.size;
    for (int y = 0; y < spec.size; ++y) {
        for (int x = 0; x < spec.size; ++x) {
            size_t i = static_cast<size_t>(y) * spec.size + x;
            int cls = tile.class_map[i];
            uint64_t noise_seed = spec.seed ^ (0xA24BAED4963EE407ULL * (static_cast<uint64_t>(cls) + 1));
            float n = static_cast<float>(value_noise(noise_seed, x, y)) * noise_amplitude;
            for (int ch = 0; ch < 3; ++ch) {
                float v = kTargetPalette[cls][ch] + n;
                ip[static_cast<size_t>(ch) * plane + i] = std::clamp(v, -1.0f, 1.0f);
            }
        }
    }
    return img;
}

std::vector<uint8_t> class_mask(const Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 3) {
        throw ShapeError("class_mask: expected [3,H,W] image, got " + shape_str(image.shape()));
    }
    int h = image.dim(1), w = image.dim(2);
    size_t plane = static_cast<size_t>(h) * w;
    const float* ip = image.data();
    std::vector<uint8_t> mask(plane);
    for (size_t i = 0; i < plane; ++i) {
        float r = ip[i], g = ip[plane + i], b = ip[2 * plane + i];
        int best = 0;
        float best_d = 1e30f;
        for (int cls = 0; cls < kNumTileClasses; ++cls) {
            float dr = r - kTargetPalette[cls][0];
            float dg = g - kTargetPalette[cls][1];
            float db = b - kTargetPalette[cls][2];
            float d = dr * dr + dg * dg + db * db;
            if (d < best_d) {
                best_d = d;
                best = cls;
            }
        }
        mask[i] = static_cast<uint8_t>(best);
    }
    return mask;
}

Dataset make_dataset(int n, uint64_t base_seed, int size) {
    if (n < 10) throw ConfigError("make_dataset: need n >= 10, got " + std::to_string(n));
    Dataset ds;
    ds.samples.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        SceneSpec spec = generate_scene(base_seed + static_cast<uint64_t>(i), size);
        Sample sample;
        sample.seed = spec.seed;
        sample.label = spec.scene_label;
        sample.tile = render_control(spec);
        sample.x0 = render_target(spec);
        ds.samples.push_back(std::move(sample));
    }
    ds.train_count = static_cast<size_t>((9 * n + 9) / 10);  // ceil(0.9 n)
    return ds;
}

std::string scene_spec_json(const SceneSpec& spec) {
    nlohmann::json j;
    j["seed"] = spec.seed;
    j["size"] = spec.size;
    j["scene_label"] = spec.scene_label;
    j["primitives"] = nlohmann::json::array();
    for (const Primitive& p : spec.primitives) {
        nlohmann::json jp;
        switch (p.kind) {
            case kRoad: jp["kind"] = "road"; break;
            case kBuilding: jp["kind"] = "building"; break;
            case kWater: jp["kind"] = "water"; break;
            case kVegetation: jp["kind"] = "vegetation"; break;
            default: jp["kind"] = "background"; break;
        }
        jp["width"] = p.width;
        nlohmann::json pts = nlohmann::json::array();
        for (auto& [x, y] : p.points) pts.push_back({x, y});
        jp["points"] = pts;
        j["primitives"].push_back(jp);
    }
    return j.dump(2);
}

}  // namespace wcad
