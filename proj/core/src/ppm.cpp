#include "wcad/ppm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace wcad {

uint8_t ppm_byte_from_value(float v) {
    double scaled = std::floor((static_cast<double>(v) + 1.0) * 127.5 + 0.5);  // round half up
    if (scaled < 0.0) scaled = 0.0;
    if (scaled > 255.0) scaled = 255.0;
    return static_cast<uint8_t>(scaled);
}

float ppm_value_from_byte(uint8_t p) { return static_cast<float>(p) / 127.5f - 1.0f; }

void write_ppm(const Tensor& image, const std::string& path) {
    if (image.rank() != 3 || image.dim(0) != 3) {
        throw ShapeError("write_ppm: expected [3,H,W] image, got " + shape_str(image.shape()));
    }
    int h = image.dim(1), w = image.dim(2);
    size_t plane = static_cast<size_t>(h) * w;
    const float* ip = image.data();

    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("write_ppm: cannot open " + tmp);
        out << "P6\n" << w << " " << h << "\n255\n";
        std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                size_t i = static_cast<size_t>(y) * w + x;
                row[static_cast<size_t>(x) * 3] = ppm_byte_from_value(ip[i]);
                row[static_cast<size_t>(x) * 3 + 1] = ppm_byte_from_value(ip[plane + i]);
                row[static_cast<size_t>(x) * 3 + 2] = ppm_byte_from_value(ip[2 * plane + i]);
            }
            out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
        }
        if (!out) throw IoError("write_ppm: short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw IoError("write_ppm: cannot rename " + tmp + " to " + path);
    }
}

Tensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_ppm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6") throw IoError("read_ppm: bad magic '" + magic + "' in " + path);
    int w = 0, h = 0, maxval = 0;
    in >> w >> h >> maxval;
    if (!in || w <= 0 || h <= 0) throw IoError("read_ppm: malformed header in " + path);
    if (maxval != 255) {
        throw IoError("read_ppm: unsupported maxval " + std::to_string(maxval) + " in " + path);
    }
    in.get();  // single whitespace after maxval
    std::vector<uint8_t> bytes(static_cast<size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw IoError("read_ppm: truncated pixel data in " + path);
    }
    Tensor image = Tensor::zeros({3, h, w});
    float* ip = image.data();
    size_t plane = static_cast<size_t>(h) * w;
    for (size_t i = 0; i < plane; ++i) {
        ip[i] = ppm_value_from_byte(bytes[i * 3]);
        ip[plane + i] = ppm_value_from_byte(bytes[i * 3 + 1]);
        ip[2 * plane + i] = ppm_value_from_byte(bytes[i * 3 + 2]);
    }
    return image;
}

}  // namespace wcad
