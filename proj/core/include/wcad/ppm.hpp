#pragma once

#include <string>

#include "wcad/tensor.hpp"

namespace wcad {

// Binary P6, maxval 255, header "P6\n{W} {H}\n255\n". Pixel bytes are
// round-half-up((v+1)*127.5) clamped to [0,255]; reading inverts via
// v = p/127.5 - 1. Writes are atomic (temp file + rename).
void write_ppm(const Tensor& image, const std::string& path);
Tensor read_ppm(const std::string& path);

// byte <-> float mapping exposed for tests
uint8_t ppm_byte_from_value(float v);
float ppm_value_from_byte(uint8_t p);

}  // namespace wcad
