#pragma once

#include "skd/tensor.hpp"

#include <string>

namespace skd {

// 1 x 3 x h x w, RGB order, values in [0, 1].
Tensorf read_rgb(const std::string& path);

// 1 x 1 x h x w, values in {0, 1}; pixels >= 128 are foreground.
Tensorf read_mask(const std::string& path);

// 1 x 1 x h x w grayscale in [0, 1] without binarization.
Tensorf read_gray(const std::string& path);

// Writes channel 0 of sample 0 as 8-bit, rounding floor(v * 255 + 0.5) after clamping to [0, 1].
void write_gray8(const std::string& path, const Tensorf& map);

void write_rgb8(const std::string& path, const Tensorf& rgb);

std::uint8_t quantize8(float v);

}  // namespace skd
