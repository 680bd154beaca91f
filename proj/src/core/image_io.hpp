#pragma once
#include <string>
#include <cstdint>
#include <vector>
#include "core/tensor.hpp"

namespace vf {

void write_png_rgb(const std::string& path, int width, int height, const std::vector<uint8_t>& rgb);

// Renders axial slices of a (C,D,H,W) volume side by side. One channel is
// shown as grayscale; three channels are treated as Y/Cr/Cb and converted to
// RGB. Values are clamped to [0,1].
void save_slice_montage(const std::string& path, const Tensor& vol, int n_slices = 4);

} // namespace vf
