#pragma once
#include "core/tensor.hpp"

namespace vf::vol {

// Channel conventions: single-channel volumes are luma; 3-channel volumes
// are (Y, Cr, Cb) in [0,1].
Tensor luma(const Tensor& v);                // (C,D,H,W) -> (1,D,H,W), channel 0
Tensor crcb(const Tensor& v);                // 3-channel -> (2,D,H,W)
Tensor crop(const Tensor& v, int64_t z0, int64_t y0, int64_t x0, int64_t side);
Tensor clamp01(const Tensor& v);

} // namespace vf::vol
