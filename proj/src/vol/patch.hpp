#pragma once
#include "core/tensor.hpp"

namespace vf::vol {

// Patchify (C,D,H,W) into (N, C*Q^3) rows. Patch order is raster over patch
// blocks: z-major, then y, then x; within a row the layout is (c, dz, dy, dx)
// row-major. This order defines the "forward" token sequence.
Tensor patch_rows_forward(const Tensor& v, int Q);

// Exact inverse reindex (the patch order is a bijection over voxels); also
// serves as the adjoint of patch_rows_forward.
Tensor patch_rows_inverse(const Tensor& rows, int Q, int64_t C, int64_t D, int64_t H, int64_t W);

int64_t patch_count(int64_t D, int64_t H, int64_t W, int Q);

} // namespace vf::vol
