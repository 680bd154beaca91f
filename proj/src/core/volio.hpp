#pragma once
#include <string>
#include <array>
#include "core/tensor.hpp"

namespace vf {

// Volume container used at the IO boundary: data laid out (C, D, H, W) with
// W the fastest axis, plus voxel spacing in mm for the three spatial axes
// (D, H, W order).
struct VolumeFile {
    Tensor data;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
};

// Native volume format: magic "UFV1", five little-endian int32 fields
// (dtype, channels, depth, height, width), then the samples row-major in
// (C,D,H,W) order. dtype 0 = float32, dtype 1 = float64.
void write_ufv(const std::string& path, const Tensor& vol, int dtype = 0);
Tensor read_ufv(const std::string& path);

// Minimal NIfTI-1 reader/writer (.nii and .nii.gz). Reader supports uint8,
// int16, float32, float64 with scl_slope/scl_inter applied; writer emits
// float32 .nii.gz. A 4D file maps its 4th dimension to channels.
VolumeFile read_nifti(const std::string& path);
void write_nifti(const std::string& path, const VolumeFile& vol);

// Dispatch on extension (.ufv / .nii / .nii.gz).
VolumeFile read_volume(const std::string& path);
void write_volume(const std::string& path, const VolumeFile& vol);

} // namespace vf
