#pragma once
#include "core/tensor.hpp"

namespace vf::vol {

// Trilinear warp with border clamp: out(x) = v(x + phi(x)), phi in voxel
// units along (z,y,x). v is (C,D,H,W), phi is (3,D,H,W).
Tensor warp_forward(const Tensor& v, const Tensor& phi);

// Adjoint pass. Either output may be null when not needed.
void warp_backward(const Tensor& v, const Tensor& phi, const Tensor& gout, Tensor* gv, Tensor* gphi);

} // namespace vf::vol
