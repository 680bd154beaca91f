#pragma once
#include "core/tensor.hpp"

namespace vf::vol {

// Approximate inverse of a smooth displacement field by fixed-point
// iteration psi <- -phi(x + psi(x)). Throws if the composition residual
// grows instead of shrinking.
Tensor invert_field(const Tensor& phi, int iters = 10);

// RMS of the residual phi(x + psi(x)) + psi(x); 0 for exact inverses.
double inversion_residual_rms(const Tensor& phi, const Tensor& psi);

// Separable Gaussian blur per channel, replicate border, radius = ceil(3σ).
Tensor gauss_blur(const Tensor& v, double sigma);

} // namespace vf::vol
