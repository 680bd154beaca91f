#pragma once
#include "core/tensor.hpp"

namespace vf::metrics {

// Scalar quality metrics over (C,D,H,W) volumes in [0,1]. Pure evaluation
// code: plain tensors in, doubles out.
double q_mse(const Tensor& a, const Tensor& b);
double q_psnr(const Tensor& a, const Tensor& b); // 10*log10(1/mse), capped at 100 dB
double q_cc(const Tensor& a, const Tensor& b);   // Pearson correlation, 0 when degenerate

// corr(fused - s1, s2) + corr(fused - s2, s1); a zero-variance difference
// contributes 0.
double q_scd(const Tensor& fused, const Tensor& s1, const Tensor& s2);

double ssim_pair(const Tensor& a, const Tensor& b); // shared Gaussian-window engine
double q_ssim(const Tensor& fused, const Tensor& s1, const Tensor& s2); // sum of both pairs

// Pixel-domain visual information fidelity: four scales, Gaussian windows
// (17/9/5/3, sigma = size/5), decimation by 2 between scales, variance floor
// 1e-10, noise variance 2.0 on the conventional 8-bit range (inputs in [0,1]
// are scaled by 255 internally so the constant keeps its usual meaning).
double vif_pair(const Tensor& ref, const Tensor& dist);
double q_vif(const Tensor& fused, const Tensor& s1, const Tensor& s2); // sum of both pairs

struct MetricReport {
    double q_mse = 0, q_cc = 0, q_psnr = 0, q_scd = 0, q_vif = 0, q_ssim = 0;
    double flops_g = 0, params_m = 0;
};

// Table-style aggregation against the two references (warped fine label and
// the guiding modality): mse/psnr/cc averaged, ssim/vif summed, scd as is.
MetricReport fusion_metrics(const Tensor& fused, const Tensor& s1, const Tensor& s2);

} // namespace vf::metrics
