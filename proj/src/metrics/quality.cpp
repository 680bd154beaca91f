#include "metrics/quality.hpp"
#include <cmath>
#include <vector>
#include "ad/graph.hpp"
#include "core/error.hpp"
#include "fuse/ufrf.hpp"

namespace vf::metrics {

namespace {

void check_pair(const Tensor& a, const Tensor& b) {
    VF_CHECK(a.shape() == b.shape(), "metric inputs must share a shape");
    VF_CHECK(a.numel() > 0, "metric inputs must be non-empty");
}

double mean_of(const Tensor& t) {
    double s = 0.0;
    for (int64_t i = 0; i < t.numel(); ++i) s += t[i];
    return s / static_cast<double>(t.numel());
}

// Pearson correlation with a degenerate guard shared by q_cc and q_scd.
double corr(const Tensor& a, const Tensor& b) {
    check_pair(a, b);
    double ma = mean_of(a), mb = mean_of(b);
    double va = 0.0, vb = 0.0, cov = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        va += da * da;
        vb += db * db;
        cov += da * db;
    }
    double den = std::sqrt(va * vb);
    if (den < 1e-20) return 0.0;
    return cov / den;
}

} // namespace

double q_mse(const Tensor& a, const Tensor& b) {
    check_pair(a, b);
    double s = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s / static_cast<double>(a.numel());
}

double q_psnr(const Tensor& a, const Tensor& b) {
    double mse = q_mse(a, b);
    if (mse < 1e-10) return 100.0;
    return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

double q_cc(const Tensor& a, const Tensor& b) { return corr(a, b); }

double q_scd(const Tensor& fused, const Tensor& s1, const Tensor& s2) {
    check_pair(fused, s1);
    check_pair(fused, s2);
    Tensor d1(fused.shape()), d2(fused.shape());
    for (int64_t i = 0; i < fused.numel(); ++i) {
        d1[i] = fused[i] - s1[i];
        d2[i] = fused[i] - s2[i];
    }
    return corr(d1, s2) + corr(d2, s1);
}

double ssim_pair(const Tensor& a, const Tensor& b) {
    check_pair(a, b);
    VF_CHECK(a.ndim() == 4, "structural similarity expects (C,D,H,W) volumes");
    return fuse::ssim(ad::constant(a), ad::constant(b))->value[0];
}

double q_ssim(const Tensor& fused, const Tensor& s1, const Tensor& s2) {
    return ssim_pair(fused, s1) + ssim_pair(fused, s2);
}

double q_vif(const Tensor& fused, const Tensor& s1, const Tensor& s2) {
    return vif_pair(s1, fused) + vif_pair(s2, fused);
}

MetricReport fusion_metrics(const Tensor& fused, const Tensor& s1, const Tensor& s2) {
    MetricReport r;
    r.q_mse = 0.5 * (q_mse(fused, s1) + q_mse(fused, s2));
    r.q_psnr = 0.5 * (q_psnr(fused, s1) + q_psnr(fused, s2));
    r.q_cc = 0.5 * (q_cc(fused, s1) + q_cc(fused, s2));
    r.q_scd = q_scd(fused, s1, s2);
    r.q_ssim = q_ssim(fused, s1, s2);
    r.q_vif = q_vif(fused, s1, s2);
    return r;
}

} // namespace vf::metrics
