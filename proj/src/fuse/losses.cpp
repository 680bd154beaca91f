#include "fuse/ufrf.hpp"
#include <cmath>

namespace vf::fuse {

using namespace vf::ad;

namespace {

constexpr double kC1 = 1e-4; // (0.01)^2 on a [0,1] range
constexpr double kC2 = 9e-4; // (0.03)^2
constexpr int kWin = 7;
constexpr double kSigma = 1.5;

const Tensor& gauss_kernel() {
    static Tensor k = [] {
        double g[kWin];
        double s = 0.0;
        for (int i = 0; i < kWin; ++i) {
            double d = i - (kWin - 1) / 2.0;
            g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            s += g[i];
        }
        for (double& v : g) v /= s;
        Tensor t({1, 1, kWin, kWin, kWin});
        for (int a = 0; a < kWin; ++a)
            for (int b = 0; b < kWin; ++b)
                for (int c = 0; c < kWin; ++c) t.at(0, 0, a, b, c) = g[a] * g[b] * g[c];
        return t;
    }();
    return k;
}

// Window mass inside the volume for zero-padded filtering; separable, so a
// product of per-axis partial sums. Dividing by it renormalizes border stats.
Tensor window_mass(int64_t D, int64_t H, int64_t W) {
    double g[kWin];
    double s = 0.0;
    for (int i = 0; i < kWin; ++i) {
        double d = i - (kWin - 1) / 2.0;
        g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        s += g[i];
    }
    for (double& v : g) v /= s;
    auto axis_mass = [&](int64_t n) {
        std::vector<double> m(static_cast<size_t>(n), 0.0);
        for (int64_t i = 0; i < n; ++i)
            for (int k = 0; k < kWin; ++k) {
                int64_t j = i + k - (kWin - 1) / 2;
                if (j >= 0 && j < n) m[static_cast<size_t>(i)] += g[k];
            }
        return m;
    };
    auto mz = axis_mass(D), my = axis_mass(H), mx = axis_mass(W);
    Tensor mass({1, D, H, W});
    for (int64_t z = 0; z < D; ++z)
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x = 0; x < W; ++x)
                mass.at(0, z, y, x) = mz[static_cast<size_t>(z)] * my[static_cast<size_t>(y)] *
                                      mx[static_cast<size_t>(x)];
    return mass;
}

Val ssim_channel(const Val& x, const Val& y, const Val& mass) {
    Val gk = constant(gauss_kernel());
    Val zb = constant(Tensor({1}, 0.0));
    auto smooth = [&](const Val& v) { return divv(conv3d(v, gk, zb), mass); };
    Val mx = smooth(x);
    Val my = smooth(y);
    Val sxx = sub(smooth(mul(x, x)), mul(mx, mx));
    Val syy = sub(smooth(mul(y, y)), mul(my, my));
    Val sxy = sub(smooth(mul(x, y)), mul(mx, my));
    Val num = mul(add_scalar(mul_scalar(mul(mx, my), 2.0), kC1),
                  add_scalar(mul_scalar(sxy, 2.0), kC2));
    Val den = mul(add_scalar(add(mul(mx, mx), mul(my, my)), kC1),
                  add_scalar(add(sxx, syy), kC2));
    return mean_all(divv(num, den));
}

} // namespace

Val ssim(const Val& a, const Val& b) {
    VF_CHECK(a->value.ndim() == 4 && a->value.shape() == b->value.shape(),
             "ssim needs matching (C,D,H,W) inputs");
    int64_t C = a->value.dim(0);
    Val mass = constant(window_mass(a->value.dim(1), a->value.dim(2), a->value.dim(3)));
    Val acc;
    for (int64_t c = 0; c < C; ++c) {
        Val s = ssim_channel(slice_ch(a, c, c + 1), slice_ch(b, c, c + 1), mass);
        acc = acc ? add(acc, s) : s;
    }
    return mul_scalar(acc, 1.0 / static_cast<double>(C));
}

Val ssim_loss(const Val& fused, const Val& warped_fine, const Val& ref) {
    Val a = add_scalar(neg(ssim(fused, warped_fine)), 1.0);
    Val b = add_scalar(neg(ssim(fused, ref)), 1.0);
    return add(a, b);
}

std::pair<Val, Val> intensity_and_gradient_loss(const Val& fused, const Val& warped_fine,
                                                const Val& ref) {
    Val l_int = mean_all(vabs(sub(fused, maximum(warped_fine, ref))));
    Val target = maximum(spatial_gradient(warped_fine), spatial_gradient(ref));
    Val l_grad = mean_all(vabs(sub(spatial_gradient(fused), target)));
    return {l_int, l_grad};
}

Val color_loss(const Val& c_fuse, const Val& c_fine) {
    if (!c_fuse && !c_fine) return constant(Tensor({1}, 0.0)); // grayscale task
    VF_CHECK(c_fuse && c_fine, "color loss needs both chroma grids or neither");
    VF_CHECK(c_fuse->value.dim(0) == 2 && c_fuse->value.shape() == c_fine->value.shape(),
             "chroma grids must be matching (2,D,H,W)");
    Val l1 = mean_all(vabs(sub(c_fuse, c_fine)));
    return add(l1, add_scalar(neg(ssim(c_fuse, c_fine)), 1.0));
}

Val rf_loss(const Val& l_ssim, const Val& l_inten, const Val& l_grad, const Val& l_crcb) {
    return add(add(l_ssim, l_inten), add(l_grad, l_crcb));
}

} // namespace vf::fuse
