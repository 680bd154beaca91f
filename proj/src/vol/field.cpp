#include "vol/field.hpp"
#include "vol/warp.hpp"
#include <cmath>
#include <vector>

namespace vf::vol {

double inversion_residual_rms(const Tensor& phi, const Tensor& psi) {
    Tensor comp = warp_forward(phi, psi); // phi(x + psi(x))
    double s = 0.0;
    for (int64_t i = 0; i < comp.numel(); ++i) {
        double r = comp[i] + psi[i];
        s += r * r;
    }
    return std::sqrt(s / static_cast<double>(comp.numel()));
}

Tensor invert_field(const Tensor& phi, int iters) {
    VF_CHECK(phi.ndim() == 4 && phi.dim(0) == 3, "invert_field expects (3,D,H,W)");
    VF_CHECK(iters >= 5, "invert_field needs at least 5 iterations");
    Tensor psi(phi.shape());
    double first_res = -1.0;
    for (int it = 0; it < iters; ++it) {
        Tensor sampled = warp_forward(phi, psi);
        for (int64_t i = 0; i < psi.numel(); ++i) psi[i] = -sampled[i];
        if (it == 0) first_res = inversion_residual_rms(phi, psi);
    }
    double final_res = inversion_residual_rms(phi, psi);
    if (final_res > first_res + 1e-12) {
        double mx = 0.0;
        for (int64_t i = 0; i < phi.numel(); ++i) mx = std::max(mx, std::fabs(phi[i]));
        VF_FAIL("field inversion diverged (residual " << first_res << " -> " << final_res
                << ", max displacement magnitude " << mx << ")");
    }
    return psi;
}

Tensor gauss_blur(const Tensor& v, double sigma) {
    VF_CHECK(v.ndim() == 4, "gauss_blur expects (C,D,H,W)");
    if (sigma <= 0.0) return v;
    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<size_t>(2 * radius + 1));
    double norm = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<size_t>(i + radius)] = w;
        norm += w;
    }
    for (double& w : k) w /= norm;

    int64_t C = v.dim(0), D = v.dim(1), H = v.dim(2), W = v.dim(3);
    Tensor cur = v, next(v.shape());
    const int64_t dims[3] = {D, H, W};
    const int64_t strides[3] = {H * W, W, 1};
    for (int axis = 0; axis < 3; ++axis) {
        int64_t n = dims[axis], stride = strides[axis];
        for (int64_t c = 0; c < C; ++c) {
            const double* src = cur.data() + c * D * H * W;
            double* dst = next.data() + c * D * H * W;
            for (int64_t z = 0; z < D; ++z)
                for (int64_t y = 0; y < H; ++y)
                    for (int64_t x = 0; x < W; ++x) {
                        int64_t idx[3] = {z, y, x};
                        int64_t base = (z * H + y) * W + x;
                        double acc = 0.0;
                        for (int i = -radius; i <= radius; ++i) {
                            int64_t j = idx[axis] + i;
                            j = j < 0 ? 0 : (j >= n ? n - 1 : j);
                            acc += k[static_cast<size_t>(i + radius)] *
                                   src[base + (j - idx[axis]) * stride];
                        }
                        dst[base] = acc;
                    }
        }
        std::swap(cur, next);
    }
    return cur;
}

} // namespace vf::vol
