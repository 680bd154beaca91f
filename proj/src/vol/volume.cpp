#include "vol/volume.hpp"
#include <algorithm>

namespace vf::vol {

Tensor luma(const Tensor& v) {
    VF_CHECK(v.ndim() == 4, "luma expects (C,D,H,W)");
    int64_t sp = v.dim(1) * v.dim(2) * v.dim(3);
    Tensor out({1, v.dim(1), v.dim(2), v.dim(3)});
    std::copy(v.data(), v.data() + sp, out.data());
    return out;
}

Tensor crcb(const Tensor& v) {
    VF_CHECK(v.ndim() == 4 && v.dim(0) == 3, "crcb expects 3-channel volume");
    int64_t sp = v.dim(1) * v.dim(2) * v.dim(3);
    Tensor out({2, v.dim(1), v.dim(2), v.dim(3)});
    std::copy(v.data() + sp, v.data() + 3 * sp, out.data());
    return out;
}

Tensor crop(const Tensor& v, int64_t z0, int64_t y0, int64_t x0, int64_t side) {
    VF_CHECK(v.ndim() == 4, "crop expects (C,D,H,W)");
    VF_CHECK(z0 >= 0 && y0 >= 0 && x0 >= 0 && z0 + side <= v.dim(1) && y0 + side <= v.dim(2) &&
                 x0 + side <= v.dim(3),
             "crop out of range");
    Tensor out({v.dim(0), side, side, side});
    for (int64_t c = 0; c < v.dim(0); ++c)
        for (int64_t z = 0; z < side; ++z)
            for (int64_t y = 0; y < side; ++y)
                for (int64_t x = 0; x < side; ++x)
                    out.at(c, z, y, x) = v.at(c, z0 + z, y0 + y, x0 + x);
    return out;
}

Tensor clamp01(const Tensor& v) {
    Tensor out(v.shape());
    for (int64_t i = 0; i < v.numel(); ++i) out[i] = std::clamp(v[i], 0.0, 1.0);
    return out;
}

} // namespace vf::vol
