#include "vol/patch.hpp"

namespace vf::vol {

int64_t patch_count(int64_t D, int64_t H, int64_t W, int Q) {
    VF_CHECK(Q >= 1, "patch side must be >= 1");
    VF_CHECK(D % Q == 0 && H % Q == 0 && W % Q == 0,
             "dims (" << D << "," << H << "," << W << ") not divisible by patch side " << Q);
    return (D / Q) * (H / Q) * (W / Q);
}

Tensor patch_rows_forward(const Tensor& v, int Q) {
    VF_CHECK(v.ndim() == 4, "patch_rows expects (C,D,H,W)");
    int64_t C = v.dim(0), D = v.dim(1), H = v.dim(2), W = v.dim(3);
    int64_t N = patch_count(D, H, W, Q);
    int64_t bh = H / Q, bw = W / Q;
    Tensor rows({N, C * Q * Q * Q});
    for (int64_t c = 0; c < C; ++c)
        for (int64_t z = 0; z < D; ++z)
            for (int64_t y = 0; y < H; ++y)
                for (int64_t x = 0; x < W; ++x) {
                    int64_t t = ((z / Q) * bh + y / Q) * bw + x / Q;
                    int64_t o = ((c * Q + z % Q) * Q + y % Q) * Q + x % Q;
                    rows.at(t, o) = v.at(c, z, y, x);
                }
    return rows;
}

Tensor patch_rows_inverse(const Tensor& rows, int Q, int64_t C, int64_t D, int64_t H, int64_t W) {
    int64_t N = patch_count(D, H, W, Q);
    VF_CHECK(rows.ndim() == 2 && rows.dim(0) == N && rows.dim(1) == C * Q * Q * Q,
             "patch_rows_inverse: row shape mismatch");
    int64_t bh = H / Q, bw = W / Q;
    Tensor v({C, D, H, W});
    for (int64_t c = 0; c < C; ++c)
        for (int64_t z = 0; z < D; ++z)
            for (int64_t y = 0; y < H; ++y)
                for (int64_t x = 0; x < W; ++x) {
                    int64_t t = ((z / Q) * bh + y / Q) * bw + x / Q;
                    int64_t o = ((c * Q + z % Q) * Q + y % Q) * Q + x % Q;
                    v.at(c, z, y, x) = rows.at(t, o);
                }
    return v;
}

} // namespace vf::vol
