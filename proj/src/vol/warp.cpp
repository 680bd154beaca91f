#include "vol/warp.hpp"
#include <cmath>
#include <algorithm>

namespace vf::vol {
namespace {

struct Sample {
    int64_t z0, y0, x0;
    double fz, fy, fx;
    double dz, dy, dx; // d(clamped coord)/d(phi component): 1 inside, 0 at the clamp
};

inline double clamp_coord(double c, double hi, double& indicator) {
    if (c <= 0.0) {
        indicator = 0.0;
        return 0.0;
    }
    if (c >= hi) {
        indicator = 0.0;
        return hi;
    }
    indicator = 1.0;
    return c;
}

inline Sample locate(double z, double y, double x, int64_t D, int64_t H, int64_t W) {
    Sample s;
    double cz = clamp_coord(z, static_cast<double>(D - 1), s.dz);
    double cy = clamp_coord(y, static_cast<double>(H - 1), s.dy);
    double cx = clamp_coord(x, static_cast<double>(W - 1), s.dx);
    s.z0 = std::min<int64_t>(static_cast<int64_t>(cz), D - 2 >= 0 ? D - 2 : 0);
    s.y0 = std::min<int64_t>(static_cast<int64_t>(cy), H - 2 >= 0 ? H - 2 : 0);
    s.x0 = std::min<int64_t>(static_cast<int64_t>(cx), W - 2 >= 0 ? W - 2 : 0);
    s.fz = cz - static_cast<double>(s.z0);
    s.fy = cy - static_cast<double>(s.y0);
    s.fx = cx - static_cast<double>(s.x0);
    return s;
}

} // namespace

Tensor warp_forward(const Tensor& v, const Tensor& phi) {
    VF_CHECK(v.ndim() == 4 && phi.ndim() == 4 && phi.dim(0) == 3, "warp: bad shapes");
    int64_t C = v.dim(0), D = v.dim(1), H = v.dim(2), W = v.dim(3);
    VF_CHECK(phi.dim(1) == D && phi.dim(2) == H && phi.dim(3) == W, "warp: field/volume mismatch");
    Tensor out(v.shape());
    int64_t sp = D * H * W;
    const double* pz = phi.data();
    const double* py = phi.data() + sp;
    const double* px = phi.data() + 2 * sp;
    for (int64_t z = 0; z < D; ++z)
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x = 0; x < W; ++x) {
                int64_t p = (z * H + y) * W + x;
                Sample s = locate(static_cast<double>(z) + pz[p], static_cast<double>(y) + py[p],
                                  static_cast<double>(x) + px[p], D, H, W);
                double w000 = (1 - s.fz) * (1 - s.fy) * (1 - s.fx);
                double w001 = (1 - s.fz) * (1 - s.fy) * s.fx;
                double w010 = (1 - s.fz) * s.fy * (1 - s.fx);
                double w011 = (1 - s.fz) * s.fy * s.fx;
                double w100 = s.fz * (1 - s.fy) * (1 - s.fx);
                double w101 = s.fz * (1 - s.fy) * s.fx;
                double w110 = s.fz * s.fy * (1 - s.fx);
                double w111 = s.fz * s.fy * s.fx;
                int64_t b = (s.z0 * H + s.y0) * W + s.x0;
                int64_t bz = H * W;
                for (int64_t c = 0; c < C; ++c) {
                    const double* vd = v.data() + c * sp;
                    out.data()[c * sp + p] =
                        w000 * vd[b] + w001 * vd[b + 1] +
                        w010 * vd[b + W] + w011 * vd[b + W + 1] +
                        w100 * vd[b + bz] + w101 * vd[b + bz + 1] +
                        w110 * vd[b + bz + W] + w111 * vd[b + bz + W + 1];
                }
            }
    return out;
}

void warp_backward(const Tensor& v, const Tensor& phi, const Tensor& gout, Tensor* gv, Tensor* gphi) {
    int64_t C = v.dim(0), D = v.dim(1), H = v.dim(2), W = v.dim(3);
    int64_t sp = D * H * W;
    const double* pz = phi.data();
    const double* py = phi.data() + sp;
    const double* px = phi.data() + 2 * sp;
    for (int64_t z = 0; z < D; ++z)
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x = 0; x < W; ++x) {
                int64_t p = (z * H + y) * W + x;
                Sample s = locate(static_cast<double>(z) + pz[p], static_cast<double>(y) + py[p],
                                  static_cast<double>(x) + px[p], D, H, W);
                int64_t b = (s.z0 * H + s.y0) * W + s.x0;
                int64_t bz = H * W;
                double gz_acc = 0.0, gy_acc = 0.0, gx_acc = 0.0;
                for (int64_t c = 0; c < C; ++c) {
                    double g = gout.data()[c * sp + p];
                    if (g == 0.0) continue;
                    const double* vd = v.data() + c * sp;
                    double v000 = vd[b], v001 = vd[b + 1];
                    double v010 = vd[b + W], v011 = vd[b + W + 1];
                    double v100 = vd[b + bz], v101 = vd[b + bz + 1];
                    double v110 = vd[b + bz + W], v111 = vd[b + bz + W + 1];
                    if (gv) {
                        double* gd = gv->data() + c * sp;
                        gd[b] += g * (1 - s.fz) * (1 - s.fy) * (1 - s.fx);
                        gd[b + 1] += g * (1 - s.fz) * (1 - s.fy) * s.fx;
                        gd[b + W] += g * (1 - s.fz) * s.fy * (1 - s.fx);
                        gd[b + W + 1] += g * (1 - s.fz) * s.fy * s.fx;
                        gd[b + bz] += g * s.fz * (1 - s.fy) * (1 - s.fx);
                        gd[b + bz + 1] += g * s.fz * (1 - s.fy) * s.fx;
                        gd[b + bz + W] += g * s.fz * s.fy * (1 - s.fx);
                        gd[b + bz + W + 1] += g * s.fz * s.fy * s.fx;
                    }
                    if (gphi) {
                        // interpolate along the other two axes, difference along the target axis
                        double c00 = v001 - v000, c01 = v011 - v010, c10 = v101 - v100, c11 = v111 - v110;
                        gx_acc += g * ((1 - s.fz) * ((1 - s.fy) * c00 + s.fy * c01) +
                                       s.fz * ((1 - s.fy) * c10 + s.fy * c11));
                        double d00 = v010 - v000, d01 = v011 - v001, d10 = v110 - v100, d11 = v111 - v101;
                        gy_acc += g * ((1 - s.fz) * ((1 - s.fx) * d00 + s.fx * d01) +
                                       s.fz * ((1 - s.fx) * d10 + s.fx * d11));
                        double e00 = v100 - v000, e01 = v101 - v001, e10 = v110 - v010, e11 = v111 - v011;
                        gz_acc += g * ((1 - s.fy) * ((1 - s.fx) * e00 + s.fx * e01) +
                                       s.fy * ((1 - s.fx) * e10 + s.fx * e11));
                    }
                }
                if (gphi) {
                    gphi->data()[p] += gz_acc * s.dz;
                    gphi->data()[sp + p] += gy_acc * s.dy;
                    gphi->data()[2 * sp + p] += gx_acc * s.dx;
                }
            }
}

} // namespace vf::vol
