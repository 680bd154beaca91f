#include "synth/synth.hpp"
#include <algorithm>
#include <cmath>
#include <vector>
#include "core/rng.hpp"
#include "vol/field.hpp"

namespace vf::synth {

namespace {

struct Blob {
    double c[3];
    double inv_r[3];
    double rot[9]; // row-major rotation applied to (p - c)
    double a;      // moving-modality intensity
    double b;      // reference-modality intensity
    double cr, cb; // region chroma
};

void euler_rotation(double az, double ay, double ax, double* m) {
    double cz = std::cos(az), sz = std::sin(az);
    double cy = std::cos(ay), sy = std::sin(ay);
    double cx = std::cos(ax), sx = std::sin(ax);
    // Rz * Ry * Rx
    m[0] = cz * cy;
    m[1] = cz * sy * sx - sz * cx;
    m[2] = cz * sy * cx + sz * sx;
    m[3] = sz * cy;
    m[4] = sz * sy * sx + cz * cx;
    m[5] = sz * sy * cx - cz * sx;
    m[6] = -sy;
    m[7] = cy * sx;
    m[8] = cy * cx;
}

} // namespace

std::pair<Tensor, Tensor> make_phantom_pair(const PhantomSpec& spec, int64_t D, int64_t H,
                                            int64_t W) {
    VF_CHECK(D > 0 && H > 0 && W > 0, "phantom size must be positive");
    VF_CHECK(spec.n_blobs >= 0, "n_blobs must be nonnegative");
    Rng rng(spec.seed ^ 0x70686e746f6dULL);

    double min_dim = static_cast<double>(std::min({D, H, W}));
    std::vector<Blob> blobs;
    blobs.reserve(static_cast<size_t>(spec.n_blobs));
    for (int k = 0; k < spec.n_blobs; ++k) {
        Blob bl{};
        bl.c[0] = rng.uniform(0.2, 0.8) * static_cast<double>(D - 1);
        bl.c[1] = rng.uniform(0.2, 0.8) * static_cast<double>(H - 1);
        bl.c[2] = rng.uniform(0.2, 0.8) * static_cast<double>(W - 1);
        for (int i = 0; i < 3; ++i) {
            double r = std::max(1.5, rng.uniform(0.10, 0.30) * min_dim);
            bl.inv_r[i] = 1.0 / r;
        }
        euler_rotation(rng.uniform(0.0, 3.141592653589793), rng.uniform(0.0, 3.141592653589793),
                       rng.uniform(0.0, 3.141592653589793), bl.rot);
        // alternate bright and dark regions so every phantom keeps contrast
        bl.a = (k % 2 == 0) ? rng.uniform(0.55, 0.95) : rng.uniform(0.15, 0.45);
        bl.b = std::clamp(std::pow(bl.a, 0.7) * rng.uniform(0.7, 1.3), 0.0, 1.0);
        bl.cr = rng.uniform(0.25, 0.75);
        bl.cb = rng.uniform(0.25, 0.75);
        blobs.push_back(bl);
    }
    double gamma = rng.uniform(0.8, 1.25);

    Tensor A({1, D, H, W}, 0.0);
    Tensor Bl({1, D, H, W}, 0.0);
    Tensor Cr, Cb;
    if (spec.color) {
        Cr = Tensor({1, D, H, W}, 0.5);
        Cb = Tensor({1, D, H, W}, 0.5);
    }

    for (int64_t z = 0; z < D; ++z)
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x = 0; x < W; ++x) {
                // painter's order: later blobs overwrite earlier ones
                for (const Blob& bl : blobs) {
                    double p[3] = {static_cast<double>(z) - bl.c[0],
                                   static_cast<double>(y) - bl.c[1],
                                   static_cast<double>(x) - bl.c[2]};
                    double q = 0.0;
                    for (int i = 0; i < 3; ++i) {
                        double u = (bl.rot[3 * i] * p[0] + bl.rot[3 * i + 1] * p[1] +
                                    bl.rot[3 * i + 2] * p[2]) *
                                   bl.inv_r[i];
                        q += u * u;
                    }
                    if (q < 1.0) {
                        A.at(0, z, y, x) = bl.a;
                        Bl.at(0, z, y, x) = bl.b;
                        if (spec.color) {
                            Cr.at(0, z, y, x) = bl.cr;
                            Cb.at(0, z, y, x) = bl.cb;
                        }
                    }
                }
            }

    for (int64_t i = 0; i < Bl.numel(); ++i) Bl[i] = std::pow(Bl[i], gamma);

    A = vol::gauss_blur(A, 0.8);
    Bl = vol::gauss_blur(Bl, 0.8);
    for (int64_t i = 0; i < A.numel(); ++i) {
        A[i] = std::clamp(A[i], 0.0, 1.0);
        Bl[i] = std::clamp(Bl[i], 0.0, 1.0);
    }

    Tensor B;
    if (spec.color) {
        Cr = vol::gauss_blur(Cr, 0.8);
        Cb = vol::gauss_blur(Cb, 0.8);
        B = Tensor({3, D, H, W});
        int64_t plane = D * H * W;
        for (int64_t i = 0; i < plane; ++i) {
            B[i] = Bl[i];
            B[plane + i] = std::clamp(Cr[i], 0.0, 1.0);
            B[2 * plane + i] = std::clamp(Cb[i], 0.0, 1.0);
        }
    } else {
        B = Bl;
    }
    return {A, B};
}

} // namespace vf::synth
