#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <cmath>
#include "core/rng.hpp"
#include "vol/field.hpp"
#include "vol/patch.hpp"
#include "vol/warp.hpp"
#include "support/gradcheck.hpp"

using namespace vf;
using namespace vf::vol;
using test::random_tensor;

namespace {
Tensor spatial_gradient_forward(const Tensor& v) {
    auto node = ad::spatial_gradient(ad::constant(v));
    return node->value;
}
} // namespace

namespace {
Tensor smooth_field(int64_t n, double max_mag, uint64_t seed) {
    Rng rng(seed);
    Tensor phi({3, n, n, n});
    for (int64_t i = 0; i < phi.numel(); ++i) phi[i] = rng.normal();
    phi = gauss_blur(phi, 2.0);
    double m = 0.0;
    for (int64_t i = 0; i < phi.numel(); ++i) m = std::max(m, std::fabs(phi[i]));
    if (m > 0) for (int64_t i = 0; i < phi.numel(); ++i) phi[i] *= max_mag / m;
    return phi;
}

double field_rms(const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.numel()));
}
} // namespace

TEST_CASE("identity warp reproduces the volume exactly") {
    Rng rng(1);
    Tensor v = random_tensor({2, 5, 6, 7}, rng);
    Tensor phi({3, 5, 6, 7}, 0.0);
    Tensor out = warp_forward(v, phi);
    for (int64_t i = 0; i < v.numel(); ++i) CHECK(out[i] == v[i]);
}

TEST_CASE("unit shift along x samples the next voxel") {
    Rng rng(2);
    int64_t n = 8;
    Tensor v = random_tensor({1, n, n, n}, rng);
    Tensor phi({3, n, n, n}, 0.0);
    // channel 2 is the x displacement
    for (int64_t i = 0; i < n * n * n; ++i) phi[2 * n * n * n + i] = 1.0;
    Tensor out = warp_forward(v, phi);
    for (int64_t z = 0; z < n; ++z)
        for (int64_t y = 0; y < n; ++y)
            for (int64_t x = 0; x < n; ++x) {
                int64_t xs = std::min(x + 1, n - 1); // border clamp
                CHECK(out.at(0, z, y, x) == doctest::Approx(v.at(0, z, y, xs)).epsilon(1e-14));
            }
}

TEST_CASE("warp is linear in the volume argument") {
    Rng rng(3);
    int64_t n = 6;
    Tensor a = random_tensor({1, n, n, n}, rng);
    Tensor b = random_tensor({1, n, n, n}, rng);
    Tensor phi = smooth_field(n, 1.5, 4);
    Tensor wa = warp_forward(a, phi);
    Tensor wb = warp_forward(b, phi);
    Tensor ab(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) ab[i] = 2.0 * a[i] - 0.5 * b[i];
    Tensor wab = warp_forward(ab, phi);
    for (int64_t i = 0; i < wab.numel(); ++i)
        CHECK(std::fabs(wab[i] - (2.0 * wa[i] - 0.5 * wb[i])) < 1e-6);
}

TEST_CASE("inverting the zero field gives zero") {
    Tensor phi({3, 8, 8, 8}, 0.0);
    Tensor inv = invert_field(phi, 10);
    for (int64_t i = 0; i < inv.numel(); ++i) CHECK(inv[i] == doctest::Approx(0.0));
}

TEST_CASE("inverting a small constant field gives its negation") {
    Tensor phi({3, 12, 12, 12}, 0.0);
    int64_t plane = 12 * 12 * 12;
    for (int64_t i = 0; i < plane; ++i) {
        phi[i] = 0.3;              // z component
        phi[plane + i] = -0.2;     // y
        phi[2 * plane + i] = 0.1;  // x
    }
    Tensor inv = invert_field(phi, 20);
    // interior voxels see the exact negation; borders are affected by clamping
    for (int64_t z = 2; z < 10; ++z)
        for (int64_t y = 2; y < 10; ++y)
            for (int64_t x = 2; x < 10; ++x) {
                CHECK(inv.at(0, z, y, x) == doctest::Approx(-0.3).epsilon(1e-6));
                CHECK(inv.at(1, z, y, x) == doctest::Approx(0.2).epsilon(1e-6));
                CHECK(inv.at(2, z, y, x) == doctest::Approx(-0.1).epsilon(1e-6));
            }
}

TEST_CASE("composing a smooth field with its inverse is close to identity") {
    int64_t n = 32;
    Tensor phi = smooth_field(n, 2.0, 7);
    Tensor inv = invert_field(phi, 20);
    double rms = inversion_residual_rms(phi, inv);
    CHECK(rms < 0.1);

    // round-trip a smooth volume through phi then its inverse
    Rng rng(8);
    Tensor v({1, n, n, n});
    for (int64_t i = 0; i < v.numel(); ++i) v[i] = rng.uniform();
    v = gauss_blur(v, 2.0);
    Tensor once = warp_forward(v, phi);
    Tensor back = warp_forward(once, inv);
    // measure in the interior to keep border clamping out of the tally
    double acc = 0.0;
    int64_t cnt = 0;
    for (int64_t z = 4; z < n - 4; ++z)
        for (int64_t y = 4; y < n - 4; ++y)
            for (int64_t x = 4; x < n - 4; ++x) {
                double d = back.at(0, z, y, x) - v.at(0, z, y, x);
                acc += d * d;
                ++cnt;
            }
    CHECK(std::sqrt(acc / cnt) < 0.05);
}

TEST_CASE("field inversion rejects too few iterations and diverging fields") {
    Tensor phi({3, 8, 8, 8}, 0.0);
    CHECK_THROWS_AS(invert_field(phi, 3), Error);

    // a 100-degree in-plane rotation makes the fixed-point iteration oscillate
    int64_t n = 16;
    double c = (n - 1) / 2.0;
    double th = 100.0 * 3.14159265358979323846 / 180.0;
    double ct = std::cos(th), st = std::sin(th);
    Tensor rot({3, n, n, n}, 0.0);
    int64_t plane = n * n * n;
    for (int64_t z = 0; z < n; ++z)
        for (int64_t y = 0; y < n; ++y)
            for (int64_t x = 0; x < n; ++x) {
                int64_t i = (z * n + y) * n + x;
                double dy = y - c, dx = x - c;
                rot[plane + i] = ct * dy - st * dx - dy;
                rot[2 * plane + i] = st * dy + ct * dx - dx;
            }
    CHECK_THROWS_AS(invert_field(rot, 10), Error);
}

TEST_CASE("spatial gradient stencils") {
    int64_t n = 8;
    // constant volume -> zero everywhere
    Tensor c({1, n, n, n}, 4.0);
    Tensor gc = spatial_gradient_forward(c);
    CHECK(gc.shape() == std::vector<int64_t>{3, n, n, n});
    for (int64_t i = 0; i < gc.numel(); ++i) CHECK(gc[i] == doctest::Approx(0.0));

    // linear ramp along y with slope 2 -> y-derivative 2, others 0
    Tensor ramp({1, n, n, n});
    for (int64_t z = 0; z < n; ++z)
        for (int64_t y = 0; y < n; ++y)
            for (int64_t x = 0; x < n; ++x) ramp.at(0, z, y, x) = 2.0 * static_cast<double>(y);
    Tensor gr = spatial_gradient_forward(ramp);
    for (int64_t z = 0; z < n; ++z)
        for (int64_t y = 0; y < n; ++y)
            for (int64_t x = 0; x < n; ++x) {
                CHECK(gr.at(0, z, y, x) == doctest::Approx(0.0));
                CHECK(gr.at(1, z, y, x) == doctest::Approx(2.0));
                CHECK(gr.at(2, z, y, x) == doctest::Approx(0.0));
            }

    // random volume: check the stencil definition directly
    Rng rng(9);
    Tensor v = random_tensor({1, n, n, n}, rng);
    Tensor g = spatial_gradient_forward(v);
    for (int64_t z = 0; z < n; ++z)
        for (int64_t y = 0; y < n; ++y)
            for (int64_t x = 0; x < n; ++x) {
                double expect;
                if (x == 0) expect = v.at(0, z, y, 1) - v.at(0, z, y, 0);
                else if (x == n - 1) expect = v.at(0, z, y, n - 1) - v.at(0, z, y, n - 2);
                else expect = 0.5 * (v.at(0, z, y, x + 1) - v.at(0, z, y, x - 1));
                CHECK(g.at(2, z, y, x) == doctest::Approx(expect).epsilon(1e-12));
            }
}

TEST_CASE("patch embedding counts, ordering, and bijection") {
    CHECK(patch_count(8, 8, 8, 2) == 64);
    CHECK_THROWS_AS(patch_count(9, 8, 8, 2), Error);

    Rng rng(10);
    int64_t C = 3, n = 4, Q = 2;
    Tensor v = random_tensor({C, n, n, n}, rng);
    Tensor rows = patch_rows_forward(v, Q);
    CHECK(rows.shape() == std::vector<int64_t>{8, C * Q * Q * Q});

    // token 0 is the (0,0,0) patch, raster order z-major then y then x inside
    for (int64_t c = 0; c < C; ++c)
        for (int64_t z = 0; z < Q; ++z)
            for (int64_t y = 0; y < Q; ++y)
                for (int64_t x = 0; x < Q; ++x)
                    CHECK(rows.at(0, ((c * Q + z) * Q + y) * Q + x) == v.at(c, z, y, x));

    // token index is z-major over patch grid: patch (z=1,y=0,x=1) -> index 1*4+0*2+1
    CHECK(rows.at(5, 0) == v.at(0, 2, 0, 2));

    // inverse is an exact bijection
    Tensor back = patch_rows_inverse(rows, Q, C, n, n, n);
    for (int64_t i = 0; i < v.numel(); ++i) CHECK(back[i] == v[i]);
}

TEST_CASE("gaussian blur preserves constants and mass") {
    Tensor c({1, 10, 10, 10}, 2.5);
    Tensor out = gauss_blur(c, 1.5);
    for (int64_t i = 0; i < out.numel(); ++i) CHECK(out[i] == doctest::Approx(2.5).epsilon(1e-12));
}
