#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <cmath>
#include "ad/ops.hpp"
#include "core/rng.hpp"
#include "support/gradcheck.hpp"

using namespace vf;
using namespace vf::ad;
using test::gradcheck;
using test::random_tensor;

namespace {
// keep |x| away from 0 so kinked ops (abs, relu, maximum) are FD-safe
Tensor kink_safe(std::vector<int64_t> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) {
        double v = rng.uniform(0.1, 1.0);
        t[i] = rng.uniform() < 0.5 ? -v : v;
    }
    return t;
}
} // namespace

TEST_CASE("elementwise op gradients") {
    Rng rng(99);
    auto a = leaf(kink_safe({3, 4}, rng), "a");
    auto b = leaf(kink_safe({3, 4}, rng), "b");

    CHECK(gradcheck([&] { return mean_all(mul(add(a, b), sub(a, b))); }, {a, b}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(divv(a, add_scalar(square(b), 1.0))); }, {a, b}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(vexp(mul_scalar(a, 0.5))); }, {a}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(vlog(add_scalar(square(a), 0.5))); }, {a}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(vsqrt(add_scalar(square(a), 0.1))); }, {a}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(vabs(a)); }, {a}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(sigmoid(a)); }, {a}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(vtanh(a)); }, {a}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(relu(a)); }, {a}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(gelu(a)); }, {a}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(silu(a)); }, {a}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(softplus(a)); }, {a}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(maximum(a, b)); }, {a, b}) < 1e-5);
    auto s = leaf(Tensor::scalar(0.7), "s");
    CHECK(gradcheck([&] { return mean_all(mul_scalarval(a, s)); }, {a, s}) < 1e-5);
}

TEST_CASE("movement and broadcast op gradients") {
    Rng rng(7);
    auto x = leaf(random_tensor({4, 6}, rng), "x");
    auto s = leaf(random_tensor({4}, rng), "s");
    auto rv = leaf(random_tensor({6}, rng), "rv");
    auto vol = leaf(random_tensor({3, 2, 2, 2}, rng), "vol");
    auto ch = leaf(random_tensor({3}, rng), "ch");

    CHECK(gradcheck([&] { return mean_all(square(transpose2d(x))); }, {x}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(reshape(x, {2, 12}))); }, {x}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(slice_rows(x, 1, 3))); }, {x}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(gather_rows(x, {2, 0, 2}))); }, {x}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(gather_flat(x, {5, 1, 5, 23}))); }, {x}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(slice_flat(x, 3, 9))); }, {x}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(concat_rows({x, x}))); }, {x}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(scale_rows(x, s))); }, {x, s}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(add_rowvec(x, rv))); }, {x, rv}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(mul_rowvec(x, rv))); }, {x, rv}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(outer(s, rv))); }, {s, rv}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(mul_channel(vol, ch))); }, {vol, ch}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(add_channel(vol, ch))); }, {vol, ch}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(concat_ch(vol, vol))); }, {vol}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(slice_ch(vol, 1, 3))); }, {vol}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(concat_flat({s, rv}))); }, {s, rv}) < 1e-5);
    CHECK(gradcheck([&] { return pick(x, 17); }, {x}) < 1e-5);
}

TEST_CASE("matrix op gradients and values") {
    Rng rng(21);
    auto A = leaf(random_tensor({3, 5}, rng), "A");
    auto B = leaf(random_tensor({5, 4}, rng), "B");
    auto Bt = leaf(random_tensor({4, 5}, rng), "Bt");
    auto bias = leaf(random_tensor({4}, rng), "bias");

    CHECK(gradcheck([&] { return mean_all(square(matmul(A, B))); }, {A, B}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(matmul_bt(A, Bt))); }, {A, Bt}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(linear(A, Bt, bias))); }, {A, Bt, bias}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(softmax_rows(A))); }, {A}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(l2norm_rows(A))); }, {A}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(mean_rows(A))); }, {A}) < 1e-5);
    CHECK(gradcheck([&] { return cross_entropy_logits(A, {1, 0, 4}); }, {A}) < 1e-5);

    // softmax rows sum to one
    Val sm = softmax_rows(A);
    for (int64_t i = 0; i < 3; ++i) {
        double s = 0.0;
        for (int64_t j = 0; j < 5; ++j) s += sm->value.at(i, j);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("selective scan equals naive recurrence and hand case") {
    // scalar hand case: A=0.5, B=1, C=1, x=[1,0] -> y=[1,0.5]
    auto abar = constant(Tensor({2, 1}, {0.5, 0.5}));
    auto bbar = constant(Tensor({2, 1}, {1.0, 1.0}));
    auto cmat = constant(Tensor({2, 1}, {1.0, 1.0}));
    auto x = constant(Tensor({2, 1}, {1.0, 0.0}));
    Val out = scan_flat(abar, bbar, cmat, x, Val{});
    CHECK(out->value[0] == doctest::Approx(1.0));
    CHECK(out->value[1] == doctest::Approx(0.5));
    CHECK(out->value[2] == doctest::Approx(0.5)); // h_final = s_2

    // naive recurrence oracle on random sizes
    Rng rng(31);
    for (auto [N, M, S] : {std::tuple<int64_t, int64_t, int64_t>{5, 3, 2},
                           {64, 16, 16},
                           {17, 8, 4}}) {
        Tensor a = random_tensor({N, S}, rng, 0.1, 0.9);
        Tensor b = random_tensor({N, S * M}, rng);
        Tensor c = random_tensor({N, M * S}, rng);
        Tensor xx = random_tensor({N, M}, rng);
        Tensor h = random_tensor({S}, rng);

        Val res = scan_flat(constant(a), constant(b), constant(c), constant(xx), constant(h));

        std::vector<double> st(static_cast<size_t>(S), 0.0);
        double max_diff = 0.0;
        for (int64_t i = 0; i < N; ++i) {
            std::vector<double> ns(static_cast<size_t>(S), 0.0);
            for (int64_t sA = 0; sA < S; ++sA) {
                double acc = a.at(i, sA) * st[static_cast<size_t>(sA)];
                for (int64_t m = 0; m < M; ++m) acc += b.at(i, sA * M + m) * xx.at(i, m);
                ns[static_cast<size_t>(sA)] = acc;
            }
            st = ns;
            for (int64_t m = 0; m < M; ++m) {
                double y = 0.0;
                for (int64_t sA = 0; sA < S; ++sA)
                    y += c.at(i, m * S + sA) * (st[static_cast<size_t>(sA)] + a.at(i, sA) * h[sA]);
                max_diff = std::max(max_diff, std::fabs(y - res->value[i * M + m]));
            }
        }
        for (int64_t sA = 0; sA < S; ++sA)
            max_diff = std::max(max_diff, std::fabs(st[static_cast<size_t>(sA)] - res->value[N * M + sA]));
        CHECK(max_diff < 1e-6);
    }
}

TEST_CASE("selective scan gradients") {
    Rng rng(33);
    int64_t N = 4, M = 3, S = 2;
    auto a = leaf(random_tensor({N, S}, rng, 0.2, 0.8), "a");
    auto b = leaf(random_tensor({N, S * M}, rng), "b");
    auto c = leaf(random_tensor({N, M * S}, rng), "c");
    auto x = leaf(random_tensor({N, M}, rng), "x");
    auto h = leaf(random_tensor({S}, rng), "h");

    CHECK(gradcheck([&] {
        Val f = scan_flat(a, b, c, x, h);
        return mean_all(square(f));
    }, {a, b, c, x, h}) < 1e-5);

    // without injection
    CHECK(gradcheck([&] {
        Val f = scan_flat(a, b, c, x, Val{});
        return mean_all(square(f));
    }, {a, b, c, x}) < 1e-5);
}

TEST_CASE("scan stability on long bounded sequences") {
    Rng rng(55);
    int64_t N = 4096, M = 4, S = 4;
    Tensor a = random_tensor({N, S}, rng, 0.1, 0.99);
    Tensor b = random_tensor({N, S * M}, rng);
    Tensor c = random_tensor({N, M * S}, rng);
    Tensor x = random_tensor({N, M}, rng);
    Val out = scan_flat(constant(a), constant(b), constant(c), constant(x), Val{});
    for (int64_t i = 0; i < out->value.numel(); ++i) CHECK(std::isfinite(out->value[i]));
}

TEST_CASE("conv3d matches brute force") {
    Rng rng(61);
    for (int stride : {1, 2}) {
        int64_t Ci = 2, Co = 3, D = 6, H = 6, W = 6, k = 3;
        int64_t p = k / 2;
        Tensor x = random_tensor({Ci, D, H, W}, rng);
        Tensor w = random_tensor({Co, Ci, k, k, k}, rng);
        Tensor b = random_tensor({Co}, rng);
        Val out = conv3d(constant(x), constant(w), constant(b), stride);
        int64_t Do = (D + 2 * p - k) / stride + 1;
        REQUIRE(out->value.dim(1) == Do);
        double max_diff = 0.0;
        for (int64_t co = 0; co < Co; ++co)
            for (int64_t zo = 0; zo < Do; ++zo)
                for (int64_t yo = 0; yo < Do; ++yo)
                    for (int64_t xo = 0; xo < Do; ++xo) {
                        double acc = b[co];
                        for (int64_t ci = 0; ci < Ci; ++ci)
                            for (int64_t kz = 0; kz < k; ++kz)
                                for (int64_t ky = 0; ky < k; ++ky)
                                    for (int64_t kx = 0; kx < k; ++kx) {
                                        int64_t zi = zo * stride + kz - p;
                                        int64_t yi = yo * stride + ky - p;
                                        int64_t xi = xo * stride + kx - p;
                                        if (zi < 0 || zi >= D || yi < 0 || yi >= H || xi < 0 ||
                                            xi >= W)
                                            continue;
                                        acc += w.at(co, ci, kz, ky, kx) * x.at(ci, zi, yi, xi);
                                    }
                        max_diff = std::max(max_diff,
                                            std::fabs(acc - out->value.at(co, zo, yo, xo)));
                    }
        CHECK(max_diff < 1e-10);
    }
}

TEST_CASE("conv3d gradients (stride 1 and 2, and 1x1x1)") {
    Rng rng(63);
    auto x = leaf(random_tensor({2, 4, 4, 4}, rng), "x");
    auto w = leaf(random_tensor({3, 2, 3, 3, 3}, rng, -0.4, 0.4), "w");
    auto b = leaf(random_tensor({3}, rng), "b");
    CHECK(gradcheck([&] { return mean_all(square(conv3d(x, w, b, 1))); }, {x, w, b}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(conv3d(x, w, b, 2))); }, {x, w, b}) < 1e-5);
    auto w1 = leaf(random_tensor({4, 2, 1, 1, 1}, rng), "w1");
    auto b1 = leaf(random_tensor({4}, rng), "b1");
    CHECK(gradcheck([&] { return mean_all(square(conv3d(x, w1, b1, 1))); }, {x, w1, b1}) < 1e-5);
}

TEST_CASE("transpose conv doubles dims and gradients pass") {
    Rng rng(65);
    auto x = leaf(random_tensor({3, 3, 3, 3}, rng), "x");
    auto w = leaf(random_tensor({3, 2, 2, 2, 2}, rng, -0.5, 0.5), "w");
    auto b = leaf(random_tensor({2}, rng), "b");
    Val out = conv3d_transpose2(x, w, b);
    CHECK(out->value.shape() == std::vector<int64_t>{2, 6, 6, 6});
    CHECK(gradcheck([&] { return mean_all(square(conv3d_transpose2(x, w, b))); }, {x, w, b}) < 1e-5);

    // value oracle: each output voxel receives exactly one (kz,ky,kx) term
    double diff = 0.0;
    for (int64_t co = 0; co < 2; ++co)
        for (int64_t z = 0; z < 6; ++z)
            for (int64_t y = 0; y < 6; ++y)
                for (int64_t xx = 0; xx < 6; ++xx) {
                    double acc = b->value[co];
                    for (int64_t ci = 0; ci < 3; ++ci)
                        acc += w->value.at(ci, co, z % 2, y % 2, xx % 2) *
                               x->value.at(ci, z / 2, y / 2, xx / 2);
                    diff = std::max(diff, std::fabs(acc - out->value.at(co, z, y, xx)));
                }
    CHECK(diff < 1e-12);
}

TEST_CASE("upsample, avgpool, patch ops") {
    Rng rng(67);
    auto x = leaf(random_tensor({2, 4, 4, 4}, rng), "x");
    Val up = upsample2_trilinear(x);
    CHECK(up->value.shape() == std::vector<int64_t>{2, 8, 8, 8});
    CHECK(gradcheck([&] { return mean_all(square(upsample2_trilinear(x))); }, {x}) < 1e-5);
    CHECK(gradcheck([&] { return mean_all(square(avgpool(x, 2))); }, {x}) < 1e-5);

    // constant volume upsamples to the same constant
    auto c = constant(Tensor({1, 2, 2, 2}, 3.25));
    Val upc = upsample2_trilinear(c);
    CHECK(max_abs_diff(upc->value, Tensor({1, 4, 4, 4}, 3.25)) < 1e-12);

    CHECK(gradcheck([&] { return mean_all(square(patch_rows(x, 2))); }, {x}) < 1e-5);
    auto rows = leaf(random_tensor({8, 16}, rng), "rows");
    CHECK(gradcheck([&] { return mean_all(square(rows_to_patches(rows, 2, 2, 4, 4, 4))); }, {rows}) < 1e-5);
}

TEST_CASE("warp and spatial gradient op gradients") {
    Rng rng(69);
    // smooth-ish volume keeps trilinear interpolation FD-friendly
    auto v = leaf(random_tensor({1, 6, 6, 6}, rng), "v");
    Tensor phi0({3, 6, 6, 6});
    for (int64_t i = 0; i < phi0.numel(); ++i) phi0[i] = rng.uniform(-0.4, 0.4);
    auto phi = leaf(phi0, "phi");
    CHECK(gradcheck([&] { return mean_all(square(warp(v, phi))); }, {v, phi}, 1e-3) < 1e-4);
    CHECK(gradcheck([&] { return mean_all(square(spatial_gradient(v))); }, {v}) < 1e-5);
}

TEST_CASE("grad accumulation across two backward passes") {
    auto x = leaf(Tensor::scalar(2.0), "x");
    Val l1 = mul(x, x);
    backward(l1);
    CHECK(x->grad[0] == doctest::Approx(4.0));
    Val l2 = mul_scalar(x, 3.0);
    backward(l2);
    CHECK(x->grad[0] == doctest::Approx(7.0)); // 4 + 3
}
