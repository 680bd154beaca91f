#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <cmath>
#include "unify/oufr.hpp"
#include "support/gradcheck.hpp"

using namespace vf;
using namespace vf::ad;
using namespace vf::unify;
using test::gradcheck;
using test::random_tensor;

namespace {

OufrConfig tiny_cfg(Backbone b = Backbone::spatial_mamba) {
    OufrConfig c;
    c.in_channels = 2;
    c.M = 8;
    c.S = 4;
    c.Q = 2;
    c.n_tokens = 8; // (4/2)^3 per modality
    c.backbone = b;
    return c;
}

Val zero_state(int64_t S) { return constant(Tensor({S}, 0.0)); }

} // namespace

TEST_CASE("default config maps paired 32^3 feature grids to 512 tokens each") {
    Rng rng(11);
    OufrConfig cfg; // in_channels 8, M 32, S 16, Q 4, n_tokens 512
    Oufr o = make_oufr(cfg, rng);
    Val fd = constant(random_tensor({8, 32, 32, 32}, rng, 0.0, 1.0));
    Val fr = constant(random_tensor({8, 32, 32, 32}, rng, 0.0, 1.0));
    Val h1 = constant(random_tensor({16}, rng));
    Val h2 = constant(random_tensor({16}, rng));
    Val h3 = constant(random_tensor({16}, rng));
    auto [ud, ur] = unify_pair(o, fd, fr, h1, h2, h3);
    CHECK(ud->value.shape() == std::vector<int64_t>{512, 32});
    CHECK(ur->value.shape() == std::vector<int64_t>{512, 32});
    CHECK(std::isfinite(mean_all(ud)->value[0]));
    CHECK(std::isfinite(mean_all(ur)->value[0]));
    CHECK(max_abs_diff(ud->value, ur->value) > 1e-9); // modalities stay distinct
}

TEST_CASE("zero summaries reduce the spatial backbone to the plain scan stack") {
    Rng rng(5);
    Oufr o = make_oufr(tiny_cfg(), rng);
    Oufr plain = o;
    plain.cfg.backbone = Backbone::mamba; // same weights, no injection path

    Val fd = constant(random_tensor({2, 4, 4, 4}, rng));
    Val fr = constant(random_tensor({2, 4, 4, 4}, rng));
    Val h0 = zero_state(4);
    auto [ad0, ar0] = unify_pair(o, fd, fr, h0, h0, h0);
    auto [bd, br] = unify_pair(plain, fd, fr, h0, h0, h0);
    CHECK(max_abs_diff(ad0->value, bd->value) < 1e-12);
    CHECK(max_abs_diff(ar0->value, br->value) < 1e-12);

    Val h1 = constant(random_tensor({4}, rng));
    auto [cd, cr] = unify_pair(o, fd, fr, h1, h0, h0);
    CHECK(max_abs_diff(cd->value, bd->value) > 1e-9); // injection actually matters
}

TEST_CASE("unify gradients agree with finite differences on a small spatial stack") {
    Rng rng(7);
    Oufr o = make_oufr(tiny_cfg(), rng);
    Val fd = leaf(random_tensor({2, 4, 4, 4}, rng, -0.5, 0.5));
    Val fr = leaf(random_tensor({2, 4, 4, 4}, rng, -0.5, 0.5));
    Val h1 = leaf(random_tensor({4}, rng));
    Val h2 = leaf(random_tensor({4}, rng));
    Val h3 = leaf(random_tensor({4}, rng));
    std::vector<Val> leaves = o.params();
    leaves.push_back(fd);
    leaves.push_back(fr);
    leaves.push_back(h1);
    leaves.push_back(h2);
    leaves.push_back(h3);
    auto build = [&]() {
        auto [ud, ur] = unify_pair(o, fd, fr, h1, h2, h3);
        return mean_all(mul(add(ud, ur), add(ud, ur)));
    };
    CHECK(gradcheck(build, leaves, 1e-5, 12) < 1e-4);
}

TEST_CASE("transformer backbone gradients agree with finite differences") {
    Rng rng(9);
    Oufr o = make_oufr(tiny_cfg(Backbone::transformer), rng);
    Val fd = leaf(random_tensor({2, 4, 4, 4}, rng, -0.5, 0.5));
    Val fr = leaf(random_tensor({2, 4, 4, 4}, rng, -0.5, 0.5));
    Val h0 = zero_state(4);
    std::vector<Val> leaves = o.params();
    leaves.push_back(fd);
    leaves.push_back(fr);
    auto build = [&]() {
        auto [ud, ur] = unify_pair(o, fd, fr, h0, h0, h0);
        return mean_all(mul(add(ud, ur), add(ud, ur)));
    };
    CHECK(gradcheck(build, leaves, 1e-5, 8) < 1e-4);
}

TEST_CASE("transformer stack matches the scan stack parameter budget within 15 percent") {
    Rng rng(13);
    OufrConfig cfg; // full-size default
    cfg.backbone = Backbone::spatial_mamba;
    Oufr sp = make_oufr(cfg, rng);
    cfg.backbone = Backbone::transformer;
    Oufr tr = make_oufr(cfg, rng);
    double ratio = static_cast<double>(tr.stack_param_count()) /
                   static_cast<double>(sp.stack_param_count());
    CHECK(ratio > 0.85);
    CHECK(ratio < 1.15);
    // the same sizing rule must hold away from the default too
    OufrConfig small = tiny_cfg(Backbone::spatial_mamba);
    Oufr sp2 = make_oufr(small, rng);
    small.backbone = Backbone::transformer;
    Oufr tr2 = make_oufr(small, rng);
    double ratio2 = static_cast<double>(tr2.stack_param_count()) /
                    static_cast<double>(sp2.stack_param_count());
    CHECK(ratio2 > 0.85);
    CHECK(ratio2 < 1.15);
}

TEST_CASE("transformer backbone rejects token counts it was not built for") {
    Rng rng(15);
    Oufr o = make_oufr(tiny_cfg(Backbone::transformer), rng); // built for 8 tokens
    Val fd = constant(random_tensor({2, 8, 8, 8}, rng));      // yields 64 tokens
    Val fr = constant(random_tensor({2, 8, 8, 8}, rng));
    Val h0 = zero_state(4);
    CHECK_THROWS(unify_pair(o, fd, fr, h0, h0, h0));
}

TEST_CASE("backbone names round-trip and unknown names are rejected") {
    CHECK(backbone_from_name("spatial_mamba") == Backbone::spatial_mamba);
    CHECK(backbone_from_name("mamba") == Backbone::mamba);
    CHECK(backbone_from_name("transformer") == Backbone::transformer);
    for (Backbone b : {Backbone::spatial_mamba, Backbone::mamba, Backbone::transformer})
        CHECK(backbone_from_name(backbone_name(b)) == b);
    CHECK_THROWS(backbone_from_name("conv"));
}

TEST_CASE("contrastive loss hits the closed form for orthonormal features") {
    int64_t N = 6;
    Tensor eye({N, N}, 0.0);
    for (int64_t i = 0; i < N; ++i) eye.at(i, i) = 1.0;
    Val f = constant(eye);
    double got = contrastive_loss(f, f, 5, 0.1, 42)->value[0];
    double expected = std::log1p(5.0 * std::exp(-1.0 / 0.1));
    CHECK(got == doctest::Approx(expected).epsilon(1e-10));
    CHECK(got == doctest::Approx(2.27e-4).epsilon(5e-3));

    double both = modality_loss(f, f, f, f, 5, 0.1, 42)->value[0];
    CHECK(both == doctest::Approx(2.0 * expected).epsilon(1e-10));
    CHECK(both == doctest::Approx(4.54e-4).epsilon(5e-3));
}

TEST_CASE("contrastive loss is nonnegative and scale invariant") {
    Rng rng(21);
    Val f1 = constant(random_tensor({10, 6}, rng, -2.0, 2.0));
    Val f2 = constant(random_tensor({10, 6}, rng, -2.0, 2.0));
    double base = contrastive_loss(f1, f2, 4, 0.1, 3)->value[0];
    CHECK(base >= 0.0);
    double scaled =
        contrastive_loss(mul_scalar(f1, 3.0), mul_scalar(f2, 0.5), 4, 0.1, 3)->value[0];
    CHECK(scaled == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("contrastive loss is direction sensitive and seed deterministic") {
    Rng rng(23);
    Val f1 = constant(random_tensor({8, 5}, rng, -1.0, 1.0));
    Val f2 = constant(random_tensor({8, 5}, rng, -1.0, 1.0));
    double ab = contrastive_loss(f1, f2, 3, 0.1, 7)->value[0];
    double ba = contrastive_loss(f2, f1, 3, 0.1, 7)->value[0];
    CHECK(std::fabs(ab - ba) > 1e-9); // anchors and negative pool swap roles

    double again = contrastive_loss(f1, f2, 3, 0.1, 7)->value[0];
    CHECK(again == ab); // bit exact under the same seed
    double other = contrastive_loss(f1, f2, 3, 0.1, 8)->value[0];
    CHECK(std::fabs(other - ab) > 0.0);
}

TEST_CASE("contrastive loss gradients agree with finite differences") {
    Rng rng(25);
    Val f1 = leaf(random_tensor({5, 4}, rng, -1.0, 1.0));
    Val f2 = leaf(random_tensor({5, 4}, rng, -1.0, 1.0));
    auto build = [&]() { return contrastive_loss(f1, f2, 2, 0.5, 99); };
    CHECK(gradcheck(build, {f1, f2}, 1e-5) < 1e-4);
}

TEST_CASE("contrastive loss needs more rows than negatives") {
    Rng rng(27);
    Val f1 = constant(random_tensor({4, 3}, rng));
    Val f2 = constant(random_tensor({4, 3}, rng));
    CHECK_THROWS(contrastive_loss(f1, f2, 4, 0.1, 1)); // K == N
    CHECK_THROWS(contrastive_loss(f1, f2, 0, 0.1, 1));
    CHECK_THROWS(contrastive_loss(f1, constant(random_tensor({4, 2}, rng)), 2, 0.1, 1));
}

TEST_CASE("unify is deterministic for a fixed build seed") {
    Rng rng_a(31), rng_b(31), rng_x(33);
    Oufr a = make_oufr(tiny_cfg(), rng_a);
    Oufr b = make_oufr(tiny_cfg(), rng_b);
    Tensor fd = random_tensor({2, 4, 4, 4}, rng_x);
    Tensor fr = random_tensor({2, 4, 4, 4}, rng_x);
    Tensor h = random_tensor({4}, rng_x);
    auto [ad1, ar1] = unify_pair(a, constant(fd), constant(fr), constant(h), constant(h), constant(h));
    auto [ad2, ar2] = unify_pair(b, constant(fd), constant(fr), constant(h), constant(h), constant(h));
    CHECK(max_abs_diff(ad1->value, ad2->value) == 0.0);
    CHECK(max_abs_diff(ar1->value, ar2->value) == 0.0);
}
