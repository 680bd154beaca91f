#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <cmath>
#include "align/fa.hpp"
#include "support/gradcheck.hpp"

using namespace vf;
using namespace vf::ad;
using namespace vf::align;
using test::gradcheck;
using test::random_tensor;

namespace {

FaConfig small_cfg(int64_t J, int64_t M, int64_t vol, std::vector<int64_t> ch = {}) {
    FaConfig c;
    c.prompt_rows = 4;
    c.M = M;
    c.J = J;
    c.channels = std::move(ch);
    c.corr_channels = 2;
    c.mlp_hidden = 8;
    c.vol_d = c.vol_h = c.vol_w = vol;
    return c;
}

} // namespace

TEST_CASE("token grids round-trip the z-major raster order") {
    Rng rng(1);
    Tensor t = random_tensor({8, 2}, rng);
    Val grid = tokens_to_grid(constant(t), 2, 2, 2);
    CHECK(grid->value.shape() == std::vector<int64_t>{2, 2, 2, 2});
    for (int64_t z = 0; z < 2; ++z)
        for (int64_t y = 0; y < 2; ++y)
            for (int64_t x = 0; x < 2; ++x)
                for (int64_t c = 0; c < 2; ++c)
                    CHECK(grid->value.at(c, z, y, x) == t.at((z * 2 + y) * 2 + x, c));
    Val back = grid_to_tokens(grid);
    CHECK(max_abs_diff(back->value, t) == 0.0);

    Tensor big = random_tensor({512, 3}, rng);
    CHECK(tokens_to_grid(constant(big), 8, 8, 8)->value.shape() ==
          std::vector<int64_t>{3, 8, 8, 8});
    CHECK_THROWS(tokens_to_grid(constant(random_tensor({7, 2}, rng)), 2, 2, 2));
}

TEST_CASE("stage resolutions double until clamped at the volume size") {
    Rng rng(2);
    FaConfig cfg = small_cfg(4, 4, 32, {4, 4, 4, 4, 4});
    Fa fa = make_fa(cfg, rng);
    Val fd = constant(random_tensor({4, 8, 8, 8}, rng));
    Val fr = constant(random_tensor({4, 8, 8, 8}, rng));
    Val prompt = constant(random_tensor({4, 4}, rng));
    std::vector<int64_t> dims;
    for (const auto& blk : fa.blocks) {
        auto [nd, nr] = regblk(fa.cfg, blk, fd, fr, prompt);
        fd = nd;
        fr = nr;
        dims.push_back(fd->value.dim(1));
        CHECK(fd->value.shape() == fr->value.shape());
    }
    CHECK(dims == std::vector<int64_t>{16, 32, 32, 32});
}

TEST_CASE("default channel plans match the configured block count") {
    CHECK(default_channels(4, 32) == std::vector<int64_t>{32, 32, 16, 16, 16});
    CHECK(default_channels(2, 32) == std::vector<int64_t>{32, 32, 16});
    CHECK(default_channels(0, 32) == std::vector<int64_t>{32});
    Rng rng(3);
    FaConfig bad = small_cfg(2, 4, 16, {4, 4});
    CHECK_THROWS(make_fa(bad, rng)); // needs J+1 entries
    FaConfig wrong = small_cfg(2, 4, 16, {6, 4, 4});
    CHECK_THROWS(make_fa(wrong, rng)); // stage-1 channels must equal M
}

TEST_CASE("prompt conditioning is the identity at initialization") {
    Rng rng(4);
    Fa fa = make_fa(small_cfg(2, 4, 16), rng);
    Val p1 = constant(random_tensor({4, 4}, rng));
    Val p2 = constant(random_tensor({4, 4}, rng));
    Val s = prompt_scale(fa.blocks[0], p1);
    CHECK(s->value.shape() == std::vector<int64_t>{4});
    for (int64_t i = 0; i < 4; ++i) CHECK(s->value[i] == 1.0); // 2*sigmoid(0)

    // so two different prompts give identical block outputs at init
    Val fd = constant(random_tensor({4, 4, 4, 4}, rng));
    Val fr = constant(random_tensor({4, 4, 4, 4}, rng));
    auto [a1, b1] = regblk(fa.cfg, fa.blocks[0], fd, fr, p1);
    auto [a2, b2] = regblk(fa.cfg, fa.blocks[0], fd, fr, p2);
    CHECK(max_abs_diff(a1->value, a2->value) == 0.0);
    CHECK(max_abs_diff(b1->value, b2->value) == 0.0);
}

TEST_CASE("a trained conditioning path reacts to the prompt but not for zero input") {
    Rng rng(5);
    Fa fa = make_fa(small_cfg(1, 4, 8, {4, 4}), rng);
    RegBlk& blk = fa.blocks[0];
    blk.mlp_w2 = leaf(random_tensor({4, 8}, rng), "w2"); // pretend training moved it
    blk.mlp_b2 = leaf(random_tensor({4}, rng), "b2");

    Val zero_prompt = constant(Tensor({4, 4}, 0.0));
    Tensor s1 = prompt_scale(blk, zero_prompt)->value;
    Tensor s2 = prompt_scale(blk, constant(Tensor({4, 4}, 0.0)))->value;
    CHECK(max_abs_diff(s1, s2) == 0.0); // constant whenever the prompt is zero

    Tensor s3 = prompt_scale(blk, constant(random_tensor({4, 4}, rng)))->value;
    CHECK(max_abs_diff(s1, s3) > 1e-9);
    for (int64_t i = 0; i < 4; ++i) {
        CHECK(s3[i] > 0.0);
        CHECK(s3[i] < 2.0);
    }
}

TEST_CASE("correlation attention rows are a distribution over positions") {
    Rng rng(6);
    Fa fa = make_fa(small_cfg(1, 4, 4, {4, 4}), rng);
    const RegBlk& blk = fa.blocks[0];
    Val fd = constant(random_tensor({4, 4, 4, 4}, rng));
    Val fr = constant(random_tensor({4, 4, 4, 4}, rng));
    // reproduce the block's correlation stage with public ops
    Val xd = transpose2d(reshape(conv3d(fd, blk.proj_d_w, blk.proj_d_b), {2, 64}));
    Val xr = transpose2d(reshape(conv3d(fr, blk.proj_r_w, blk.proj_r_b), {2, 64}));
    Val att = softmax_rows(matmul_bt(xd, xr));
    for (int64_t i = 0; i < 64; ++i) {
        double s = 0.0;
        for (int64_t j = 0; j < 64; ++j) s += att->value.at(i, j);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("the zero-initialized head emits the identity field") {
    Rng rng(7);
    Fa fa = make_fa(small_cfg(2, 4, 16), rng);
    Val tok_d = constant(random_tensor({64, 4}, rng));
    Val tok_r = constant(random_tensor({64, 4}, rng));
    Val prompt = constant(random_tensor({4, 4}, rng));
    Val phi = align_field(fa, tok_d, tok_r, prompt);
    CHECK(phi->value.shape() == std::vector<int64_t>{3, 16, 16, 16});
    CHECK(max_abs_diff(phi->value, Tensor({3, 16, 16, 16}, 0.0)) == 0.0); // exact identity
}

TEST_CASE("every swept block count runs from tokens to a full-resolution field") {
    Rng rng(8);
    for (int64_t J : {0, 2, 3, 4, 5}) {
        FaConfig cfg = small_cfg(J, 8, 16);
        cfg.channels.clear(); // use the default plan {8,32,16,...}
        cfg.M = 8;
        Fa fa = make_fa(cfg, rng);
        Val tok_d = constant(random_tensor({64, 8}, rng));
        Val tok_r = constant(random_tensor({64, 8}, rng));
        Val prompt = constant(random_tensor({4, 8}, rng));
        Val phi = align_field(fa, tok_d, tok_r, prompt);
        CHECK(phi->value.shape() == std::vector<int64_t>{3, 16, 16, 16});
        CHECK(std::isfinite(mean_all(phi)->value[0]));
    }
}

TEST_CASE("head gradients agree with finite differences") {
    Rng rng(9);
    Fa fa = make_fa(small_cfg(0, 2, 4), rng);
    fa.head_w2 = leaf(random_tensor({3, 16, 1, 1, 1}, rng, -0.3, 0.3), "hw2");
    fa.head_b2 = leaf(random_tensor({3}, rng, -0.3, 0.3), "hb2");
    Val fd = leaf(random_tensor({2, 4, 4, 4}, rng));
    Val fr = leaf(random_tensor({2, 4, 4, 4}, rng));
    auto build = [&]() {
        Val phi = fa_head(fa, fd, fr);
        return mean_all(mul(phi, phi));
    };
    std::vector<Val> leaves = {fa.head_w1, fa.head_b1, fa.head_w2, fa.head_b2, fd, fr};
    CHECK(gradcheck(build, leaves, 1e-5, 10) < 1e-4);
}

TEST_CASE("full alignment stack gradients agree with finite differences") {
    Rng rng(10);
    FaConfig cfg = small_cfg(2, 2, 8, {2, 3, 2});
    cfg.prompt_rows = 2;
    cfg.mlp_hidden = 4;
    Fa fa = make_fa(cfg, rng);
    // move the zero-initialized tensors off zero so every path carries signal
    fa.head_w2 = leaf(random_tensor({3, 16, 1, 1, 1}, rng, -0.2, 0.2), "hw2");
    for (auto& blk : fa.blocks) {
        blk.mlp_w2 = leaf(random_tensor(blk.mlp_w2->value.shape(), rng, -0.4, 0.4), "mw2");
        blk.mlp_b2 = leaf(random_tensor(blk.mlp_b2->value.shape(), rng, -0.4, 0.4), "mb2");
    }
    Val tok_d = leaf(random_tensor({8, 2}, rng));
    Val tok_r = leaf(random_tensor({8, 2}, rng));
    Val prompt = leaf(random_tensor({2, 2}, rng));
    std::vector<Val> leaves = fa.params();
    leaves.push_back(tok_d);
    leaves.push_back(tok_r);
    leaves.push_back(prompt);
    auto build = [&]() {
        Val phi = align_field(fa, tok_d, tok_r, prompt);
        return mean_all(mul(phi, phi));
    };
    CHECK(gradcheck(build, leaves, 1e-5, 5) < 1e-4);
}

TEST_CASE("displacement error is zero at equality and 3 for a unit offset") {
    Rng rng(11);
    Tensor gt = random_tensor({3, 4, 4, 4}, rng);
    Val loss0 = reg_loss(constant(gt), constant(gt));
    CHECK(loss0->value[0] == 0.0);

    Tensor shifted = gt;
    for (int64_t i = 0; i < shifted.numel(); ++i) shifted[i] += 1.0;
    Val loss1 = reg_loss(constant(shifted), constant(gt));
    CHECK(loss1->value[0] == doctest::Approx(3.0).epsilon(1e-12));

    Tensor pred = random_tensor({3, 4, 4, 4}, rng);
    double brute = 0.0;
    for (int64_t i = 0; i < pred.numel(); ++i)
        brute += (pred[i] - gt[i]) * (pred[i] - gt[i]);
    brute /= 64.0;
    CHECK(reg_loss(constant(pred), constant(gt))->value[0] ==
          doctest::Approx(brute).epsilon(1e-12));
    CHECK_THROWS(reg_loss(constant(pred), constant(random_tensor({3, 4, 4, 2}, rng))));
}

TEST_CASE("token counts that cannot tile the volume are rejected") {
    Rng rng(12);
    Fa fa = make_fa(small_cfg(0, 2, 8), rng);
    Val prompt = constant(random_tensor({4, 2}, rng));
    Val bad = constant(random_tensor({100, 2}, rng)); // not a halved 8^3 grid
    CHECK_THROWS(align_field(fa, bad, bad, prompt));
    Val too_many = constant(random_tensor({4096, 2}, rng)); // exceeds 8^3 voxels
    CHECK_THROWS(align_field(fa, too_many, too_many, prompt));
}
