#include "align/fa.hpp"
#include <cmath>

namespace vf::align {

using namespace vf::ad;

std::vector<int64_t> default_channels(int64_t J, int64_t M) {
    VF_CHECK(J >= 0, "negative block count");
    std::vector<int64_t> ch = {M};
    for (int64_t j = 0; j < J; ++j) ch.push_back(j == 0 ? 32 : 16);
    return ch;
}

namespace {

Val init_conv(int64_t co, int64_t ci, int64_t k, Rng& rng, const char* name) {
    Tensor t({co, ci, k, k, k});
    double bound = 1.0 / std::sqrt(static_cast<double>(ci * k * k * k));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
    return leaf(t, name);
}

Val init_mat(int64_t rows, int64_t cols, Rng& rng, const char* name) {
    Tensor t({rows, cols});
    double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
    return leaf(t, name);
}

// smallest power-of-two pooling that brings every axis to <= 8
int pool_factor(int64_t d, int64_t h, int64_t w) {
    int f = 1;
    while (d / f > 8 || h / f > 8 || w / f > 8) f *= 2;
    VF_CHECK(d % f == 0 && h % f == 0 && w % f == 0,
             "correlation pooling needs dims divisible by " << f);
    return f;
}

Val flat_positions(const Val& grid) { // (C,d,h,w) -> (V, C)
    int64_t C = grid->value.dim(0);
    int64_t V = grid->value.numel() / C;
    return transpose2d(reshape(grid, {C, V}));
}

Val unflatten(const Val& rows, int64_t C, int64_t d, int64_t h, int64_t w) {
    return reshape(transpose2d(rows), {C, d, h, w});
}

} // namespace

std::vector<ad::Val> RegBlk::params() const {
    std::vector<ad::Val> out = {mlp_w1, mlp_b1, mlp_w2, mlp_b2, proj_d_w, proj_d_b,
                                proj_r_w, proj_r_b, conv_d_w, conv_d_b, conv_r_w, conv_r_b};
    if (skip_d_w) {
        out.push_back(skip_d_w);
        out.push_back(skip_d_b);
        out.push_back(skip_r_w);
        out.push_back(skip_r_b);
    }
    return out;
}

std::vector<ad::Val> Fa::params() const {
    std::vector<ad::Val> out;
    for (const auto& b : blocks)
        for (auto& p : b.params()) out.push_back(p);
    out.push_back(head_w1);
    out.push_back(head_b1);
    out.push_back(head_w2);
    out.push_back(head_b2);
    return out;
}

Fa make_fa(const FaConfig& cfg_in, Rng& rng) {
    Fa fa;
    fa.cfg = cfg_in;
    if (fa.cfg.channels.empty()) fa.cfg.channels = default_channels(fa.cfg.J, fa.cfg.M);
    const auto& ch = fa.cfg.channels;
    VF_CHECK(static_cast<int64_t>(ch.size()) == fa.cfg.J + 1,
             "channel list needs " << fa.cfg.J + 1 << " entries, got " << ch.size());
    VF_CHECK(ch[0] == fa.cfg.M, "stage-1 channels must equal the token dim");

    int64_t prompt_flat = fa.cfg.prompt_rows * fa.cfg.M;
    for (int64_t j = 0; j < fa.cfg.J; ++j) {
        RegBlk b;
        b.c_in = ch[static_cast<size_t>(j)];
        b.c_out = ch[static_cast<size_t>(j + 1)];
        b.mlp_w1 = init_mat(fa.cfg.mlp_hidden, prompt_flat, rng, "fa.mlp_w1");
        b.mlp_b1 = leaf(Tensor({fa.cfg.mlp_hidden}, 0.0), "fa.mlp_b1");
        b.mlp_w2 = leaf(Tensor({b.c_in, fa.cfg.mlp_hidden}, 0.0), "fa.mlp_w2"); // scale starts at 1
        b.mlp_b2 = leaf(Tensor({b.c_in}, 0.0), "fa.mlp_b2");
        b.proj_d_w = init_conv(fa.cfg.corr_channels, b.c_in, 1, rng, "fa.proj_d_w");
        b.proj_d_b = leaf(Tensor({fa.cfg.corr_channels}, 0.0), "fa.proj_d_b");
        b.proj_r_w = init_conv(fa.cfg.corr_channels, b.c_in, 1, rng, "fa.proj_r_w");
        b.proj_r_b = leaf(Tensor({fa.cfg.corr_channels}, 0.0), "fa.proj_r_b");
        b.conv_d_w = init_conv(b.c_out, 2 * b.c_in, 3, rng, "fa.conv_d_w");
        b.conv_d_b = leaf(Tensor({b.c_out}, 0.0), "fa.conv_d_b");
        b.conv_r_w = init_conv(b.c_out, 2 * b.c_in, 3, rng, "fa.conv_r_w");
        b.conv_r_b = leaf(Tensor({b.c_out}, 0.0), "fa.conv_r_b");
        if (b.c_in != b.c_out) {
            b.skip_d_w = init_conv(b.c_out, b.c_in, 1, rng, "fa.skip_d_w");
            b.skip_d_b = leaf(Tensor({b.c_out}, 0.0), "fa.skip_d_b");
            b.skip_r_w = init_conv(b.c_out, b.c_in, 1, rng, "fa.skip_r_w");
            b.skip_r_b = leaf(Tensor({b.c_out}, 0.0), "fa.skip_r_b");
        }
        fa.blocks.push_back(b);
    }

    int64_t head_in = 2 * ch.back();
    fa.head_w1 = init_conv(16, head_in, 3, rng, "fa.head_w1");
    fa.head_b1 = leaf(Tensor({16}, 0.0), "fa.head_b1");
    fa.head_w2 = leaf(Tensor({3, 16, 1, 1, 1}, 0.0), "fa.head_w2"); // identity field at init
    fa.head_b2 = leaf(Tensor({3}, 0.0), "fa.head_b2");
    return fa;
}

Val tokens_to_grid(const Val& tokens, int64_t gd, int64_t gh, int64_t gw) {
    VF_CHECK(tokens->value.ndim() == 2, "tokens must be (N,M)");
    VF_CHECK(tokens->value.dim(0) == gd * gh * gw,
             "token count " << tokens->value.dim(0) << " does not fill a " << gd << "x" << gh
                            << "x" << gw << " grid");
    return reshape(transpose2d(tokens), {tokens->value.dim(1), gd, gh, gw});
}

Val grid_to_tokens(const Val& grid) {
    VF_CHECK(grid->value.ndim() == 4, "grid must be (C,D,H,W)");
    int64_t C = grid->value.dim(0);
    return transpose2d(reshape(grid, {C, grid->value.numel() / C}));
}

Val prompt_scale(const RegBlk& blk, const Val& prompt) {
    Val flat = reshape(prompt, {1, prompt->value.numel()});
    Val hid = gelu(linear(flat, blk.mlp_w1, blk.mlp_b1));
    Val gate = sigmoid(linear(hid, blk.mlp_w2, blk.mlp_b2)); // (1, c_in)
    return reshape(mul_scalar(gate, 2.0), {blk.c_in});
}

std::pair<Val, Val> regblk(const FaConfig& cfg, const RegBlk& blk, const Val& fd, const Val& fr,
                           const Val& prompt) {
    VF_CHECK(fd->value.shape() == fr->value.shape(), "stream shapes must match");
    VF_CHECK(fd->value.dim(0) == blk.c_in, "stream has " << fd->value.dim(0)
                                                         << " channels, block expects "
                                                         << blk.c_in);
    int64_t d = fd->value.dim(1), h = fd->value.dim(2), w = fd->value.dim(3);

    Val scale = prompt_scale(blk, prompt);
    Val cd = mul_channel(fd, scale);
    Val cr = mul_channel(fr, scale);

    // correlation attention at a pooled resolution
    int f = pool_factor(d, h, w);
    Val pd = f > 1 ? avgpool(cd, f) : cd;
    Val pr = f > 1 ? avgpool(cr, f) : cr;
    int64_t vd = d / f, vh = h / f, vw = w / f;
    Val xd = flat_positions(conv3d(pd, blk.proj_d_w, blk.proj_d_b)); // (V, corr)
    Val xr = flat_positions(conv3d(pr, blk.proj_r_w, blk.proj_r_b));
    Val att_dr = softmax_rows(matmul_bt(xd, xr)); // rows over reference positions
    Val att_rd = softmax_rows(matmul_bt(xr, xd));
    Val from_r = unflatten(matmul(att_dr, flat_positions(pr)), blk.c_in, vd, vh, vw);
    Val from_d = unflatten(matmul(att_rd, flat_positions(pd)), blk.c_in, vd, vh, vw);
    for (int s = f; s > 1; s /= 2) {
        from_r = upsample2_trilinear(from_r);
        from_d = upsample2_trilinear(from_d);
    }

    // residual conv per stream
    Val skip_d = blk.skip_d_w ? conv3d(cd, blk.skip_d_w, blk.skip_d_b) : cd;
    Val skip_r = blk.skip_r_w ? conv3d(cr, blk.skip_r_w, blk.skip_r_b) : cr;
    Val od = add(skip_d, gelu(conv3d(concat_ch(cd, from_r), blk.conv_d_w, blk.conv_d_b)));
    Val orr = add(skip_r, gelu(conv3d(concat_ch(cr, from_d), blk.conv_r_w, blk.conv_r_b)));

    // x2 upsample until the streams reach the volume resolution
    if (2 * d <= cfg.vol_d && 2 * h <= cfg.vol_h && 2 * w <= cfg.vol_w) {
        od = upsample2_trilinear(od);
        orr = upsample2_trilinear(orr);
    }
    return {od, orr};
}

Val fa_head(const Fa& fa, const Val& fd_in, const Val& fr_in) {
    Val fd = fd_in, fr = fr_in;
    while (fd->value.dim(1) < fa.cfg.vol_d || fd->value.dim(2) < fa.cfg.vol_h ||
           fd->value.dim(3) < fa.cfg.vol_w) {
        fd = upsample2_trilinear(fd);
        fr = upsample2_trilinear(fr);
    }
    VF_CHECK(fd->value.dim(1) == fa.cfg.vol_d && fd->value.dim(2) == fa.cfg.vol_h &&
                 fd->value.dim(3) == fa.cfg.vol_w,
             "streams cannot reach the volume resolution by doubling");
    Val cat = concat_ch(fd, fr);
    Val hid = relu(conv3d(cat, fa.head_w1, fa.head_b1));
    return conv3d(hid, fa.head_w2, fa.head_b2);
}

Val align_field(const Fa& fa, const Val& tok_d, const Val& tok_r, const Val& prompt) {
    VF_CHECK(tok_d->value.ndim() == 2 && tok_d->value.shape() == tok_r->value.shape(),
             "token sequences must be (N,M) and match");
    int64_t gd = fa.cfg.vol_d, gh = fa.cfg.vol_h, gw = fa.cfg.vol_w;
    int64_t N = tok_d->value.dim(0);
    while (gd * gh * gw > N) {
        VF_CHECK(gd % 2 == 0 && gh % 2 == 0 && gw % 2 == 0,
                 "token count " << N << " is incompatible with the volume resolution");
        gd /= 2;
        gh /= 2;
        gw /= 2;
    }
    VF_CHECK(gd * gh * gw == N, "token count " << N << " is not a power-of-two grid");
    Val fd = tokens_to_grid(tok_d, gd, gh, gw);
    Val fr = tokens_to_grid(tok_r, gd, gh, gw);
    for (const auto& blk : fa.blocks) {
        auto [nd, nr] = regblk(fa.cfg, blk, fd, fr, prompt);
        fd = nd;
        fr = nr;
    }
    return fa_head(fa, fd, fr);
}

Val reg_loss(const Val& phi_pred, const Val& phi_gt) {
    VF_CHECK(phi_pred->value.shape() == phi_gt->value.shape() && phi_pred->value.ndim() == 4 &&
                 phi_pred->value.dim(0) == 3,
             "displacement fields must be matching (3,D,H,W)");
    int64_t voxels = phi_pred->value.numel() / 3;
    Val diff = sub(phi_pred, phi_gt);
    return mul_scalar(sum_all(square(diff)), 1.0 / static_cast<double>(voxels));
}

} // namespace vf::align
