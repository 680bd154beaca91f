#include "fuse/ufrf.hpp"
#include <cmath>

namespace vf::fuse {

using namespace vf::ad;

namespace {

Val init_conv(int64_t co, int64_t ci, int64_t k, Rng& rng, const char* name) {
    Tensor t({co, ci, k, k, k});
    double bound = 1.0 / std::sqrt(static_cast<double>(ci * k * k * k));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
    return leaf(t, name);
}

Val init_tconv(int64_t ci, int64_t co, Rng& rng, const char* name) {
    Tensor t({ci, co, 2, 2, 2});
    double bound = 1.0 / std::sqrt(static_cast<double>(ci * 8));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
    return leaf(t, name);
}

Val init_mat(int64_t rows, int64_t cols, Rng& rng, const char* name) {
    Tensor t({rows, cols});
    double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
    return leaf(t, name);
}

Val zeros1(int64_t n, const char* name) { return leaf(Tensor({n}, 0.0), name); }

int64_t count(const std::vector<Val>& ps) {
    int64_t n = 0;
    for (const auto& p : ps) n += p->value.numel();
    return n;
}

BaseNet make_basenet(int64_t C, const UfrfConfig& cfg, Rng& rng) {
    BaseNet b;
    b.C = C;
    int64_t flat = cfg.prompt_rows * cfg.M;
    b.mlp_w1 = init_mat(cfg.mlp_hidden, flat, rng, "ufrf.base.mlp_w1");
    b.mlp_b1 = zeros1(cfg.mlp_hidden, "ufrf.base.mlp_b1");
    b.mlp_w2 = init_mat(C, cfg.mlp_hidden, rng, "ufrf.base.mlp_w2");
    b.mlp_b2 = zeros1(C, "ufrf.base.mlp_b2");
    b.k_w = init_conv(C, C, 1, rng, "ufrf.base.k_w");
    b.k_b = zeros1(C, "ufrf.base.k_b");
    b.q_w = init_conv(C, C, 1, rng, "ufrf.base.q_w");
    b.q_b = zeros1(C, "ufrf.base.q_b");
    b.v_w = init_conv(C, C, 1, rng, "ufrf.base.v_w");
    b.v_b = zeros1(C, "ufrf.base.v_b");
    b.o1_w = init_conv(C, C, 1, rng, "ufrf.base.o1_w");
    b.o1_b = zeros1(C, "ufrf.base.o1_b");
    b.o2_w = init_conv(C, C, 1, rng, "ufrf.base.o2_w");
    b.o2_b = zeros1(C, "ufrf.base.o2_b");
    return b;
}

LoraNet make_loranet(int64_t C, const UfrfConfig& cfg, Rng& rng) {
    VF_CHECK(cfg.rank < C, "adapter rank " << cfg.rank << " must stay below width " << C);
    LoraNet l;
    l.C = C;
    l.r = cfg.rank;
    l.down_w = init_conv(cfg.rank, C, 1, rng, "ufrf.lora.down_w");
    l.down_b = zeros1(cfg.rank, "ufrf.lora.down_b");
    l.scale_w = init_mat(cfg.rank, cfg.M, rng, "ufrf.lora.scale_w");
    l.scale_b = zeros1(cfg.rank, "ufrf.lora.scale_b");
    l.up_w = leaf(Tensor({C, cfg.rank, 1, 1, 1}, 0.0), "ufrf.lora.up_w"); // zero map at init
    l.up_b = zeros1(C, "ufrf.lora.up_b");
    return l;
}

} // namespace

std::vector<ad::Val> BaseNet::params() const {
    return {mlp_w1, mlp_b1, mlp_w2, mlp_b2, k_w, k_b, q_w,  q_b,
            v_w,    v_b,    o1_w,   o1_b,   o2_w, o2_b};
}

std::vector<ad::Val> LoraNet::params() const {
    return {down_w, down_b, scale_w, scale_b, up_w, up_b};
}

std::vector<ad::Val> Alsn::params() const {
    std::vector<ad::Val> out = base.params();
    for (const auto& l : loras)
        for (auto& p : l.params()) out.push_back(p);
    for (const auto& e : experts)
        for (auto& p : e.params()) out.push_back(p);
    return out;
}

std::vector<ad::Val> Ufrf::params() const {
    std::vector<ad::Val> out = {enc1_w, enc1_b, down1_w, down1_b, enc2_w, enc2_b,
                                down2_w, down2_b, enc3_w, enc3_b};
    for (const auto& a : alsn)
        for (auto& p : a.params()) out.push_back(p);
    for (auto& p : {up2_w, up2_b, dec2_w, dec2_b, up1_w, up1_b, dec1_w, dec1_b, luma_w, luma_b})
        out.push_back(p);
    if (cr_w1) {
        out.push_back(cr_w1);
        out.push_back(cr_b1);
        out.push_back(cr_w2);
        out.push_back(cr_b2);
    }
    return out;
}

int64_t Ufrf::param_count() const { return count(params()); }

Ufrf make_ufrf(const UfrfConfig& cfg, Rng& rng) {
    VF_CHECK(cfg.widths.size() == 3, "the fusion net is built around three scales");
    Ufrf u;
    u.cfg = cfg;
    int64_t w0 = cfg.widths[0], w1 = cfg.widths[1], w2 = cfg.widths[2];
    u.enc1_w = init_conv(w0, cfg.in_channels, 3, rng, "ufrf.enc1_w");
    u.enc1_b = zeros1(w0, "ufrf.enc1_b");
    u.down1_w = init_conv(w1, w0, 3, rng, "ufrf.down1_w");
    u.down1_b = zeros1(w1, "ufrf.down1_b");
    u.enc2_w = init_conv(w1, w1, 3, rng, "ufrf.enc2_w");
    u.enc2_b = zeros1(w1, "ufrf.enc2_b");
    u.down2_w = init_conv(w2, w1, 3, rng, "ufrf.down2_w");
    u.down2_b = zeros1(w2, "ufrf.down2_b");
    u.enc3_w = init_conv(w2, w2, 3, rng, "ufrf.enc3_w");
    u.enc3_b = zeros1(w2, "ufrf.enc3_b");

    for (int64_t s = 0; s < 3; ++s) {
        int64_t C = cfg.widths[static_cast<size_t>(s)];
        Alsn a;
        a.base = make_basenet(C, cfg, rng);
        if (cfg.multi_expert) {
            for (int64_t j = 0; j < cfg.branches; ++j) a.experts.push_back(make_basenet(C, cfg, rng));
        } else {
            int64_t branch_total = 0;
            for (int64_t j = 0; j < cfg.branches; ++j) {
                a.loras.push_back(make_loranet(C, cfg, rng));
                branch_total += count(a.loras.back().params());
            }
            VF_CHECK(cfg.branches == 0 || branch_total < count(a.base.params()),
                     "adapter branches at width " << C << " outweigh their base block");
        }
        u.alsn.push_back(a);
    }

    u.up2_w = init_tconv(w2, w1, rng, "ufrf.up2_w");
    u.up2_b = zeros1(w1, "ufrf.up2_b");
    u.dec2_w = init_conv(w1, 2 * w1, 3, rng, "ufrf.dec2_w");
    u.dec2_b = zeros1(w1, "ufrf.dec2_b");
    u.up1_w = init_tconv(w1, w0, rng, "ufrf.up1_w");
    u.up1_b = zeros1(w0, "ufrf.up1_b");
    u.dec1_w = init_conv(w0, 2 * w0, 3, rng, "ufrf.dec1_w");
    u.dec1_b = zeros1(w0, "ufrf.dec1_b");
    u.luma_w = init_conv(1, w0, 1, rng, "ufrf.luma_w");
    u.luma_b = zeros1(1, "ufrf.luma_b");
    if (cfg.color) {
        u.cr_w1 = init_conv(8, w0 + 2, 3, rng, "ufrf.cr_w1");
        u.cr_b1 = zeros1(8, "ufrf.cr_b1");
        u.cr_w2 = init_conv(2, 8, 1, rng, "ufrf.cr_w2");
        u.cr_b2 = zeros1(2, "ufrf.cr_b2");
    }
    return u;
}

Val build_fusion_input(const Val& feat_moving, const Val& phi, const Val& feat_ref) {
    VF_CHECK(feat_moving->value.shape() == feat_ref->value.shape(),
             "fusion inputs must share shape");
    return concat_ch(warp(feat_moving, phi), feat_ref);
}

Val basenet(const BaseNet& bn, const Val& f, const Val& prompt, const Val& p) {
    int64_t C = f->value.dim(0);
    VF_CHECK(C == bn.C, "block built for " << bn.C << " channels, got " << C);
    int64_t V = f->value.numel() / C;
    int64_t rows = prompt->value.dim(0);
    int64_t classes = p->value.numel();
    VF_CHECK(rows % classes == 0, "prompt rows must split evenly across classes");
    int64_t L = rows / classes;

    // class-probability weighting of the prompt, broadcast over each class slice
    std::vector<int64_t> rep(static_cast<size_t>(rows));
    for (int64_t i = 0; i < rows; ++i) rep[static_cast<size_t>(i)] = i / L;
    Val row_w = reshape(gather_rows(reshape(p, {classes, 1}), rep), {rows});
    Val weighted = scale_rows(prompt, row_w);

    Val flat = reshape(weighted, {1, rows * prompt->value.dim(1)});
    Val gates = reshape(linear(gelu(linear(flat, bn.mlp_w1, bn.mlp_b1)), bn.mlp_w2, bn.mlp_b2),
                        {C});

    Val kf = reshape(conv3d(f, bn.k_w, bn.k_b), {C, V});
    Val qf = reshape(conv3d(f, bn.q_w, bn.q_b), {C, V});
    Val att = scale_rows(mul_scalar(matmul_bt(kf, qf), 1.0 / static_cast<double>(V)), gates);
    Val vf = reshape(conv3d(f, bn.v_w, bn.v_b), {C, V});
    Val mixed = reshape(matmul(att, vf), f->value.shape());
    Val out = mul(conv3d(mixed, bn.o1_w, bn.o1_b), gelu(conv3d(mixed, bn.o2_w, bn.o2_b)));
    return add(out, f);
}

Val loranet(const LoraNet& ln, const Val& f, const Val& prompt) {
    VF_CHECK(f->value.dim(0) == ln.C, "branch built for " << ln.C << " channels");
    Val bott = gelu(conv3d(f, ln.down_w, ln.down_b));
    Val pooled = reshape(mean_rows(prompt), {1, prompt->value.dim(1)});
    Val s = reshape(sigmoid(linear(pooled, ln.scale_w, ln.scale_b)), {ln.r});
    return conv3d(mul_channel(bott, s), ln.up_w, ln.up_b);
}

Val alsn_apply(const Alsn& a, const Val& f, const Val& prompt, const Val& p) {
    Val out = basenet(a.base, f, prompt, p);
    for (size_t j = 0; j < a.loras.size(); ++j)
        out = add(out, mul_scalarval(loranet(a.loras[j], f, prompt),
                                     pick(p, static_cast<int64_t>(j))));
    for (size_t j = 0; j < a.experts.size(); ++j)
        out = add(out, mul_scalarval(basenet(a.experts[j], f, prompt, p),
                                     pick(p, static_cast<int64_t>(j))));
    return out;
}

FusedOutput unet_fuse(const Ufrf& u, const Val& fused_in, const Val& prompt, const Val& p,
                      const Val& crcb_ref) {
    VF_CHECK(fused_in->value.ndim() == 4 && fused_in->value.dim(0) == u.cfg.in_channels,
             "fusion input must be (" << u.cfg.in_channels << ",D,H,W)");
    for (int ax = 1; ax < 4; ++ax)
        VF_CHECK(fused_in->value.dim(ax) % 4 == 0,
                 "spatial dims must be divisible by 4 for three scales");

    Val e1 = gelu(conv3d(fused_in, u.enc1_w, u.enc1_b));
    Val e2 = gelu(conv3d(gelu(conv3d(e1, u.down1_w, u.down1_b, 2)), u.enc2_w, u.enc2_b));
    Val e3 = gelu(conv3d(gelu(conv3d(e2, u.down2_w, u.down2_b, 2)), u.enc3_w, u.enc3_b));

    Val s1 = alsn_apply(u.alsn[0], e1, prompt, p);
    Val s2 = alsn_apply(u.alsn[1], e2, prompt, p);
    Val s3 = alsn_apply(u.alsn[2], e3, prompt, p);

    Val m2 = gelu(conv3d(concat_ch(conv3d_transpose2(s3, u.up2_w, u.up2_b), s2), u.dec2_w,
                         u.dec2_b));
    Val m1 = gelu(conv3d(concat_ch(conv3d_transpose2(m2, u.up1_w, u.up1_b), s1), u.dec1_w,
                         u.dec1_b));

    FusedOutput out;
    out.luma = sigmoid(conv3d(m1, u.luma_w, u.luma_b));
    if (u.cfg.color) {
        VF_CHECK(crcb_ref && crcb_ref->value.ndim() == 4 && crcb_ref->value.dim(0) == 2,
                 "color fusion needs a (2,D,H,W) reference chroma grid");
        Val cat = concat_ch(m1, crcb_ref);
        out.crcb = sigmoid(conv3d(gelu(conv3d(cat, u.cr_w1, u.cr_b1)), u.cr_w2, u.cr_b2));
    }
    return out;
}

} // namespace vf::fuse
