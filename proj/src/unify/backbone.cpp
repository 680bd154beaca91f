#include "unify/oufr.hpp"
#include <cmath>

namespace vf::unify {

using namespace vf::ad;

Backbone backbone_from_name(const std::string& name) {
    if (name == "spatial_mamba") return Backbone::spatial_mamba;
    if (name == "mamba") return Backbone::mamba;
    if (name == "transformer") return Backbone::transformer;
    VF_FAIL("unknown backbone '" << name << "'");
}

const char* backbone_name(Backbone b) {
    switch (b) {
        case Backbone::spatial_mamba: return "spatial_mamba";
        case Backbone::mamba: return "mamba";
        case Backbone::transformer: return "transformer";
    }
    VF_FAIL("unknown backbone");
}

namespace {

Val init2d(int64_t rows, int64_t cols, Rng& rng, const char* name) {
    Tensor t({rows, cols});
    double k = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-k, k);
    return leaf(t, name);
}

int64_t mamba_param_count(int64_t M, int64_t S) {
    return 3 * (M * M + M)            // three projections
           + (M + 1) + S              // step-size map and decay rates
           + (S * M * M + S * M)      // input map
           + (M * S * M + M * S);     // readout map
}

Val rmsnorm(const Val& x, const Val& g) {
    double root = std::sqrt(static_cast<double>(x->value.dim(1)));
    return mul_rowvec(mul_scalar(l2norm_rows(x), root), g);
}

Val attn_forward(const Val& x, const AttnBlock& blk, int64_t heads) {
    int64_t T = x->value.dim(0), M = x->value.dim(1);
    int64_t dh = M / heads;
    Val n1 = rmsnorm(x, blk.norm1_g);
    Val q = linear(n1, blk.w_q, blk.b_q);
    Val k = linear(n1, blk.w_k, blk.b_k);
    Val v = linear(n1, blk.w_v, blk.b_v);

    std::vector<Val> head_rows;
    head_rows.reserve(static_cast<size_t>(heads));
    double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int64_t h = 0; h < heads; ++h) {
        std::vector<int64_t> cols(static_cast<size_t>(T * dh));
        for (int64_t i = 0; i < T; ++i)
            for (int64_t c = 0; c < dh; ++c)
                cols[static_cast<size_t>(i * dh + c)] = i * M + h * dh + c;
        Val qh = reshape(gather_flat(q, cols), {T, dh});
        Val kh = reshape(gather_flat(k, cols), {T, dh});
        Val vh = reshape(gather_flat(v, cols), {T, dh});
        Val att = softmax_rows(mul_scalar(matmul_bt(qh, kh), scale));
        head_rows.push_back(transpose2d(matmul(att, vh))); // (dh, T)
    }
    Val merged = transpose2d(concat_rows(head_rows)); // (T, M)
    Val after_attn = add(x, linear(merged, blk.w_att_o, blk.b_att_o));

    Val n2 = rmsnorm(after_attn, blk.norm2_g);
    Val mlp = linear(gelu(linear(n2, blk.w_m1, blk.b_m1)), blk.w_m2, blk.b_m2);
    return add(after_attn, mlp);
}

} // namespace

std::vector<ad::Val> Oufr::params() const {
    std::vector<ad::Val> out = {embed_w, embed_b};
    for (const auto& b : blocks)
        for (auto& p : b.params()) out.push_back(p);
    for (const auto& a : attn)
        for (auto& p : a.params()) out.push_back(p);
    if (pos) out.push_back(pos);
    return out;
}

int64_t Oufr::stack_param_count() const {
    int64_t n = 0;
    for (const auto& b : blocks)
        for (auto& p : b.params()) n += p->value.numel();
    for (const auto& a : attn)
        for (auto& p : a.params()) n += p->value.numel();
    if (pos) n += pos->value.numel();
    return n;
}

Oufr make_oufr(const OufrConfig& cfg, Rng& rng) {
    Oufr o;
    o.cfg = cfg;
    int64_t M = cfg.M, S = cfg.S, Q = cfg.Q;
    o.embed_w = init2d(M, cfg.in_channels * Q * Q * Q, rng, "oufr.embed_w");
    o.embed_b = leaf(Tensor({M}, 0.0), "oufr.embed_b");

    if (cfg.backbone == Backbone::transformer) {
        int64_t T = 2 * cfg.n_tokens;
        // size the MLP width so the stack's parameter count matches the
        // three scan blocks it replaces
        int64_t target = 3 * mamba_param_count(M, S);
        int64_t fixed = 3 * (4 * (M * M + M) + 2 * M) + 3 * M + T * M;
        int64_t hid = std::max<int64_t>(4, (target - fixed) / (3 * (2 * M + 1)));
        for (int j = 0; j < 3; ++j) {
            AttnBlock a;
            a.norm1_g = leaf(Tensor({M}, 1.0), "oufr.attn.norm1");
            a.norm2_g = leaf(Tensor({M}, 1.0), "oufr.attn.norm2");
            a.w_q = init2d(M, M, rng, "oufr.attn.w_q");
            a.b_q = leaf(Tensor({M}, 0.0), "oufr.attn.b_q");
            a.w_k = init2d(M, M, rng, "oufr.attn.w_k");
            a.b_k = leaf(Tensor({M}, 0.0), "oufr.attn.b_k");
            a.w_v = init2d(M, M, rng, "oufr.attn.w_v");
            a.b_v = leaf(Tensor({M}, 0.0), "oufr.attn.b_v");
            a.w_att_o = init2d(M, M, rng, "oufr.attn.w_o");
            a.b_att_o = leaf(Tensor({M}, 0.0), "oufr.attn.b_o");
            a.w_m1 = init2d(hid, M, rng, "oufr.attn.w_m1");
            a.b_m1 = leaf(Tensor({hid}, 0.0), "oufr.attn.b_m1");
            a.w_m2 = init2d(M, hid, rng, "oufr.attn.w_m2");
            a.b_m2 = leaf(Tensor({M}, 0.0), "oufr.attn.b_m2");
            o.attn.push_back(a);
        }
        Tensor p({T, M});
        for (int64_t i = 0; i < p.numel(); ++i) p[i] = 0.02 * rng.normal();
        o.pos = leaf(p, "oufr.pos");
    } else {
        for (int j = 0; j < 3; ++j) o.blocks.push_back(ssm::make_mamba_block(M, S, rng));
    }
    return o;
}

std::pair<Val, Val> unify_pair(const Oufr& o, const Val& feat_d, const Val& feat_r, const Val& h1,
                               const Val& h2, const Val& h3) {
    VF_CHECK(feat_d->value.shape() == feat_r->value.shape(),
             "unify: modality features must share shape");
    Val tok_d = linear(patch_rows(feat_d, o.cfg.Q), o.embed_w, o.embed_b);
    Val tok_r = linear(patch_rows(feat_r, o.cfg.Q), o.embed_w, o.embed_b);
    int64_t N = tok_d->value.dim(0);
    Val x = concat_rows({tok_d, tok_r}); // (2N, M)

    switch (o.cfg.backbone) {
        case Backbone::spatial_mamba: {
            const Val* hs[3] = {&h1, &h2, &h3};
            for (int j = 0; j < 3; ++j) x = ssm::spatial_mamba_block(x, *hs[j], o.blocks[j]);
            break;
        }
        case Backbone::mamba:
            for (int j = 0; j < 3; ++j) x = ssm::mamba_block(x, o.blocks[j]).first;
            break;
        case Backbone::transformer: {
            VF_CHECK(o.pos->value.dim(0) == 2 * N,
                     "transformer backbone built for " << o.pos->value.dim(0) / 2
                                                       << " tokens, got " << N);
            x = add(x, o.pos);
            for (int j = 0; j < 3; ++j) x = attn_forward(x, o.attn[j], o.heads);
            break;
        }
    }
    return {slice_rows(x, 0, N), slice_rows(x, N, 2 * N)};
}

Val contrastive_loss(const Val& f1, const Val& f2, int64_t K, double tau, uint64_t seed) {
    VF_CHECK(f1->value.ndim() == 2 && f1->value.shape() == f2->value.shape(),
             "contrastive_loss: feature shape mismatch");
    int64_t N = f1->value.dim(0), M = f1->value.dim(1);
    VF_CHECK(K >= 1 && K < N, "contrastive_loss: K=" << K << " must be in [1, N)");

    Val f1n = l2norm_rows(f1);
    Val f2n = l2norm_rows(f2);
    Val ones = constant(Tensor({M, 1}, 1.0));
    Val pos = matmul(mul(f1n, f2n), ones); // (N,1) cosine of each positive pair

    Rng rng(seed ^ 0x636f6e74ULL);
    std::vector<int64_t> anchor_idx(static_cast<size_t>(N * K));
    std::vector<int64_t> neg_idx(static_cast<size_t>(N * K));
    for (int64_t i = 0; i < N; ++i) {
        std::vector<int64_t> draw = rng.sample_without_replacement(N - 1, K);
        for (int64_t k = 0; k < K; ++k) {
            int64_t v = draw[static_cast<size_t>(k)];
            neg_idx[static_cast<size_t>(i * K + k)] = v >= i ? v + 1 : v;
            anchor_idx[static_cast<size_t>(i * K + k)] = i;
        }
    }
    Val negs = gather_rows(f2n, neg_idx);
    Val anchors = gather_rows(f1n, anchor_idx);
    Val neg_sim = reshape(matmul(mul(anchors, negs), ones), {N, K});

    // (N, 1+K) score rows, positive in column 0, then softmax cross entropy
    Val scores = transpose2d(concat_rows({transpose2d(pos), transpose2d(neg_sim)}));
    Val scaled = mul_scalar(scores, 1.0 / tau);
    return cross_entropy_logits(scaled, std::vector<int64_t>(static_cast<size_t>(N), 0));
}

Val modality_loss(const Val& fd_clean, const Val& fr_clean, const Val& fr_warped,
                  const Val& fd_degraded, int64_t K, double tau, uint64_t seed) {
    return add(contrastive_loss(fd_clean, fr_clean, K, tau, seed),
               contrastive_loss(fr_warped, fd_degraded, K, tau, seed + 1));
}

} // namespace vf::unify
