#include "prompt/dapl.hpp"
#include <cmath>

namespace vf::dapl {

using namespace vf::ad;

namespace {
Val init2d(int64_t rows, int64_t cols, Rng& rng, const char* name) {
    Tensor t({rows, cols});
    double k = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-k, k);
    return leaf(t, name);
}

Val init_conv(int64_t co, int64_t ci, int64_t k, Rng& rng, const char* name) {
    Tensor t({co, ci, k, k, k});
    double bound = 1.0 / std::sqrt(static_cast<double>(ci * k * k * k));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
    return leaf(t, name);
}

Val zeros1d(int64_t n, const char* name) { return leaf(Tensor({n}, 0.0), name); }
} // namespace

std::vector<ad::Val> Dapl::params() const {
    std::vector<ad::Val> out = {enc_w1, enc_b1, enc_w2, enc_b2, mix_w,   mix_b,
                                embed_w, embed_b, cls_w1, cls_b1, cls_w2, cls_b2,
                                prompt,  gate_w1, gate_b1, gate_w2, gate_b2};
    for (auto& p : block1.params()) out.push_back(p);
    for (auto& p : block2.params()) out.push_back(p);
    return out;
}

Dapl make_dapl(const DaplConfig& cfg, Rng& rng) {
    Dapl d;
    d.cfg = cfg;
    int64_t C = cfg.enc_channels, M = cfg.M, S = cfg.S, Q = cfg.Q;
    d.enc_w1 = init_conv(C, 1, 3, rng, "dapl.enc_w1");
    d.enc_b1 = zeros1d(C, "dapl.enc_b1");
    d.enc_w2 = init_conv(C, C, 3, rng, "dapl.enc_w2");
    d.enc_b2 = zeros1d(C, "dapl.enc_b2");
    d.mix_w = init_conv(C, 2 * C, 3, rng, "dapl.mix_w");
    d.mix_b = zeros1d(C, "dapl.mix_b");
    d.embed_w = init2d(M, C * Q * Q * Q, rng, "dapl.embed_w");
    d.embed_b = zeros1d(M, "dapl.embed_b");
    d.block1 = ssm::make_mamba_block(M, S, rng);
    d.block2 = ssm::make_mamba_block(M, S, rng);
    d.cls_w1 = init2d(4 * S, 3 * S, rng, "dapl.cls_w1");
    d.cls_b1 = zeros1d(4 * S, "dapl.cls_b1");
    d.cls_w2 = init2d(cfg.n_classes, 4 * S, rng, "dapl.cls_w2");
    d.cls_b2 = zeros1d(cfg.n_classes, "dapl.cls_b2");
    Tensor bank({cfg.n_classes * cfg.L, M});
    for (int64_t i = 0; i < bank.numel(); ++i) bank[i] = 0.02 * rng.normal();
    d.prompt = leaf(bank, "dapl.prompt");
    d.gate_w1 = init2d(4 * S, 3 * S, rng, "dapl.gate_w1");
    d.gate_b1 = zeros1d(4 * S, "dapl.gate_b1");
    d.gate_w2 = init2d(cfg.n_classes * cfg.L * M, 4 * S, rng, "dapl.gate_w2");
    d.gate_b2 = zeros1d(cfg.n_classes * cfg.L * M, "dapl.gate_b2");
    return d;
}

Val shared_encode(const Dapl& d, const Val& v) {
    VF_CHECK(v->value.ndim() == 4 && v->value.dim(0) == 1,
             "shared_encode expects a single-channel volume");
    Val f = conv3d(v, d.enc_w1, d.enc_b1, 1);
    return conv3d(gelu(f), d.enc_w2, d.enc_b2, 1);
}

std::vector<int64_t> bid_order(int64_t N) {
    VF_CHECK(N >= 1, "bid_order needs N >= 1");
    std::vector<int64_t> idx;
    idx.reserve(static_cast<size_t>(N));
    int64_t half = N / 2;
    for (int64_t i = 1; i <= half - 1; ++i) idx.push_back(i - 1);
    for (int64_t i = N; i >= std::max<int64_t>(half, 1); --i) idx.push_back(i - 1);
    VF_CHECK(static_cast<int64_t>(idx.size()) == N, "bid ordering must be a permutation");
    std::vector<bool> seen(static_cast<size_t>(N), false);
    for (int64_t i : idx) {
        VF_CHECK(i >= 0 && i < N && !seen[static_cast<size_t>(i)],
                 "bid ordering must be a permutation");
        seen[static_cast<size_t>(i)] = true;
    }
    return idx;
}

Directional directional_sequences(const Dapl& d, const Val& feat_d, const Val& feat_r) {
    VF_CHECK(feat_d->value.shape() == feat_r->value.shape(),
             "directional_sequences: modality features must share shape");
    Val mixed = conv3d(concat_ch(feat_d, feat_r), d.mix_w, d.mix_b, 1);
    Val rows = patch_rows(mixed, d.cfg.Q);
    Val tokens = linear(rows, d.embed_w, d.embed_b);
    auto [f_for, h_unused] = ssm::mamba_block(tokens, d.block1);
    (void)h_unused;

    int64_t N = f_for->value.dim(0);
    std::vector<int64_t> rev(static_cast<size_t>(N));
    for (int64_t i = 0; i < N; ++i) rev[static_cast<size_t>(i)] = N - 1 - i;

    Directional out;
    out.f_for = f_for;
    out.f_bac = gather_rows(f_for, rev);
    out.f_bid = gather_rows(f_for, bid_order(N));
    return out;
}

Hidden hidden_summaries(const Dapl& d, const Directional& seqs) {
    Hidden h;
    h.h1 = ssm::mamba_block(seqs.f_for, d.block2).second;
    h.h2 = ssm::mamba_block(seqs.f_bac, d.block2).second;
    h.h3 = ssm::mamba_block(seqs.f_bid, d.block2).second;
    return h;
}

Val classify(const Dapl& d, const Hidden& h) {
    Val cat = concat_flat({h.h1, h.h2, h.h3});
    Val row = reshape(cat, {1, 3 * d.cfg.S});
    Val hidden = gelu(linear(row, d.cls_w1, d.cls_b1));
    Val logits = linear(hidden, d.cls_w2, d.cls_b2);
    return reshape(softmax_rows(logits), {d.cfg.n_classes});
}

Val ce_from_probs(const Val& probs, int label) {
    VF_CHECK(label >= 0 && label < probs->value.numel(),
             "class label " << label << " out of range");
    return mul_scalar(vlog(gather_flat(probs, {label})), -1.0);
}

Val prompt_gate(const Dapl& d, const Hidden& h) {
    Val cat = concat_flat({h.h1, h.h2, h.h3});
    Val row = reshape(cat, {1, 3 * d.cfg.S});
    Val hidden = gelu(linear(row, d.gate_w1, d.gate_b1));
    Val flat = sigmoid(linear(hidden, d.gate_w2, d.gate_b2));
    return reshape(flat, {d.cfg.n_classes * d.cfg.L, d.cfg.M});
}

Val apply_gate(const Dapl& d, const Val& gate) { return mul(d.prompt, gate); }

Val select_prompt(const Dapl& d, const Hidden& h) { return apply_gate(d, prompt_gate(d, h)); }

} // namespace vf::dapl
