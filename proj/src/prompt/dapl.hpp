#pragma once
#include <vector>
#include "ad/ops.hpp"
#include "core/rng.hpp"
#include "ssm/ssm.hpp"

namespace vf::dapl {

struct DaplConfig {
    int64_t enc_channels = 8;
    int64_t M = 32; // token dim
    int64_t S = 16; // scan state dim
    int64_t Q = 4;  // patch side
    int64_t L = 8;  // prompt length
    int64_t n_classes = 3;
};

// Degradation-aware prompt learner: shared conv encoder, tri-directional
// token orderings through two scan blocks, a degradation classifier over the
// three hidden summaries, and a gated prompt bank shared by the downstream
// alignment and fusion stages.
struct Dapl {
    DaplConfig cfg;
    ad::Val enc_w1, enc_b1, enc_w2, enc_b2; // shared two-layer encoder
    ad::Val mix_w, mix_b;                   // channel-concat mixing conv
    ad::Val embed_w, embed_b;               // patch row projection to M
    ssm::MambaBlock block1, block2;
    ad::Val cls_w1, cls_b1, cls_w2, cls_b2; // classifier MLP + linear
    ad::Val prompt;                         // (n_classes*L, M)
    ad::Val gate_w1, gate_b1, gate_w2, gate_b2;

    std::vector<ad::Val> params() const;
};

Dapl make_dapl(const DaplConfig& cfg, Rng& rng);

// (1,D,H,W) -> (C,D,H,W); the same weights serve every modality.
ad::Val shared_encode(const Dapl& d, const ad::Val& v);

// 0-based gather order realizing the bidirectional sequence
// [1 .. floor(N/2)-1, N .. floor(N/2)] (1-based); always a permutation.
std::vector<int64_t> bid_order(int64_t N);

struct Directional {
    ad::Val f_for, f_bac, f_bid; // each (N,M)
};

// Encoded modality features -> mixed tokens -> first scan block -> orderings.
Directional directional_sequences(const Dapl& d, const ad::Val& feat_d, const ad::Val& feat_r);

struct Hidden {
    ad::Val h1, h2, h3; // each (S)
};

Hidden hidden_summaries(const Dapl& d, const Directional& seqs);

ad::Val classify(const Dapl& d, const Hidden& h); // probabilities (n_classes)

ad::Val ce_from_probs(const ad::Val& probs, int label);

ad::Val prompt_gate(const Dapl& d, const Hidden& h);           // sigmoid gate (n_classes*L, M)
ad::Val apply_gate(const Dapl& d, const ad::Val& gate);        // P elementwise gate
ad::Val select_prompt(const Dapl& d, const Hidden& h);         // apply_gate(prompt_gate(...))

} // namespace vf::dapl
