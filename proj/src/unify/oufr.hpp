#pragma once
#include <string>
#include <utility>
#include <vector>
#include "ad/ops.hpp"
#include "core/rng.hpp"
#include "ssm/ssm.hpp"

namespace vf::unify {

enum class Backbone { spatial_mamba, mamba, transformer };

Backbone backbone_from_name(const std::string& name);
const char* backbone_name(Backbone b);

struct OufrConfig {
    int64_t in_channels = 8; // channels of the encoded modality features
    int64_t M = 32;
    int64_t S = 16;
    int64_t Q = 4;
    int64_t n_tokens = 512; // per modality, fixes the positional table size
    Backbone backbone = Backbone::spatial_mamba;
};

// One pre-norm attention+MLP stage of the transformer alternative.
struct AttnBlock {
    ad::Val norm1_g, norm2_g;
    ad::Val w_q, b_q, w_k, b_k, w_v, b_v, w_att_o, b_att_o;
    ad::Val w_m1, b_m1, w_m2, b_m2;
    std::vector<ad::Val> params() const {
        return {norm1_g, norm2_g, w_q, b_q, w_k, b_k, w_v, b_v, w_att_o, b_att_o,
                w_m1, b_m1, w_m2, b_m2};
    }
};

// Unified-representation stage: shared patch embedding, then three scan (or
// attention) blocks over the concatenated [moving ‖ reference] token sequence.
struct Oufr {
    OufrConfig cfg;
    ad::Val embed_w, embed_b;
    std::vector<ssm::MambaBlock> blocks; // spatial_mamba / mamba kinds
    std::vector<AttnBlock> attn;         // transformer kind
    ad::Val pos;                         // learned positions (2*n_tokens, M)
    int64_t heads = 4;

    std::vector<ad::Val> params() const;
    int64_t stack_param_count() const; // parameters in the swappable stack only
};

Oufr make_oufr(const OufrConfig& cfg, Rng& rng);

// feat_d/feat_r: (C,D,H,W) encoded features. Returns the unified sequences
// (moving (N,M), reference (N,M)) after the three blocks.
std::pair<ad::Val, ad::Val> unify_pair(const Oufr& o, const ad::Val& feat_d, const ad::Val& feat_r,
                                  const ad::Val& h1, const ad::Val& h2, const ad::Val& h3);

// InfoNCE over positionwise positives with K sampled negatives per anchor.
ad::Val contrastive_loss(const ad::Val& f1, const ad::Val& f2, int64_t K, double tau,
                         uint64_t seed);

// Eq-style pairing: contrastive(clean_moving, clean_reference) +
// contrastive(warped_reference, degraded_moving).
ad::Val modality_loss(const ad::Val& fd_clean, const ad::Val& fr_clean,
                      const ad::Val& fr_warped, const ad::Val& fd_degraded, int64_t K,
                      double tau, uint64_t seed);

} // namespace vf::unify
