#pragma once
#include <utility>
#include <vector>
#include "ad/ops.hpp"
#include "core/rng.hpp"

namespace vf::fuse {

struct UfrfConfig {
    int64_t in_channels = 16;  // 2C: warped moving features + reference features
    std::vector<int64_t> widths = {16, 32, 64}; // per-scale channel counts
    int64_t rank = 4;          // low-rank branch width
    int64_t branches = 3;      // one adapter branch per degradation class
    int64_t prompt_rows = 24;  // gated prompt rows (classes * prompt length)
    int64_t M = 32;            // prompt columns
    int64_t mlp_hidden = 256;  // BaseNet gate MLP width
    bool color = false;        // enables the chroma head
    bool multi_expert = false; // replace each adapter branch with a full BaseNet
};

// Channel-attention block conditioned on the class-weighted prompt.
struct BaseNet {
    int64_t C = 0;
    ad::Val mlp_w1, mlp_b1, mlp_w2, mlp_b2; // flatten(P ⊙ p) -> per-channel gates
    ad::Val k_w, k_b, q_w, q_b, v_w, v_b;   // 1x1x1 projections
    ad::Val o1_w, o1_b, o2_w, o2_b;         // gated output convs
    std::vector<ad::Val> params() const;
};

// Low-rank adapter branch: down-project, gate by the prompt, up-project.
struct LoraNet {
    int64_t C = 0, r = 0;
    ad::Val down_w, down_b;
    ad::Val scale_w, scale_b; // mean-pooled prompt -> bottleneck scale
    ad::Val up_w, up_b;       // zero-initialized: branch starts as the zero map
    std::vector<ad::Val> params() const;
};

struct Alsn {
    BaseNet base;
    std::vector<LoraNet> loras;    // empty when multi_expert
    std::vector<BaseNet> experts;  // empty unless multi_expert
    std::vector<ad::Val> params() const;
};

struct Ufrf {
    UfrfConfig cfg;
    ad::Val enc1_w, enc1_b;        // in -> w0 at full resolution
    ad::Val down1_w, down1_b;      // w0 -> w1, stride 2
    ad::Val enc2_w, enc2_b;        // w1 -> w1
    ad::Val down2_w, down2_b;      // w1 -> w2, stride 2
    ad::Val enc3_w, enc3_b;        // w2 -> w2
    std::vector<Alsn> alsn;        // one per scale
    ad::Val up2_w, up2_b;          // w2 -> w1, transpose stride 2
    ad::Val dec2_w, dec2_b;        // 2*w1 -> w1
    ad::Val up1_w, up1_b;          // w1 -> w0, transpose stride 2
    ad::Val dec1_w, dec1_b;        // 2*w0 -> w0
    ad::Val luma_w, luma_b;        // w0 -> 1
    ad::Val cr_w1, cr_b1, cr_w2, cr_b2; // chroma head (color only)
    std::vector<ad::Val> params() const;
    int64_t param_count() const;
};

Ufrf make_ufrf(const UfrfConfig& cfg, Rng& rng);

// Warp the moving features by the displacement field, concat the reference.
ad::Val build_fusion_input(const ad::Val& feat_moving, const ad::Val& phi,
                           const ad::Val& feat_ref);

ad::Val basenet(const BaseNet& bn, const ad::Val& f, const ad::Val& prompt, const ad::Val& p);
ad::Val loranet(const LoraNet& ln, const ad::Val& f, const ad::Val& prompt);
ad::Val alsn_apply(const Alsn& a, const ad::Val& f, const ad::Val& prompt, const ad::Val& p);

struct FusedOutput {
    ad::Val luma;  // (1,D,H,W) in [0,1]
    ad::Val crcb;  // (2,D,H,W) in [0,1]; empty for grayscale
};

// crcb_ref carries the reference chroma channels; pass an empty Val for
// grayscale tasks.
FusedOutput unet_fuse(const Ufrf& u, const ad::Val& fused_in, const ad::Val& prompt,
                      const ad::Val& p, const ad::Val& crcb_ref = {});

// Gaussian-window structural similarity (sigma 1.5, size 7, renormalized at
// the borders), averaged over the volume. Inputs are single- or multi-channel
// grids in [0,1]; channels are averaged.
ad::Val ssim(const ad::Val& a, const ad::Val& b);

ad::Val ssim_loss(const ad::Val& fused, const ad::Val& warped_fine, const ad::Val& ref);
std::pair<ad::Val, ad::Val> intensity_and_gradient_loss(const ad::Val& fused,
                                                        const ad::Val& warped_fine,
                                                        const ad::Val& ref);
// Empty Vals (grayscale task) make this exactly zero with no gradient.
ad::Val color_loss(const ad::Val& c_fuse, const ad::Val& c_fine);
ad::Val rf_loss(const ad::Val& l_ssim, const ad::Val& l_inten, const ad::Val& l_grad,
                const ad::Val& l_crcb);

} // namespace vf::fuse
