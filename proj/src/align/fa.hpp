#pragma once
#include <utility>
#include <vector>
#include "ad/ops.hpp"
#include "core/rng.hpp"

namespace vf::align {

struct FaConfig {
    int64_t prompt_rows = 24; // gated prompt rows (classes * prompt length)
    int64_t M = 32;           // channels of the stage-1 grids (token dim)
    int64_t J = 4;            // registration block count
    std::vector<int64_t> channels; // J+1 entries, channels[0] == M; empty -> default_channels
    int64_t corr_channels = 8;     // projection width for correlation attention
    int64_t mlp_hidden = 64;       // prompt conditioning MLP width
    int64_t vol_d = 32, vol_h = 32, vol_w = 32; // full volume resolution
};

// {M, 32, 16, 16, ...}: one entry per stage boundary.
std::vector<int64_t> default_channels(int64_t J, int64_t M);

// One registration stage: prompt-conditioned channel scaling, cross-modal
// correlation attention at a pooled resolution, a residual conv on each
// stream, then x2 trilinear upsampling clamped at the volume resolution.
struct RegBlk {
    int64_t c_in = 0, c_out = 0;
    ad::Val mlp_w1, mlp_b1, mlp_w2, mlp_b2; // prompt -> per-channel scale (last layer zero)
    ad::Val proj_d_w, proj_d_b, proj_r_w, proj_r_b; // 1x1x1 projections for correlation
    ad::Val conv_d_w, conv_d_b, conv_r_w, conv_r_b; // 3x3x3 stream convs
    ad::Val skip_d_w, skip_d_b, skip_r_w, skip_r_b; // 1x1x1 skips, only when c_in != c_out
    std::vector<ad::Val> params() const;
};

struct Fa {
    FaConfig cfg;
    std::vector<RegBlk> blocks;
    ad::Val head_w1, head_b1; // 3x3x3 conv on the concatenated streams
    ad::Val head_w2, head_b2; // 1x1x1 conv to 3 channels, zero-initialized
    std::vector<ad::Val> params() const;
};

Fa make_fa(const FaConfig& cfg, Rng& rng);

// (N,M) tokens in z-major raster order -> (M, gd, gh, gw); exact inverse of
// re-flattening the grid back to rows.
ad::Val tokens_to_grid(const ad::Val& tokens, int64_t gd, int64_t gh, int64_t gw);
ad::Val grid_to_tokens(const ad::Val& grid);

// Per-channel conditioning scale a block derives from the gated prompt.
ad::Val prompt_scale(const RegBlk& blk, const ad::Val& prompt);

std::pair<ad::Val, ad::Val> regblk(const FaConfig& cfg, const RegBlk& blk, const ad::Val& fd,
                                   const ad::Val& fr, const ad::Val& prompt);

// Streams (upsampled to volume resolution if needed) -> displacement field.
ad::Val fa_head(const Fa& fa, const ad::Val& fd, const ad::Val& fr);

// Full stack: stage-1 token grids plus the gated prompt -> (3, vol) field.
ad::Val align_field(const Fa& fa, const ad::Val& tok_d, const ad::Val& tok_r,
                    const ad::Val& prompt);

// Mean squared displacement error per voxel, summed over the 3 components.
ad::Val reg_loss(const ad::Val& phi_pred, const ad::Val& phi_gt);

} // namespace vf::align
