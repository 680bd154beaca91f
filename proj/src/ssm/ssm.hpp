#pragma once
#include <utility>
#include "ad/ops.hpp"
#include "core/rng.hpp"

namespace vf::ssm {

// Learnable maps that turn each token into its per-step scan parameters:
// step size delta = softplus(linear(x)), decay abar = exp(-delta*exp(log_decay)),
// input map bbar = delta * linear(x), readout cmat = linear(x) (undiscretized).
struct SSMParams {
    int64_t M = 0;
    int64_t S = 0;
    ad::Val w_delta, b_delta; // (1,M), (1)
    ad::Val log_decay;        // (S)
    ad::Val w_b, b_b;         // (S*M, M), (S*M)
    ad::Val w_c, b_c;         // (M*S, M), (M*S)

    std::vector<ad::Val> params() const { return {w_delta, b_delta, log_decay, w_b, b_b, w_c, b_c}; }
};

SSMParams make_ssm_params(int64_t M, int64_t S, Rng& rng);

// x: (N,M); optional h onto which the per-step decay is applied at readout.
// Returns (y (N,M), h_final (S)).
std::pair<ad::Val, ad::Val> selective_scan(const ad::Val& x, const SSMParams& p,
                                           const ad::Val& h_inject = {});

// Gated selective-scan block: scan branch times silu gate, output projection,
// residual connection. h_final of the scan is exposed.
struct MambaBlock {
    int64_t M = 0;
    int64_t S = 0;
    ad::Val w_a, b_a; // scan-branch input projection
    ad::Val w_z, b_z; // gate branch
    ad::Val w_o, b_o; // output projection
    SSMParams ssm;

    std::vector<ad::Val> params() const {
        std::vector<ad::Val> out = {w_a, b_a, w_z, b_z, w_o, b_o};
        for (auto& p : ssm.params()) out.push_back(p);
        return out;
    }
};

MambaBlock make_mamba_block(int64_t M, int64_t S, Rng& rng);

std::pair<ad::Val, ad::Val> mamba_block(const ad::Val& x, const MambaBlock& blk);

// Same block with a hidden summary injected into the scan readout.
ad::Val spatial_mamba_block(const ad::Val& x, const ad::Val& h_j, const MambaBlock& blk);

} // namespace vf::ssm
