#include "ssm/ssm.hpp"
#include <cmath>

namespace vf::ssm {

using namespace vf::ad;

MambaBlock make_mamba_block(int64_t M, int64_t S, Rng& rng) {
    MambaBlock blk;
    blk.M = M;
    blk.S = S;
    auto w = [&](const char* name) {
        Tensor t({M, M});
        double k = 1.0 / std::sqrt(static_cast<double>(M));
        for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-k, k);
        return leaf(t, name);
    };
    blk.w_a = w("mamba.w_a");
    blk.b_a = leaf(Tensor({M}, 0.0), "mamba.b_a");
    blk.w_z = w("mamba.w_z");
    blk.b_z = leaf(Tensor({M}, 0.0), "mamba.b_z");
    blk.w_o = w("mamba.w_o");
    blk.b_o = leaf(Tensor({M}, 0.0), "mamba.b_o");
    blk.ssm = make_ssm_params(M, S, rng);
    return blk;
}

std::pair<Val, Val> mamba_block(const Val& x, const MambaBlock& blk) {
    VF_CHECK(x->value.ndim() == 2 && x->value.dim(1) == blk.M,
             "mamba_block expects (N," << blk.M << ") input");
    Val a = linear(x, blk.w_a, blk.b_a);
    Val z = linear(x, blk.w_z, blk.b_z);
    auto [scan_y, h_final] = selective_scan(a, blk.ssm, {});
    Val gated = mul(scan_y, silu(z));
    Val out = add(linear(gated, blk.w_o, blk.b_o), x);
    return {out, h_final};
}

Val spatial_mamba_block(const Val& x, const Val& h_j, const MambaBlock& blk) {
    VF_CHECK(x->value.ndim() == 2 && x->value.dim(1) == blk.M,
             "spatial_mamba_block expects (N," << blk.M << ") input");
    VF_CHECK(h_j, "spatial_mamba_block needs a hidden summary");
    Val a = linear(x, blk.w_a, blk.b_a);
    Val z = linear(x, blk.w_z, blk.b_z);
    auto [scan_y, h_final] = selective_scan(a, blk.ssm, h_j);
    (void)h_final;
    Val gated = mul(scan_y, silu(z));
    return add(linear(gated, blk.w_o, blk.b_o), x);
}

} // namespace vf::ssm
