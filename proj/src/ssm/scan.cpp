#include "ssm/ssm.hpp"
#include <cmath>

namespace vf::ssm {

using namespace vf::ad;

namespace {
Val init_weight(int64_t rows, int64_t cols, Rng& rng, const char* name) {
    Tensor w({rows, cols});
    double k = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = rng.uniform(-k, k);
    return leaf(w, name);
}

Val init_bias(int64_t n, const char* name) { return leaf(Tensor({n}, 0.0), name); }
} // namespace

SSMParams make_ssm_params(int64_t M, int64_t S, Rng& rng) {
    SSMParams p;
    p.M = M;
    p.S = S;
    p.w_delta = init_weight(1, M, rng, "ssm.w_delta");
    p.b_delta = init_bias(1, "ssm.b_delta");
    // decay rates spread across (0.5, 0.9) so states forget at mixed speeds
    Tensor ld({S});
    for (int64_t i = 0; i < S; ++i) {
        double frac = S == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(S - 1);
        ld[i] = std::log(0.5 + 0.4 * frac);
    }
    p.log_decay = leaf(ld, "ssm.log_decay");
    p.w_b = init_weight(S * M, M, rng, "ssm.w_b");
    p.b_b = init_bias(S * M, "ssm.b_b");
    p.w_c = init_weight(M * S, M, rng, "ssm.w_c");
    p.b_c = init_bias(M * S, "ssm.b_c");
    return p;
}

std::pair<Val, Val> selective_scan(const Val& x, const SSMParams& p, const Val& h_inject) {
    VF_CHECK(x->value.ndim() == 2, "selective_scan expects (N,M) input");
    int64_t N = x->value.dim(0);
    VF_CHECK(x->value.dim(1) == p.M,
             "selective_scan: token dim " << x->value.dim(1) << " != M " << p.M);
    if (h_inject) {
        VF_CHECK(h_inject->value.numel() == p.S, "selective_scan: h has "
                                                     << h_inject->value.numel()
                                                     << " entries, state dim is " << p.S);
    }

    Val delta = softplus(linear(x, p.w_delta, p.b_delta)); // (N,1)
    Val dvec = reshape(delta, {N});
    Val abar = vexp(mul_scalar(outer(dvec, vexp(p.log_decay)), -1.0)); // (N,S) in (0,1)
    Val bbar = scale_rows(linear(x, p.w_b, p.b_b), dvec);              // (N,S*M)
    Val cmat = linear(x, p.w_c, p.b_c);                                // (N,M*S)

    Val flat = scan_flat(abar, bbar, cmat, x, h_inject); // (N*M + S)
    Val y = reshape(slice_flat(flat, 0, N * p.M), {N, p.M});
    Val h_final = slice_flat(flat, N * p.M, p.S);
    return {y, h_final};
}

} // namespace vf::ssm
