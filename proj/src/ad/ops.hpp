#pragma once
#include <vector>
#include "ad/graph.hpp"

namespace vf::ad {

// ----- elementwise -----
Val add(const Val& a, const Val& b);
Val sub(const Val& a, const Val& b);
Val mul(const Val& a, const Val& b);
Val divv(const Val& a, const Val& b);
Val add_scalar(const Val& a, double c);
Val mul_scalar(const Val& a, double c);
Val mul_scalarval(const Val& a, const Val& s); // s has numel 1
Val neg(const Val& a);
Val vexp(const Val& a);
Val vlog(const Val& a);  // requires strictly positive input
Val vsqrt(const Val& a); // requires nonnegative input
Val vabs(const Val& a);
Val square(const Val& a);
Val sigmoid(const Val& a);
Val vtanh(const Val& a);
Val relu(const Val& a);
Val gelu(const Val& a); // exact erf form
Val silu(const Val& a);
Val softplus(const Val& a);
Val maximum(const Val& a, const Val& b);

// ----- reductions -----
Val sum_all(const Val& a);   // -> (1)
Val mean_all(const Val& a);  // -> (1)

// ----- shape / data movement -----
Val reshape(const Val& a, std::vector<int64_t> shape);
Val transpose2d(const Val& a);                       // (N,M) -> (M,N)
Val concat_rows(const std::vector<Val>& parts);      // (Ni,M) -> (sum N, M)
Val slice_rows(const Val& a, int64_t r0, int64_t r1);
Val gather_rows(const Val& a, std::vector<int64_t> idx);
Val gather_flat(const Val& a, std::vector<int64_t> idx); // -> (K)
Val slice_flat(const Val& a, int64_t offset, int64_t count);
Val concat_flat(const std::vector<Val>& parts);      // 1D concat
Val concat_ch(const Val& a, const Val& b);           // (Ca,D,H,W)+(Cb,..) -> (Ca+Cb,..)
Val slice_ch(const Val& a, int64_t c0, int64_t c1);

// ----- broadcasts -----
Val mul_channel(const Val& x, const Val& s); // x (C,D,H,W), s (C)
Val add_channel(const Val& x, const Val& b);
Val scale_rows(const Val& x, const Val& s);  // x (N,K), s (N)
Val outer(const Val& a, const Val& b);       // (N) x (S) -> (N,S)
Val add_rowvec(const Val& x, const Val& b);  // x (N,K), b (K)
Val mul_rowvec(const Val& x, const Val& b);  // x (N,K), b (K)

// ----- matrix -----
Val matmul(const Val& a, const Val& b);      // (m,k)(k,n)
Val matmul_bt(const Val& a, const Val& b);   // (m,k)(n,k) -> (m,n)
Val linear(const Val& x, const Val& w, const Val& b); // x (N,K), w (O,K), b (O) -> (N,O)
Val softmax_rows(const Val& a);
Val l2norm_rows(const Val& a, double eps = 1e-12);
Val mean_rows(const Val& a);                 // (N,M) -> (M)
Val cross_entropy_logits(const Val& logits, std::vector<int64_t> targets); // mean over rows
Val pick(const Val& a, int64_t flat_index);  // -> (1)

// ----- selective scan -----
// abar (N,S) diagonal entries of the per-token state matrix, bbar (N,S*M),
// cmat (N,M*S), x (N,M), h optional injection (S). Output is the flat
// concatenation [y (N*M) | h_final (S)]; split with slice_flat.
Val scan_flat(const Val& abar, const Val& bbar, const Val& cmat, const Val& x, const Val& h);

// ----- volume ops (conv3d.cpp) -----
Val conv3d(const Val& x, const Val& w, const Val& b, int stride = 1, int pad = -1); // pad -1 = same (stride 1) or k/2
Val conv3d_transpose2(const Val& x, const Val& w, const Val& b); // w (Ci,Co,2,2,2), stride 2
Val upsample2_trilinear(const Val& x);
Val avgpool(const Val& x, int factor);
Val warp(const Val& v, const Val& phi);
Val spatial_gradient(const Val& v);          // (C,..) -> (3C,..)
Val patch_rows(const Val& x, int Q);         // (C,D,H,W) -> (N, C*Q^3)
Val rows_to_patches(const Val& x, int Q, int64_t C, int64_t D, int64_t H, int64_t W);

// Shared helper for op construction.
Val make_op(std::vector<Val> inputs, Tensor value, std::function<void(Node&)> backprop,
            const char* name);

} // namespace vf::ad
