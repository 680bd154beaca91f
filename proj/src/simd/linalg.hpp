#pragma once
#include "core/tensor.hpp"

namespace vf::simd {

// Row-major GEMM helpers built on the kernel primitives. All accumulate into
// zero-initialised outputs.

// C(m,n) = A(m,k) * B(k,n)
void gemm(int64_t m, int64_t k, int64_t n, const double* A, const double* B, double* C);
// C(m,n) = A(k,m)^T * B(k,n)
void gemm_at(int64_t m, int64_t k, int64_t n, const double* A, const double* B, double* C);
// C(m,n) = A(m,k) * B(n,k)^T
void gemm_bt(int64_t m, int64_t k, int64_t n, const double* A, const double* B, double* C);

Tensor matmul(const Tensor& a, const Tensor& b);     // (m,k)x(k,n)
Tensor matmul_at(const Tensor& a, const Tensor& b);  // (k,m)x(k,n) -> (m,n)
Tensor matmul_bt(const Tensor& a, const Tensor& b);  // (m,k)x(n,k) -> (m,n)

} // namespace vf::simd
