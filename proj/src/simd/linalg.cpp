#include "simd/linalg.hpp"
#include "simd/kernels.hpp"

namespace vf::simd {

void gemm(int64_t m, int64_t k, int64_t n, const double* A, const double* B, double* C) {
    const Kernels& K = active();
    for (int64_t i = 0; i < m; ++i) {
        double* crow = C + i * n;
        const double* arow = A + i * k;
        for (int64_t l = 0; l < k; ++l) {
            double a = arow[l];
            if (a != 0.0) K.axpy(n, a, B + l * n, crow);
        }
    }
}

void gemm_at(int64_t m, int64_t k, int64_t n, const double* A, const double* B, double* C) {
    const Kernels& K = active();
    for (int64_t l = 0; l < k; ++l) {
        const double* arow = A + l * m;
        const double* brow = B + l * n;
        for (int64_t i = 0; i < m; ++i) {
            double a = arow[i];
            if (a != 0.0) K.axpy(n, a, brow, C + i * n);
        }
    }
}

void gemm_bt(int64_t m, int64_t k, int64_t n, const double* A, const double* B, double* C) {
    const Kernels& K = active();
    for (int64_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        double* crow = C + i * n;
        for (int64_t j = 0; j < n; ++j) crow[j] += K.dot(k, arow, B + j * k);
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    VF_CHECK(a.ndim() == 2 && b.ndim() == 2 && a.dim(1) == b.dim(0), "matmul shape mismatch");
    Tensor c({a.dim(0), b.dim(1)});
    gemm(a.dim(0), a.dim(1), b.dim(1), a.data(), b.data(), c.data());
    return c;
}

Tensor matmul_at(const Tensor& a, const Tensor& b) {
    VF_CHECK(a.ndim() == 2 && b.ndim() == 2 && a.dim(0) == b.dim(0), "matmul_at shape mismatch");
    Tensor c({a.dim(1), b.dim(1)});
    gemm_at(a.dim(1), a.dim(0), b.dim(1), a.data(), b.data(), c.data());
    return c;
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
    VF_CHECK(a.ndim() == 2 && b.ndim() == 2 && a.dim(1) == b.dim(1), "matmul_bt shape mismatch");
    Tensor c({a.dim(0), b.dim(0)});
    gemm_bt(a.dim(0), a.dim(1), b.dim(0), a.data(), b.data(), c.data());
    return c;
}

} // namespace vf::simd
