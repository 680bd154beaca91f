#pragma once
#include <cstdint>

namespace vf::simd {

// Primitive dense kernels everything compute-heavy is built from (conv3d,
// the state-space scan, GEMM, reductions). Two implementations exist: a
// scalar reference and an AVX2+FMA variant compiled in its own TU. The
// active table is picked once at startup from cpu features, overridable via
// the VOXFUSE_KERNELS environment variable ("scalar" or "avx2") and
// force_backend() for tests.
//
// Strided variants exist for stride-2 convolutions:
//   axpy_s2load  : y[i]  += a * x[2i]
//   axpy_s2store : y[2i] += a * x[i]
//   dot_s2       : sum_i x[i] * y[2i]
//
// Fused three-tap rows carry the unit-stride 3x3x3 convolution hot path:
//   conv3_row : d[i] += a0*s[i-1] + a1*s[i] + a2*s[i+1], out-of-range taps
//               dropped (same-width rows, pad 1)
//   dot3      : taps[0] += sum_{i>=1} g[i]*x[i-1], taps[1] += sum g[i]*x[i],
//               taps[2] += sum_{i<n-1} g[i]*x[i+1] in one pass
//
// The nine-tap forms take three source rows (a y-neighbourhood; pass nullptr
// for rows beyond the border) and apply w9[3*r+t] as row r's tap t:
//   conv9_row : d[i] += sum_r sum_t w9[3r+t] * s_r[i+t-1]
//   dot9_row  : taps9[3r+t] += sum_i g[i] * s_r[i+t-1]
struct Kernels {
    const char* name;
    void (*axpy)(int64_t n, double a, const double* x, double* y);
    void (*axpy_s2load)(int64_t n, double a, const double* x, double* y);
    void (*axpy_s2store)(int64_t n, double a, const double* x, double* y);
    double (*dot)(int64_t n, const double* x, const double* y);
    double (*dot_s2)(int64_t n, const double* x, const double* y);
    void (*add)(int64_t n, const double* a, const double* b, double* out);
    void (*mul)(int64_t n, const double* a, const double* b, double* out);
    void (*fmadd)(int64_t n, const double* a, const double* b, double* acc);
    void (*scale)(int64_t n, double a, double* x);
    double (*sum)(int64_t n, const double* x);
    void (*conv3_row)(int64_t n, const double* s, double* d, double a0, double a1, double a2);
    void (*dot3)(int64_t n, const double* g, const double* x, double* taps);
    void (*conv9_row)(int64_t n, const double* s0, const double* s1, const double* s2, double* d,
                      const double* w9);
    void (*dot9_row)(int64_t n, const double* g, const double* s0, const double* s1,
                     const double* s2, double* taps9);
};

const Kernels& scalar_kernels();
const Kernels& avx2_kernels();

bool avx2_supported();

// Currently selected table.
const Kernels& active();

// Force a backend by name ("scalar" / "avx2"); throws on unknown name or if
// the backend is not supported on this cpu. Passing nullptr re-runs the
// default selection (cpu features + environment override).
void force_backend(const char* name);

} // namespace vf::simd
