// Compiled with -mavx2 -mfma (see CMakeLists). Only reached after the
// dispatcher has confirmed cpu support.
#include "simd/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace vf::simd {
namespace {

void a_axpy(int64_t n, double a, const double* x, double* y) {
    __m256d va = _mm256_set1_pd(a);
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        __m256d y1 = _mm256_loadu_pd(y + i + 4);
        y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
        y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
        _mm256_storeu_pd(y + i, y0);
        _mm256_storeu_pd(y + i + 4, y1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
        _mm256_storeu_pd(y + i, y0);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void a_axpy_s2load(int64_t n, double a, const double* x, double* y) {
    __m256d va = _mm256_set1_pd(a);
    int64_t i = 0;
    for (; i + 4 <= n; i += 4) {
        // gather even-indexed lanes of x
        __m256d lo = _mm256_loadu_pd(x + 2 * i);       // x0 x1 x2 x3
        __m256d hi = _mm256_loadu_pd(x + 2 * i + 4);   // x4 x5 x6 x7
        __m256d ev = _mm256_unpacklo_pd(lo, hi);       // x0 x4 x2 x6
        ev = _mm256_permute4x64_pd(ev, 0xD8);          // x0 x2 x4 x6
        __m256d y0 = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, ev, y0));
    }
    for (; i < n; ++i) y[i] += a * x[2 * i];
}

void a_axpy_s2store(int64_t n, double a, const double* x, double* y) {
    // scattered stores do not vectorize profitably with AVX2; keep scalar
    // body but let fma contract the math the same way.
    for (int64_t i = 0; i < n; ++i) y[2 * i] += a * x[i];
}

double a_dot(int64_t n, const double* x, const double* y) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc0 = _mm256_add_pd(acc0, acc1);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc0);
    double s = (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double a_dot_s2(int64_t n, const double* x, const double* y) {
    __m256d acc = _mm256_setzero_pd();
    int64_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d lo = _mm256_loadu_pd(y + 2 * i);
        __m256d hi = _mm256_loadu_pd(y + 2 * i + 4);
        __m256d ev = _mm256_unpacklo_pd(lo, hi);
        ev = _mm256_permute4x64_pd(ev, 0xD8);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), ev, acc);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double s = (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
    for (; i < n; ++i) s += x[i] * y[2 * i];
    return s;
}

void a_add(int64_t n, const double* a, const double* b, double* out) {
    int64_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void a_mul(int64_t n, const double* a, const double* b, double* out) {
    int64_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void a_fmadd(int64_t n, const double* a, const double* b, double* acc) {
    int64_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(acc + i);
        v = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), v);
        _mm256_storeu_pd(acc + i, v);
    }
    for (; i < n; ++i) acc[i] += a[i] * b[i];
}

void a_scale(int64_t n, double a, double* x) {
    __m256d va = _mm256_set1_pd(a);
    int64_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

double a_sum(int64_t n, const double* x) {
    __m256d acc = _mm256_setzero_pd();
    int64_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double s = (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
    for (; i < n; ++i) s += x[i];
    return s;
}

void a_conv3_row(int64_t n, const double* s, double* d, double a0, double a1, double a2) {
    if (n == 1) {
        d[0] += a1 * s[0];
        return;
    }
    d[0] += a1 * s[0] + a2 * s[1];
    __m256d v0 = _mm256_set1_pd(a0);
    __m256d v1 = _mm256_set1_pd(a1);
    __m256d v2 = _mm256_set1_pd(a2);
    int64_t i = 1;
    for (; i + 4 <= n - 1; i += 4) {
        __m256d acc = _mm256_loadu_pd(d + i);
        acc = _mm256_fmadd_pd(v0, _mm256_loadu_pd(s + i - 1), acc);
        acc = _mm256_fmadd_pd(v1, _mm256_loadu_pd(s + i), acc);
        acc = _mm256_fmadd_pd(v2, _mm256_loadu_pd(s + i + 1), acc);
        _mm256_storeu_pd(d + i, acc);
    }
    for (; i < n - 1; ++i) d[i] += a0 * s[i - 1] + a1 * s[i] + a2 * s[i + 1];
    d[n - 1] += a0 * s[n - 2] + a1 * s[n - 1];
}

void a_dot3(int64_t n, const double* g, const double* x, double* taps) {
    if (n == 1) {
        taps[1] += g[0] * x[0];
        return;
    }
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    int64_t i = 1;
    for (; i + 4 <= n - 1; i += 4) {
        __m256d gv = _mm256_loadu_pd(g + i);
        acc0 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(x + i - 1), acc0);
        acc1 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(x + i), acc1);
        acc2 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(x + i + 1), acc2);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc0);
    double t0 = (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
    _mm256_store_pd(lanes, acc1);
    double t1 = (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
    _mm256_store_pd(lanes, acc2);
    double t2 = (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
    for (; i < n - 1; ++i) {
        double gv = g[i];
        t0 += gv * x[i - 1];
        t1 += gv * x[i];
        t2 += gv * x[i + 1];
    }
    t0 += g[n - 1] * x[n - 2];
    t1 += g[0] * x[0] + g[n - 1] * x[n - 1];
    t2 += g[0] * x[1];
    taps[0] += t0;
    taps[1] += t1;
    taps[2] += t2;
}

void a_conv9_row(int64_t n, const double* s0, const double* s1, const double* s2, double* d,
                 const double* w9) {
    if (!(s0 && s1 && s2) || n < 2) {
        if (s0) a_conv3_row(n, s0, d, w9[0], w9[1], w9[2]);
        if (s1) a_conv3_row(n, s1, d, w9[3], w9[4], w9[5]);
        if (s2) a_conv3_row(n, s2, d, w9[6], w9[7], w9[8]);
        return;
    }
    d[0] += w9[1] * s0[0] + w9[2] * s0[1] + w9[4] * s1[0] + w9[5] * s1[1] + w9[7] * s2[0] +
            w9[8] * s2[1];
    __m256d w00 = _mm256_set1_pd(w9[0]), w01 = _mm256_set1_pd(w9[1]), w02 = _mm256_set1_pd(w9[2]);
    __m256d w10 = _mm256_set1_pd(w9[3]), w11 = _mm256_set1_pd(w9[4]), w12 = _mm256_set1_pd(w9[5]);
    __m256d w20 = _mm256_set1_pd(w9[6]), w21 = _mm256_set1_pd(w9[7]), w22 = _mm256_set1_pd(w9[8]);
    int64_t i = 1;
    for (; i + 8 <= n - 1; i += 8) {
        __m256d a = _mm256_loadu_pd(d + i);
        __m256d b = _mm256_loadu_pd(d + i + 4);
        a = _mm256_fmadd_pd(w00, _mm256_loadu_pd(s0 + i - 1), a);
        b = _mm256_fmadd_pd(w00, _mm256_loadu_pd(s0 + i + 3), b);
        a = _mm256_fmadd_pd(w01, _mm256_loadu_pd(s0 + i), a);
        b = _mm256_fmadd_pd(w01, _mm256_loadu_pd(s0 + i + 4), b);
        a = _mm256_fmadd_pd(w02, _mm256_loadu_pd(s0 + i + 1), a);
        b = _mm256_fmadd_pd(w02, _mm256_loadu_pd(s0 + i + 5), b);
        a = _mm256_fmadd_pd(w10, _mm256_loadu_pd(s1 + i - 1), a);
        b = _mm256_fmadd_pd(w10, _mm256_loadu_pd(s1 + i + 3), b);
        a = _mm256_fmadd_pd(w11, _mm256_loadu_pd(s1 + i), a);
        b = _mm256_fmadd_pd(w11, _mm256_loadu_pd(s1 + i + 4), b);
        a = _mm256_fmadd_pd(w12, _mm256_loadu_pd(s1 + i + 1), a);
        b = _mm256_fmadd_pd(w12, _mm256_loadu_pd(s1 + i + 5), b);
        a = _mm256_fmadd_pd(w20, _mm256_loadu_pd(s2 + i - 1), a);
        b = _mm256_fmadd_pd(w20, _mm256_loadu_pd(s2 + i + 3), b);
        a = _mm256_fmadd_pd(w21, _mm256_loadu_pd(s2 + i), a);
        b = _mm256_fmadd_pd(w21, _mm256_loadu_pd(s2 + i + 4), b);
        a = _mm256_fmadd_pd(w22, _mm256_loadu_pd(s2 + i + 1), a);
        b = _mm256_fmadd_pd(w22, _mm256_loadu_pd(s2 + i + 5), b);
        _mm256_storeu_pd(d + i, a);
        _mm256_storeu_pd(d + i + 4, b);
    }
    for (; i + 4 <= n - 1; i += 4) {
        __m256d a = _mm256_loadu_pd(d + i);
        a = _mm256_fmadd_pd(w00, _mm256_loadu_pd(s0 + i - 1), a);
        a = _mm256_fmadd_pd(w01, _mm256_loadu_pd(s0 + i), a);
        a = _mm256_fmadd_pd(w02, _mm256_loadu_pd(s0 + i + 1), a);
        a = _mm256_fmadd_pd(w10, _mm256_loadu_pd(s1 + i - 1), a);
        a = _mm256_fmadd_pd(w11, _mm256_loadu_pd(s1 + i), a);
        a = _mm256_fmadd_pd(w12, _mm256_loadu_pd(s1 + i + 1), a);
        a = _mm256_fmadd_pd(w20, _mm256_loadu_pd(s2 + i - 1), a);
        a = _mm256_fmadd_pd(w21, _mm256_loadu_pd(s2 + i), a);
        a = _mm256_fmadd_pd(w22, _mm256_loadu_pd(s2 + i + 1), a);
        _mm256_storeu_pd(d + i, a);
    }
    for (; i < n - 1; ++i)
        d[i] += w9[0] * s0[i - 1] + w9[1] * s0[i] + w9[2] * s0[i + 1] + w9[3] * s1[i - 1] +
                w9[4] * s1[i] + w9[5] * s1[i + 1] + w9[6] * s2[i - 1] + w9[7] * s2[i] +
                w9[8] * s2[i + 1];
    d[n - 1] += w9[0] * s0[n - 2] + w9[1] * s0[n - 1] + w9[3] * s1[n - 2] + w9[4] * s1[n - 1] +
                w9[6] * s2[n - 2] + w9[7] * s2[n - 1];
}

void a_dot9_row(int64_t n, const double* g, const double* s0, const double* s1, const double* s2,
                double* taps9) {
    if (!(s0 && s1 && s2) || n < 2) {
        if (s0) a_dot3(n, g, s0, taps9);
        if (s1) a_dot3(n, g, s1, taps9 + 3);
        if (s2) a_dot3(n, g, s2, taps9 + 6);
        return;
    }
    __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd(), c02 = _mm256_setzero_pd();
    __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd(), c12 = _mm256_setzero_pd();
    __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd(), c22 = _mm256_setzero_pd();
    int64_t i = 1;
    for (; i + 4 <= n - 1; i += 4) {
        __m256d gv = _mm256_loadu_pd(g + i);
        c00 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(s0 + i - 1), c00);
        c01 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(s0 + i), c01);
        c02 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(s0 + i + 1), c02);
        c10 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(s1 + i - 1), c10);
        c11 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(s1 + i), c11);
        c12 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(s1 + i + 1), c12);
        c20 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(s2 + i - 1), c20);
        c21 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(s2 + i), c21);
        c22 = _mm256_fmadd_pd(gv, _mm256_loadu_pd(s2 + i + 1), c22);
    }
    alignas(32) double lanes[4];
    double t[9];
    __m256d accs[9] = {c00, c01, c02, c10, c11, c12, c20, c21, c22};
    for (int k = 0; k < 9; ++k) {
        _mm256_store_pd(lanes, accs[k]);
        t[k] = (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
    }
    const double* rows[3] = {s0, s1, s2};
    for (; i < n - 1; ++i) {
        double gv = g[i];
        for (int r = 0; r < 3; ++r) {
            t[3 * r + 0] += gv * rows[r][i - 1];
            t[3 * r + 1] += gv * rows[r][i];
            t[3 * r + 2] += gv * rows[r][i + 1];
        }
    }
    for (int r = 0; r < 3; ++r) {
        t[3 * r + 0] += g[n - 1] * rows[r][n - 2];
        t[3 * r + 1] += g[0] * rows[r][0] + g[n - 1] * rows[r][n - 1];
        t[3 * r + 2] += g[0] * rows[r][1];
    }
    for (int k = 0; k < 9; ++k) taps9[k] += t[k];
}

} // namespace

const Kernels& avx2_kernels() {
    static const Kernels k = {
        "avx2",
        a_axpy, a_axpy_s2load, a_axpy_s2store,
        a_dot, a_dot_s2,
        a_add, a_mul, a_fmadd, a_scale, a_sum,
        a_conv3_row, a_dot3, a_conv9_row, a_dot9_row,
    };
    return k;
}

} // namespace vf::simd

#else

namespace vf::simd {
// Built without AVX2 support; dispatcher will never select this table.
const Kernels& avx2_kernels() { return scalar_kernels(); }
} // namespace vf::simd

#endif
