#include "simd/kernels.hpp"

namespace vf::simd {
namespace {

void s_axpy(int64_t n, double a, const double* x, double* y) {
    for (int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_axpy_s2load(int64_t n, double a, const double* x, double* y) {
    for (int64_t i = 0; i < n; ++i) y[i] += a * x[2 * i];
}

void s_axpy_s2store(int64_t n, double a, const double* x, double* y) {
    for (int64_t i = 0; i < n; ++i) y[2 * i] += a * x[i];
}

double s_dot(int64_t n, const double* x, const double* y) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double s_dot_s2(int64_t n, const double* x, const double* y) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += x[i] * y[2 * i];
    return s;
}

void s_add(int64_t n, const double* a, const double* b, double* out) {
    for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void s_mul(int64_t n, const double* a, const double* b, double* out) {
    for (int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void s_fmadd(int64_t n, const double* a, const double* b, double* acc) {
    for (int64_t i = 0; i < n; ++i) acc[i] += a[i] * b[i];
}

void s_scale(int64_t n, double a, double* x) {
    for (int64_t i = 0; i < n; ++i) x[i] *= a;
}

double s_sum(int64_t n, const double* x) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += x[i];
    return s;
}

void s_conv3_row(int64_t n, const double* s, double* d, double a0, double a1, double a2) {
    if (n == 1) {
        d[0] += a1 * s[0];
        return;
    }
    d[0] += a1 * s[0] + a2 * s[1];
    for (int64_t i = 1; i < n - 1; ++i) d[i] += a0 * s[i - 1] + a1 * s[i] + a2 * s[i + 1];
    d[n - 1] += a0 * s[n - 2] + a1 * s[n - 1];
}

void s_dot3(int64_t n, const double* g, const double* x, double* taps) {
    if (n == 1) {
        taps[1] += g[0] * x[0];
        return;
    }
    double t0 = 0.0, t1 = 0.0, t2 = 0.0;
    for (int64_t i = 1; i < n - 1; ++i) {
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

void s_conv9_row(int64_t n, const double* s0, const double* s1, const double* s2, double* d,
                 const double* w9) {
    if (s0 && s1 && s2 && n >= 2) {
        d[0] += w9[1] * s0[0] + w9[2] * s0[1] + w9[4] * s1[0] + w9[5] * s1[1] + w9[7] * s2[0] +
                w9[8] * s2[1];
        for (int64_t i = 1; i < n - 1; ++i)
            d[i] += w9[0] * s0[i - 1] + w9[1] * s0[i] + w9[2] * s0[i + 1] + w9[3] * s1[i - 1] +
                    w9[4] * s1[i] + w9[5] * s1[i + 1] + w9[6] * s2[i - 1] + w9[7] * s2[i] +
                    w9[8] * s2[i + 1];
        d[n - 1] += w9[0] * s0[n - 2] + w9[1] * s0[n - 1] + w9[3] * s1[n - 2] + w9[4] * s1[n - 1] +
                    w9[6] * s2[n - 2] + w9[7] * s2[n - 1];
        return;
    }
    if (s0) s_conv3_row(n, s0, d, w9[0], w9[1], w9[2]);
    if (s1) s_conv3_row(n, s1, d, w9[3], w9[4], w9[5]);
    if (s2) s_conv3_row(n, s2, d, w9[6], w9[7], w9[8]);
}

void s_dot9_row(int64_t n, const double* g, const double* s0, const double* s1, const double* s2,
                double* taps9) {
    if (s0) s_dot3(n, g, s0, taps9);
    if (s1) s_dot3(n, g, s1, taps9 + 3);
    if (s2) s_dot3(n, g, s2, taps9 + 6);
}

} // namespace

const Kernels& scalar_kernels() {
    static const Kernels k = {
        "scalar",
        s_axpy, s_axpy_s2load, s_axpy_s2store,
        s_dot, s_dot_s2,
        s_add, s_mul, s_fmadd, s_scale, s_sum,
        s_conv3_row, s_dot3, s_conv9_row, s_dot9_row,
    };
    return k;
}

} // namespace vf::simd
