#include "core/tensor.hpp"
#include <cmath>
#include <algorithm>

namespace vf {

Tensor add(const Tensor& a, const Tensor& b) {
    VF_CHECK(a.same_shape(b), "add: shape mismatch");
    Tensor out(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    VF_CHECK(a.same_shape(b), "sub: shape mismatch");
    Tensor out(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] - b[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    VF_CHECK(a.same_shape(b), "mul: shape mismatch");
    Tensor out(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
    return out;
}

Tensor scaled(const Tensor& a, double s) {
    Tensor out(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] * s;
    return out;
}

double sum(const Tensor& a) {
    double s = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) s += a[i];
    return s;
}

double mean(const Tensor& a) {
    VF_CHECK(a.numel() > 0, "mean of empty tensor");
    return sum(a) / static_cast<double>(a.numel());
}

double min_value(const Tensor& a) {
    VF_CHECK(a.numel() > 0, "min of empty tensor");
    double m = a[0];
    for (int64_t i = 1; i < a.numel(); ++i) m = std::min(m, a[i]);
    return m;
}

double max_value(const Tensor& a) {
    VF_CHECK(a.numel() > 0, "max of empty tensor");
    double m = a[0];
    for (int64_t i = 1; i < a.numel(); ++i) m = std::max(m, a[i]);
    return m;
}

double dot_flat(const Tensor& a, const Tensor& b) {
    VF_CHECK(a.numel() == b.numel(), "dot_flat: size mismatch");
    double s = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
    return s;
}

double rms(const Tensor& a) {
    VF_CHECK(a.numel() > 0, "rms of empty tensor");
    double s = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) s += a[i] * a[i];
    return std::sqrt(s / static_cast<double>(a.numel()));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    VF_CHECK(a.numel() == b.numel(), "max_abs_diff: size mismatch");
    double m = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

double rel_err(double got, double want) {
    double denom = std::max(std::fabs(want), 1e-12);
    return std::fabs(got - want) / denom;
}

} // namespace vf
