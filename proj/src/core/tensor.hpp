#pragma once
#include <vector>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include "core/error.hpp"

namespace vf {

// Dense row-major tensor of doubles. All model math runs in double so that
// finite-difference gradient checks can be tight.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<size_t>(compute_numel(shape_)), 0.0);
    }
    Tensor(std::vector<int64_t> shape, double fill) : shape_(std::move(shape)) {
        data_.assign(static_cast<size_t>(compute_numel(shape_)), fill);
    }
    Tensor(std::vector<int64_t> shape, std::vector<double> values)
        : shape_(std::move(shape)), data_(std::move(values)) {
        VF_CHECK(static_cast<int64_t>(data_.size()) == compute_numel(shape_),
                 "value count " << data_.size() << " does not match shape");
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    int ndim() const { return static_cast<int>(shape_.size()); }
    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t dim(int i) const {
        VF_CHECK(i >= 0 && i < ndim(), "dim index " << i << " out of range");
        return shape_[static_cast<size_t>(i)];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    double& at(int64_t i0, int64_t i1) { return data_[static_cast<size_t>(i0 * shape_[1] + i1)]; }
    double at(int64_t i0, int64_t i1) const { return data_[static_cast<size_t>(i0 * shape_[1] + i1)]; }
    double& at(int64_t i0, int64_t i1, int64_t i2) {
        return data_[static_cast<size_t>((i0 * shape_[1] + i1) * shape_[2] + i2)];
    }
    double at(int64_t i0, int64_t i1, int64_t i2) const {
        return data_[static_cast<size_t>((i0 * shape_[1] + i1) * shape_[2] + i2)];
    }
    double& at(int64_t i0, int64_t i1, int64_t i2, int64_t i3) {
        return data_[static_cast<size_t>(((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3)];
    }
    double at(int64_t i0, int64_t i1, int64_t i2, int64_t i3) const {
        return data_[static_cast<size_t>(((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3)];
    }
    double& at(int64_t i0, int64_t i1, int64_t i2, int64_t i3, int64_t i4) {
        return data_[static_cast<size_t>(
            (((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3) * shape_[4] + i4)];
    }
    double at(int64_t i0, int64_t i1, int64_t i2, int64_t i3, int64_t i4) const {
        return data_[static_cast<size_t>(
            (((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3) * shape_[4] + i4)];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    Tensor reshaped(std::vector<int64_t> shape) const {
        Tensor out(std::move(shape), data_);
        return out;
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    static int64_t compute_numel(const std::vector<int64_t>& shape) {
        int64_t n = 1;
        for (int64_t d : shape) {
            VF_CHECK(d >= 0, "negative dimension");
            n *= d;
        }
        return n;
    }

private:
    std::vector<int64_t> shape_;
    std::vector<double> data_;
};

// Small helpers used across modules; all elementwise with shape checks.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scaled(const Tensor& a, double s);
double sum(const Tensor& a);
double mean(const Tensor& a);
double min_value(const Tensor& a);
double max_value(const Tensor& a);
double dot_flat(const Tensor& a, const Tensor& b);
double rms(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);
double rel_err(double got, double want);

} // namespace vf
