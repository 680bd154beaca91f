#include <cmath>
#include <utility>
#include <vector>
#include "core/error.hpp"
#include "metrics/quality.hpp"

// Pixel-domain visual information fidelity over volumes. Four scales with
// Gaussian windows of size 17/9/5/3 (sigma = size/5); between scales the
// signal is smoothed with the incoming scale's window and decimated by 2 on
// every axis. Smoothing is zero-padded and renormalized by the in-bounds
// window mass, so small volumes keep valid statistics at every scale.

namespace vf::metrics {

namespace {

constexpr double kEps = 1e-10;   // variance floor
constexpr double kNoise = 2.0;   // HVS noise variance on the 8-bit range

struct Grid {
    int64_t d = 0, h = 0, w = 0;
    std::vector<double> v;
    double& at(int64_t z, int64_t y, int64_t x) { return v[static_cast<size_t>((z * h + y) * w + x)]; }
    double at(int64_t z, int64_t y, int64_t x) const {
        return v[static_cast<size_t>((z * h + y) * w + x)];
    }
};

std::vector<double> gauss1d(int64_t n) {
    std::vector<double> g(static_cast<size_t>(n));
    double sigma = static_cast<double>(n) / 5.0;
    double c = (static_cast<double>(n) - 1.0) / 2.0;
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        double dd = static_cast<double>(i) - c;
        g[static_cast<size_t>(i)] = std::exp(-dd * dd / (2.0 * sigma * sigma));
        s += g[static_cast<size_t>(i)];
    }
    for (double& x : g) x /= s;
    return g;
}

// The per-axis in-bounds masses multiply out to the full window mass, so
// separable renormalized passes equal one renormalized dense window.
Grid smooth_axis(const Grid& in, const std::vector<double>& g, int axis) {
    int64_t r = static_cast<int64_t>(g.size()) / 2;
    Grid out;
    out.d = in.d;
    out.h = in.h;
    out.w = in.w;
    out.v.assign(in.v.size(), 0.0);
    int64_t len = axis == 0 ? in.d : axis == 1 ? in.h : in.w;
    for (int64_t z = 0; z < in.d; ++z)
        for (int64_t y = 0; y < in.h; ++y)
            for (int64_t x = 0; x < in.w; ++x) {
                int64_t pos = axis == 0 ? z : axis == 1 ? y : x;
                double acc = 0.0, mass = 0.0;
                for (int64_t t = -r; t <= r; ++t) {
                    int64_t q = pos + t;
                    if (q < 0 || q >= len) continue;
                    double wgt = g[static_cast<size_t>(t + r)];
                    mass += wgt;
                    acc += wgt * (axis == 0 ? in.at(q, y, x)
                                  : axis == 1 ? in.at(z, q, x)
                                              : in.at(z, y, q));
                }
                out.at(z, y, x) = acc / mass;
            }
    return out;
}

Grid smooth(const Grid& in, const std::vector<double>& g) {
    return smooth_axis(smooth_axis(smooth_axis(in, g, 0), g, 1), g, 2);
}

Grid decimate2(const Grid& in) {
    Grid out;
    out.d = (in.d + 1) / 2;
    out.h = (in.h + 1) / 2;
    out.w = (in.w + 1) / 2;
    out.v.resize(static_cast<size_t>(out.d * out.h * out.w));
    for (int64_t z = 0; z < out.d; ++z)
        for (int64_t y = 0; y < out.h; ++y)
            for (int64_t x = 0; x < out.w; ++x) out.at(z, y, x) = in.at(2 * z, 2 * y, 2 * x);
    return out;
}

Grid mul_grids(const Grid& a, const Grid& b) {
    Grid out = a;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
    return out;
}

double vif_channel(Grid ref, Grid dist) {
    double num = 0.0, den = 0.0;
    for (int scale = 0; scale < 4; ++scale) {
        int64_t n = (int64_t(1) << (4 - scale)) + 1; // 17, 9, 5, 3
        std::vector<double> g = gauss1d(n);
        if (scale > 0) {
            ref = decimate2(smooth(ref, g));
            dist = decimate2(smooth(dist, g));
        }
        Grid mu1 = smooth(ref, g);
        Grid mu2 = smooth(dist, g);
        Grid rr = smooth(mul_grids(ref, ref), g);
        Grid dd = smooth(mul_grids(dist, dist), g);
        Grid rd = smooth(mul_grids(ref, dist), g);
        for (size_t i = 0; i < mu1.v.size(); ++i) {
            double s1 = std::max(0.0, rr.v[i] - mu1.v[i] * mu1.v[i]);
            double s2 = std::max(0.0, dd.v[i] - mu2.v[i] * mu2.v[i]);
            double s12 = rd.v[i] - mu1.v[i] * mu2.v[i];
            double gg = s12 / (s1 + kEps);
            double sv = s2 - gg * s12;
            if (gg < 0.0) {
                sv = s2;
                gg = 0.0;
            }
            if (sv < kEps) sv = kEps;
            num += std::log10(1.0 + gg * gg * s1 / (sv + kNoise));
            den += std::log10(1.0 + s1 / kNoise);
        }
    }
    if (den < 1e-12) return 1.0; // no information in the reference to lose
    return num / den;
}

} // namespace

double vif_pair(const Tensor& ref, const Tensor& dist) {
    VF_CHECK(ref.shape() == dist.shape(), "metric inputs must share a shape");
    VF_CHECK(ref.ndim() == 4, "visual information fidelity expects (C,D,H,W) volumes");
    int64_t C = ref.dim(0), D = ref.dim(1), H = ref.dim(2), W = ref.dim(3);
    double total = 0.0;
    for (int64_t c = 0; c < C; ++c) {
        Grid r, d;
        r.d = d.d = D;
        r.h = d.h = H;
        r.w = d.w = W;
        r.v.resize(static_cast<size_t>(D * H * W));
        d.v.resize(static_cast<size_t>(D * H * W));
        for (int64_t i = 0; i < D * H * W; ++i) {
            r.v[static_cast<size_t>(i)] = 255.0 * ref[c * D * H * W + i];
            d.v[static_cast<size_t>(i)] = 255.0 * dist[c * D * H * W + i];
        }
        total += vif_channel(std::move(r), std::move(d));
    }
    return total / static_cast<double>(C);
}

} // namespace vf::metrics
