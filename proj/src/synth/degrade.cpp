#include "synth/synth.hpp"
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>
#include "core/rng.hpp"

namespace vf::synth {

int degradation_index(Degradation k) { return static_cast<int>(k); }

Degradation degradation_from_index(int idx) {
    VF_CHECK(idx >= 0 && idx <= 2, "degradation index " << idx << " out of range");
    return static_cast<Degradation>(idx);
}

Degradation degradation_from_name(const std::string& name) {
    if (name == "motion") return Degradation::motion;
    if (name == "streak_noise") return Degradation::streak_noise;
    if (name == "lowdose") return Degradation::lowdose;
    VF_FAIL("unknown degradation kind '" << name << "'");
}

const char* degradation_name(Degradation k) {
    switch (k) {
        case Degradation::motion: return "motion";
        case Degradation::streak_noise: return "streak_noise";
        case Degradation::lowdose: return "lowdose";
    }
    VF_FAIL("unknown degradation kind");
}

namespace {

using cplx = std::complex<double>;

// Scramble the phase of a random subset of frequency bins along one axis.
// Direct O(n^2) transform per line; volumes are small enough that this is
// cheap and it keeps the dependency surface at zero.
Tensor motion_artifact(const Tensor& v, double severity, Rng& rng) {
    int64_t D = v.dim(1), H = v.dim(2), W = v.dim(3);
    int axis = static_cast<int>(rng.integer(3));
    const int64_t dims[3] = {D, H, W};
    const int64_t strides[3] = {H * W, W, 1};
    int64_t n = dims[axis];

    int64_t nsel = std::llround(severity * static_cast<double>(n));
    std::vector<int64_t> bins = rng.sample_without_replacement(n, nsel);
    // per-bin displacement mimics the subject moving between acquisitions;
    // magnitude is kept away from zero so the artifact strength tracks severity
    std::vector<cplx> factor(static_cast<size_t>(n), cplx(1.0, 0.0));
    double max_shift = 7.0 * severity;
    for (int64_t k : bins) {
        double shift = rng.uniform(0.5 * max_shift, max_shift) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        int64_t ks = k <= n / 2 ? k : k - n;
        double phase = -2.0 * 3.141592653589793 * static_cast<double>(ks) * shift /
                       static_cast<double>(n);
        factor[static_cast<size_t>(k)] = std::polar(1.0, phase);
    }

    // precomputed twiddle table: w[j*k mod n] = exp(-2*pi*i*j*k/n)
    std::vector<cplx> tw(static_cast<size_t>(n));
    for (int64_t j = 0; j < n; ++j)
        tw[static_cast<size_t>(j)] =
            std::polar(1.0, -2.0 * 3.141592653589793 * static_cast<double>(j) /
                               static_cast<double>(n));

    Tensor out(v.shape());
    std::vector<cplx> line(static_cast<size_t>(n)), freq(static_cast<size_t>(n));
    int64_t stride = strides[axis];
    for (int64_t z = 0; z < D; ++z)
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x = 0; x < W; ++x) {
                int64_t idx[3] = {z, y, x};
                if (idx[axis] != 0) continue; // one pass per line
                int64_t base = (z * H + y) * W + x;
                for (int64_t j = 0; j < n; ++j)
                    line[static_cast<size_t>(j)] = cplx(v[base + j * stride], 0.0);
                for (int64_t k = 0; k < n; ++k) {
                    cplx acc(0.0, 0.0);
                    for (int64_t j = 0; j < n; ++j)
                        acc += line[static_cast<size_t>(j)] * tw[static_cast<size_t>((j * k) % n)];
                    freq[static_cast<size_t>(k)] = acc * factor[static_cast<size_t>(k)];
                }
                for (int64_t j = 0; j < n; ++j) {
                    cplx acc(0.0, 0.0);
                    for (int64_t k = 0; k < n; ++k)
                        acc += freq[static_cast<size_t>(k)] *
                               std::conj(tw[static_cast<size_t>((j * k) % n)]);
                    out[base + j * stride] = std::abs(acc) / static_cast<double>(n);
                }
            }
    return out;
}

Tensor streak_artifact(const Tensor& v, double severity, Rng& rng) {
    int64_t D = v.dim(1), H = v.dim(2), W = v.dim(3);
    Tensor out = v;
    int count = static_cast<int>(std::llround(20.0 * severity));
    for (int s = 0; s < count; ++s) {
        double c[3] = {rng.uniform(0.0, static_cast<double>(D - 1)),
                       rng.uniform(0.0, static_cast<double>(H - 1)),
                       rng.uniform(0.0, static_cast<double>(W - 1))};
        double d[3] = {rng.normal(), rng.normal(), rng.normal()};
        double nrm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        if (nrm < 1e-9) { d[0] = 1.0; d[1] = d[2] = 0.0; nrm = 1.0; }
        for (double& e : d) e /= nrm;
        double amp = rng.uniform(0.15, 0.35) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        double wdt = rng.uniform(0.6, 1.2);
        double inv2w2 = 1.0 / (2.0 * wdt * wdt);
        for (int64_t z = 0; z < D; ++z)
            for (int64_t y = 0; y < H; ++y)
                for (int64_t x = 0; x < W; ++x) {
                    double p[3] = {static_cast<double>(z) - c[0], static_cast<double>(y) - c[1],
                                   static_cast<double>(x) - c[2]};
                    double along = p[0] * d[0] + p[1] * d[1] + p[2] * d[2];
                    double perp2 = 0.0;
                    for (int i = 0; i < 3; ++i) {
                        double r = p[i] - along * d[i];
                        perp2 += r * r;
                    }
                    out.at(0, z, y, x) += amp * std::exp(-perp2 * inv2w2);
                }
    }
    double sigma = 0.05 * severity;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += sigma * rng.normal();
    return out;
}

// Photon-starved acquisition: Poisson resampling at a count budget that
// shrinks as severity grows, plus electronic noise. The noise floor scales
// with severity so the severity->0 limit genuinely approaches the input.
Tensor lowdose_artifact(const Tensor& v, double severity, Rng& rng) {
    double lam = 100.0 / severity;
    Tensor out(v.shape());
    for (int64_t i = 0; i < v.numel(); ++i)
        out[i] = static_cast<double>(rng.poisson(std::max(0.0, v[i]) * lam)) / lam;
    double sigma = 0.02 * severity;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += sigma * rng.normal();
    return out;
}

} // namespace

Tensor degrade(const Tensor& v, Degradation kind, double severity, uint64_t seed) {
    VF_CHECK(v.ndim() == 4 && v.dim(0) == 1, "degrade expects a single-channel volume");
    VF_CHECK(severity > 0.0 && severity <= 1.0, "severity " << severity << " outside (0,1]");
    Rng rng(seed ^ 0x646567726164ULL);
    Tensor out;
    switch (kind) {
        case Degradation::motion: out = motion_artifact(v, severity, rng); break;
        case Degradation::streak_noise: out = streak_artifact(v, severity, rng); break;
        case Degradation::lowdose: out = lowdose_artifact(v, severity, rng); break;
        default: VF_FAIL("unknown degradation kind");
    }
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::clamp(out[i], 0.0, 1.0);
    return out;
}

} // namespace vf::synth
