#include "core/rng.hpp"
#include "core/error.hpp"
#include <cmath>

namespace vf {

double Rng::normal() {
    if (have_cached_) {
        have_cached_ = false;
        return cached_;
    }
    // Box-Muller; reject u1 == 0 to keep log finite.
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
}

int64_t Rng::integer(int64_t n) {
    VF_CHECK(n > 0, "integer bound must be positive");
    // Rejection sampling keeps the draw unbiased and fully deterministic.
    uint64_t un = static_cast<uint64_t>(n);
    uint64_t limit = UINT64_MAX - (UINT64_MAX % un);
    uint64_t v = 0;
    do {
        v = gen_();
    } while (v >= limit);
    return static_cast<int64_t>(v % un);
}

int64_t Rng::poisson(double mean) {
    VF_CHECK(mean >= 0.0, "poisson mean must be nonnegative");
    if (mean == 0.0) return 0;
    if (mean < 30.0) {
        // Knuth's product method.
        double l = std::exp(-mean);
        int64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > l);
        return k - 1;
    }
    // Normal approximation for large means.
    double v = std::round(mean + std::sqrt(mean) * normal());
    return v < 0.0 ? 0 : static_cast<int64_t>(v);
}

std::vector<int64_t> Rng::sample_without_replacement(int64_t n, int64_t k) {
    VF_CHECK(k >= 0 && k <= n, "sample_without_replacement: need 0 <= k <= n, got k=" << k << " n=" << n);
    std::vector<int64_t> pool(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
    std::vector<int64_t> out(static_cast<size_t>(k));
    for (int64_t i = 0; i < k; ++i) {
        int64_t j = i + integer(n - i);
        std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
        out[static_cast<size_t>(i)] = pool[static_cast<size_t>(i)];
    }
    return out;
}

} // namespace vf
