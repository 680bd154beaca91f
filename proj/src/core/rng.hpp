#pragma once
#include <cstdint>
#include <random>
#include <vector>

namespace vf {

// Deterministic random source. Gaussian samples come from Box-Muller rather
// than std::normal_distribution so streams are identical across standard
// library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t raw() { return gen_(); }

    // uniform in [0,1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal();
    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    // integer in [0, n)
    int64_t integer(int64_t n);

    int64_t poisson(double mean);

    // k distinct values from [0, n), order deterministic
    std::vector<int64_t> sample_without_replacement(int64_t n, int64_t k);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
            int64_t j = integer(i + 1);
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
        }
    }

    // Independent substream derived from this one's seed material.
    Rng fork(uint64_t salt) {
        uint64_t s = gen_();
        return Rng(s ^ (salt * 0x9E3779B97F4A7C15ull));
    }

private:
    std::mt19937_64 gen_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

} // namespace vf
