#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <vector>
#include <cmath>
#include "simd/kernels.hpp"
#include "simd/linalg.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

using namespace vf;

namespace {

std::vector<double> rand_vec(int64_t n, Rng& rng) {
    std::vector<double> v(static_cast<size_t>(n));
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

} // namespace

TEST_CASE("scalar and avx2 kernels agree") {
    if (!simd::avx2_supported()) {
        MESSAGE("avx2 not available; skipping equivalence");
        return;
    }
    const auto& S = simd::scalar_kernels();
    const auto& A = simd::avx2_kernels();
    Rng rng(42);
    for (int64_t n : {0L, 1L, 3L, 4L, 7L, 8L, 15L, 64L, 257L, 1000L}) {
        auto x = rand_vec(n, rng);
        auto y0 = rand_vec(n, rng);
        double a = rng.uniform(-1.5, 1.5);

        auto y1 = y0, y2 = y0;
        S.axpy(n, a, x.data(), y1.data());
        A.axpy(n, a, x.data(), y2.data());
        for (int64_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-13));

        CHECK(S.dot(n, x.data(), y0.data()) ==
              doctest::Approx(A.dot(n, x.data(), y0.data())).epsilon(1e-12));
        CHECK(S.sum(n, x.data()) == doctest::Approx(A.sum(n, x.data())).epsilon(1e-12));

        auto o1 = rand_vec(n, rng);
        auto o2 = o1;
        S.add(n, x.data(), y0.data(), o1.data());
        A.add(n, x.data(), y0.data(), o2.data());
        CHECK(o1 == o2);
        S.mul(n, x.data(), y0.data(), o1.data());
        A.mul(n, x.data(), y0.data(), o2.data());
        CHECK(o1 == o2);

        auto acc1 = rand_vec(n, rng);
        auto acc2 = acc1;
        S.fmadd(n, x.data(), y0.data(), acc1.data());
        A.fmadd(n, x.data(), y0.data(), acc2.data());
        for (int64_t i = 0; i < n; ++i) CHECK(acc1[i] == doctest::Approx(acc2[i]).epsilon(1e-13));

        auto s1 = x, s2 = x;
        S.scale(n, a, s1.data());
        A.scale(n, a, s2.data());
        CHECK(s1 == s2);

        // strided variants
        auto wide = rand_vec(2 * n + 1, rng);
        auto t1 = rand_vec(n, rng);
        auto t2 = t1;
        S.axpy_s2load(n, a, wide.data(), t1.data());
        A.axpy_s2load(n, a, wide.data(), t2.data());
        for (int64_t i = 0; i < n; ++i) CHECK(t1[i] == doctest::Approx(t2[i]).epsilon(1e-13));

        auto w1 = wide, w2 = wide;
        S.axpy_s2store(n, a, x.data(), w1.data());
        A.axpy_s2store(n, a, x.data(), w2.data());
        for (size_t i = 0; i < wide.size(); ++i)
            CHECK(w1[i] == doctest::Approx(w2[i]).epsilon(1e-13));

        CHECK(S.dot_s2(n, x.data(), wide.data()) ==
              doctest::Approx(A.dot_s2(n, x.data(), wide.data())).epsilon(1e-12));
    }
}

TEST_CASE("fused three-tap rows match the written-out taps") {
    const auto& S = simd::scalar_kernels();
    Rng rng(19);
    std::vector<const simd::Kernels*> tables = {&S};
    if (simd::avx2_supported()) tables.push_back(&simd::avx2_kernels());
    for (int64_t n : {1L, 2L, 3L, 4L, 5L, 8L, 9L, 31L, 32L, 100L}) {
        auto src = rand_vec(n, rng);
        auto g = rand_vec(n, rng);
        double a0 = rng.uniform(-1.5, 1.5), a1 = rng.uniform(-1.5, 1.5),
               a2 = rng.uniform(-1.5, 1.5);

        // d[i] += a0*s[i-1] + a1*s[i] + a2*s[i+1] with out-of-range taps dropped
        auto base = rand_vec(n, rng);
        auto want = base;
        for (int64_t i = 0; i < n; ++i) {
            if (i > 0) want[i] += a0 * src[i - 1];
            want[i] += a1 * src[i];
            if (i < n - 1) want[i] += a2 * src[i + 1];
        }
        double want_taps[3] = {0.0, 0.0, 0.0};
        for (int64_t i = 0; i < n; ++i) {
            if (i > 0) want_taps[0] += g[i] * src[i - 1];
            want_taps[1] += g[i] * src[i];
            if (i < n - 1) want_taps[2] += g[i] * src[i + 1];
        }

        for (const auto* K : tables) {
            auto d = base;
            K->conv3_row(n, src.data(), d.data(), a0, a1, a2);
            for (int64_t i = 0; i < n; ++i) CHECK(d[i] == doctest::Approx(want[i]).epsilon(1e-13));

            double taps[3] = {0.5, -0.25, 1.5}; // accumulates, does not overwrite
            K->dot3(n, g.data(), src.data(), taps);
            CHECK(taps[0] == doctest::Approx(0.5 + want_taps[0]).epsilon(1e-12));
            CHECK(taps[1] == doctest::Approx(-0.25 + want_taps[1]).epsilon(1e-12));
            CHECK(taps[2] == doctest::Approx(1.5 + want_taps[2]).epsilon(1e-12));
        }
    }
}

TEST_CASE("nine-tap row kernels match per-row three-tap composition") {
    const auto& S = simd::scalar_kernels();
    Rng rng(23);
    std::vector<const simd::Kernels*> tables = {&S};
    if (simd::avx2_supported()) tables.push_back(&simd::avx2_kernels());
    for (int64_t n : {1L, 2L, 3L, 5L, 8L, 9L, 13L, 32L, 33L, 100L}) {
        auto r0 = rand_vec(n, rng), r1 = rand_vec(n, rng), r2 = rand_vec(n, rng);
        auto g = rand_vec(n, rng);
        auto w9 = rand_vec(9, rng);
        // every border combination of missing rows
        for (int mask = 1; mask < 8; ++mask) {
            const double* s0 = (mask & 1) ? r0.data() : nullptr;
            const double* s1 = (mask & 2) ? r1.data() : nullptr;
            const double* s2 = (mask & 4) ? r2.data() : nullptr;

            auto want = rand_vec(n, rng);
            auto base = want;
            if (s0) S.conv3_row(n, s0, want.data(), w9[0], w9[1], w9[2]);
            if (s1) S.conv3_row(n, s1, want.data(), w9[3], w9[4], w9[5]);
            if (s2) S.conv3_row(n, s2, want.data(), w9[6], w9[7], w9[8]);
            double wt[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
            if (s0) S.dot3(n, g.data(), s0, wt);
            if (s1) S.dot3(n, g.data(), s1, wt + 3);
            if (s2) S.dot3(n, g.data(), s2, wt + 6);

            for (const auto* K : tables) {
                auto d = base;
                K->conv9_row(n, s0, s1, s2, d.data(), w9.data());
                for (int64_t i = 0; i < n; ++i)
                    CHECK(d[i] == doctest::Approx(want[i]).epsilon(1e-12));
                double taps[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
                K->dot9_row(n, g.data(), s0, s1, s2, taps);
                for (int t = 0; t < 9; ++t) CHECK(taps[t] == doctest::Approx(wt[t]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("kernel backend selection") {
    simd::force_backend("scalar");
    CHECK(std::string(simd::active().name) == "scalar");
    if (simd::avx2_supported()) {
        simd::force_backend("avx2");
        CHECK(std::string(simd::active().name) == "avx2");
    }
    CHECK_THROWS(simd::force_backend("sse9"));
    simd::force_backend(nullptr);
}

TEST_CASE("gemm variants against naive loops") {
    Rng rng(7);
    int64_t m = 5, k = 9, n = 4;
    Tensor A({m, k}), B({k, n}), Bt({n, k}), At({k, m});
    for (int64_t i = 0; i < A.numel(); ++i) A[i] = rng.normal();
    for (int64_t i = 0; i < B.numel(); ++i) B[i] = rng.normal();
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < k; ++j) Bt.at(i, j) = B.at(j, i);
    for (int64_t i = 0; i < k; ++i)
        for (int64_t j = 0; j < m; ++j) At.at(i, j) = A.at(j, i);

    Tensor ref({m, n});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (int64_t l = 0; l < k; ++l) s += A.at(i, l) * B.at(l, j);
            ref.at(i, j) = s;
        }

    CHECK(max_abs_diff(simd::matmul(A, B), ref) < 1e-12);
    CHECK(max_abs_diff(simd::matmul_at(At, B), ref) < 1e-12);
    CHECK(max_abs_diff(simd::matmul_bt(A, Bt), ref) < 1e-12);
}

TEST_CASE("rng determinism and distributions") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.uniform() == b.uniform());
        CHECK(a.normal() == b.normal());
    }
    Rng c(5);
    double acc = 0.0;
    int64_t cnt = 20000;
    for (int64_t i = 0; i < cnt; ++i) acc += c.normal();
    CHECK(std::fabs(acc / static_cast<double>(cnt)) < 0.05);

    // poisson mean check, both regimes
    Rng d(9);
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < 5000; ++i) m1 += static_cast<double>(d.poisson(4.0));
    for (int i = 0; i < 5000; ++i) m2 += static_cast<double>(d.poisson(80.0));
    CHECK(m1 / 5000.0 == doctest::Approx(4.0).epsilon(0.05));
    CHECK(m2 / 5000.0 == doctest::Approx(80.0).epsilon(0.05));

    auto sample = d.sample_without_replacement(10, 10);
    std::vector<bool> seen(10, false);
    for (int64_t s : sample) {
        CHECK(!seen[static_cast<size_t>(s)]);
        seen[static_cast<size_t>(s)] = true;
    }
}
