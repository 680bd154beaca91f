#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <cmath>
#include "prompt/dapl.hpp"
#include "support/gradcheck.hpp"

using namespace vf;
using namespace vf::ad;
using namespace vf::dapl;
using test::gradcheck;
using test::random_tensor;

namespace {
DaplConfig tiny_cfg() {
    DaplConfig cfg;
    cfg.enc_channels = 4;
    cfg.M = 16;
    cfg.S = 6;
    cfg.Q = 2;
    cfg.L = 4;
    cfg.n_classes = 3;
    return cfg;
}
} // namespace

TEST_CASE("shared encoder keeps spatial dims and shares weights across modalities") {
    Rng rng(1);
    Dapl d = make_dapl(tiny_cfg(), rng);
    auto va = leaf(random_tensor({1, 8, 8, 8}, rng), "va");
    auto vb = leaf(random_tensor({1, 8, 8, 8}, rng), "vb");
    Val fa = shared_encode(d, va);
    CHECK(fa->value.shape() == std::vector<int64_t>{4, 8, 8, 8});

    // both modality paths feed gradient into the one set of encoder weights
    Val loss = add(mean_all(square(shared_encode(d, va))), mean_all(square(shared_encode(d, vb))));
    backward(loss);
    CHECK(d.enc_w1->has_grad());
    CHECK(rms(d.enc_w1->grad) > 0.0);
}

TEST_CASE("shared encoder gradient matches finite differences") {
    Rng rng(2);
    DaplConfig cfg = tiny_cfg();
    cfg.enc_channels = 2;
    Dapl d = make_dapl(cfg, rng);
    auto v = leaf(random_tensor({1, 4, 4, 4}, rng), "v");
    std::vector<Val> leaves = {v, d.enc_w1, d.enc_b1, d.enc_w2, d.enc_b2};
    CHECK(gradcheck([&] { return mean_all(square(shared_encode(d, v))); }, leaves) < 1e-5);
}

TEST_CASE("bidirectional ordering matches the printed formula") {
    CHECK(bid_order(4) == std::vector<int64_t>{0, 3, 2, 1});
    CHECK(bid_order(5) == std::vector<int64_t>{0, 4, 3, 2, 1});
    CHECK(bid_order(6) == std::vector<int64_t>{0, 1, 5, 4, 3, 2});
    CHECK(bid_order(7) == std::vector<int64_t>{0, 1, 6, 5, 4, 3, 2});

    // large N: prefix 1..255, then 512 down to 256 (1-based)
    std::vector<int64_t> big = bid_order(512);
    CHECK(static_cast<int64_t>(big.size()) == 512);
    for (int64_t i = 0; i < 255; ++i) CHECK(big[static_cast<size_t>(i)] == i);
    for (int64_t j = 0; j < 257; ++j) CHECK(big[static_cast<size_t>(255 + j)] == 511 - j);

    // always a permutation
    for (int64_t n : {1, 2, 3, 9, 100}) {
        std::vector<int64_t> idx = bid_order(n);
        std::vector<bool> seen(static_cast<size_t>(n), false);
        for (int64_t i : idx) seen[static_cast<size_t>(i)] = true;
        for (bool b : seen) CHECK(b);
    }
}

TEST_CASE("directional sequences: shapes and the reversal involution") {
    Rng rng(3);
    Dapl d = make_dapl(tiny_cfg(), rng);
    auto vd = constant(random_tensor({1, 8, 8, 8}, rng));
    auto vr = constant(random_tensor({1, 8, 8, 8}, rng));
    Directional s = directional_sequences(d, shared_encode(d, vd), shared_encode(d, vr));
    int64_t N = 64;
    CHECK(s.f_for->value.shape() == std::vector<int64_t>{N, 16});
    CHECK(s.f_bac->value.shape() == std::vector<int64_t>{N, 16});
    CHECK(s.f_bid->value.shape() == std::vector<int64_t>{N, 16});

    // reversing twice restores the forward sequence
    std::vector<int64_t> rev(static_cast<size_t>(N));
    for (int64_t i = 0; i < N; ++i) rev[static_cast<size_t>(i)] = N - 1 - i;
    Val back = gather_rows(s.f_bac, rev);
    CHECK(max_abs_diff(back->value, s.f_for->value) == 0.0);
}

TEST_CASE("hidden summaries: identical constant tokens collapse the three orderings") {
    Rng rng(4);
    Dapl d = make_dapl(tiny_cfg(), rng);
    Tensor row = random_tensor({1, 16}, rng);
    Tensor seq({12, 16});
    for (int64_t i = 0; i < 12; ++i)
        for (int64_t m = 0; m < 16; ++m) seq.at(i, m) = row.at(0, m);
    Directional s{constant(seq), constant(seq), constant(seq)};
    Hidden h = hidden_summaries(d, s);
    CHECK(h.h1->value.shape() == std::vector<int64_t>{6});
    CHECK(max_abs_diff(h.h1->value, h.h2->value) == 0.0);
    CHECK(max_abs_diff(h.h1->value, h.h3->value) == 0.0);
}

TEST_CASE("hidden summaries differ across orderings on random input") {
    Rng rng(5);
    Dapl d = make_dapl(tiny_cfg(), rng);
    auto vd = constant(random_tensor({1, 8, 8, 8}, rng));
    auto vr = constant(random_tensor({1, 8, 8, 8}, rng));
    Directional s = directional_sequences(d, shared_encode(d, vd), shared_encode(d, vr));
    Hidden h = hidden_summaries(d, s);
    CHECK(max_abs_diff(h.h1->value, h.h2->value) > 1e-6);
}

TEST_CASE("classifier produces a proper distribution and passes gradient checks") {
    Rng rng(6);
    Dapl d = make_dapl(tiny_cfg(), rng);
    auto h1 = leaf(random_tensor({6}, rng), "h1");
    auto h2 = leaf(random_tensor({6}, rng), "h2");
    auto h3 = leaf(random_tensor({6}, rng), "h3");
    Hidden h{h1, h2, h3};
    Val p = classify(d, h);
    CHECK(p->value.numel() == 3);
    double s = 0.0;
    for (int64_t i = 0; i < 3; ++i) {
        CHECK(p->value[i] >= 0.0);
        s += p->value[i];
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));

    std::vector<Val> leaves = {h1, h2, h3, d.cls_w1, d.cls_b1, d.cls_w2, d.cls_b2};
    CHECK(gradcheck([&] { return ce_from_probs(classify(d, h), 1); }, leaves) < 1e-5);
}

TEST_CASE("cross entropy from probabilities") {
    Val onehot = constant(Tensor({3}, {0.0, 1.0, 0.0}));
    CHECK(ce_from_probs(onehot, 1)->value[0] == doctest::Approx(0.0));
    Val uniform = constant(Tensor({3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}));
    CHECK(ce_from_probs(uniform, 0)->value[0] == doctest::Approx(std::log(3.0)).epsilon(1e-9));
    Rng rng(7);
    for (int t = 0; t < 10; ++t) {
        Tensor raw = random_tensor({1, 3}, rng);
        Val p = reshape(softmax_rows(constant(raw)), {3});
        CHECK(ce_from_probs(p, t % 3)->value[0] >= 0.0);
    }
    CHECK_THROWS_AS(ce_from_probs(uniform, 5), Error);
}

TEST_CASE("prompt gating: forced gates and gradient reach") {
    Rng rng(8);
    Dapl d = make_dapl(tiny_cfg(), rng);
    int64_t rows = 3 * 4; // n_classes * L

    Val ones = constant(Tensor({rows, 16}, 1.0));
    CHECK(max_abs_diff(apply_gate(d, ones)->value, d.prompt->value) == 0.0);
    Val zeros = constant(Tensor({rows, 16}, 0.0));
    CHECK(max_value(apply_gate(d, zeros)->value) == 0.0);
    CHECK(min_value(apply_gate(d, zeros)->value) == 0.0);

    Hidden h{leaf(random_tensor({6}, rng)), leaf(random_tensor({6}, rng)),
             leaf(random_tensor({6}, rng))};
    Val sel = select_prompt(d, h);
    CHECK(sel->value.shape() == std::vector<int64_t>{rows, 16});
    // bounded gate keeps the selected prompt inside the bank's envelope
    for (int64_t i = 0; i < sel->value.numel(); ++i)
        CHECK(std::fabs(sel->value[i]) <= std::fabs(d.prompt->value[i]));

    backward(mean_all(square(sel)));
    CHECK(rms(d.prompt->grad) > 0.0);
    CHECK(rms(d.gate_w1->grad) > 0.0);
    CHECK(rms(d.gate_w2->grad) > 0.0);
}

TEST_CASE("end-to-end prompt pipeline gradient check") {
    Rng rng(9);
    DaplConfig cfg = tiny_cfg();
    cfg.enc_channels = 2;
    cfg.M = 8;
    cfg.S = 4;
    cfg.L = 2;
    Dapl d = make_dapl(cfg, rng);
    auto vd = leaf(random_tensor({1, 4, 4, 4}, rng), "vd");
    auto vr = leaf(random_tensor({1, 4, 4, 4}, rng), "vr");

    auto build = [&] {
        Directional s = directional_sequences(d, shared_encode(d, vd), shared_encode(d, vr));
        Hidden h = hidden_summaries(d, s);
        Val ce = ce_from_probs(classify(d, h), 2);
        return add(ce, mean_all(square(select_prompt(d, h))));
    };
    std::vector<Val> leaves = {vd, vr, d.mix_w, d.embed_w, d.prompt, d.gate_w2, d.cls_w1};
    CHECK(gradcheck(build, leaves, 1e-5, 30) < 1e-4);
}
