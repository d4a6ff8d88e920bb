#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tempotrack/ops.hpp"
#include "tempotrack/tensor.hpp"

using namespace tempotrack;

TEST(Tensor, ShapeDataInvariant) {
    Tensor t({2, 3});
    EXPECT_EQ(t.size(), 6u);
    EXPECT_THROW(Tensor({2, 3}, {1.0f, 2.0f}), DimensionError);
    EXPECT_THROW(Tensor({0, 3}), DimensionError);
    EXPECT_THROW(Tensor({-1}), DimensionError);
}

TEST(Tensor, Indexing) {
    Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
    EXPECT_EQ(t.at(0, 0), 0.0f);
    EXPECT_EQ(t.at(0, 2), 2.0f);
    EXPECT_EQ(t.at(1, 0), 3.0f);
    Tensor u({2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
    EXPECT_EQ(u.at(1, 0, 1), 5.0f);
}

TEST(Tokens, MapTokenLayout) {
    // token p = y*W + x carries the channel column of spatial position (y, x)
    Tensor map({2, 2, 3});
    for (int c = 0; c < 2; ++c) {
        for (int y = 0; y < 2; ++y) {
            for (int x = 0; x < 3; ++x) map.at(c, y, x) = static_cast<float>(100 * c + 10 * y + x);
        }
    }
    const Tensor tok = to_tokens(map);
    ASSERT_EQ(tok.shape(), (std::vector<int>{6, 2}));
    EXPECT_EQ(tok.at(0, 0), 0.0f);
    EXPECT_EQ(tok.at(0, 1), 100.0f);
    EXPECT_EQ(tok.at(5, 0), 12.0f);
    EXPECT_EQ(tok.at(5, 1), 112.0f);
}

TEST(Tokens, RoundTripBitExact) {
    std::mt19937 rng(7);
    for (int it = 0; it < 25; ++it) {
        const int c = 1 + static_cast<int>(rng() % 8);
        const int h = 1 + static_cast<int>(rng() % 6);
        const int w = 1 + static_cast<int>(rng() % 6);
        const Tensor map = oracle::random_tensor(rng, {c, h, w});
        EXPECT_EQ(to_map(to_tokens(map), h, w), map);
    }
}

TEST(Matmul, MatchesOracle) {
    std::mt19937 rng(11);
    for (int it = 0; it < 50; ++it) {
        const int t = 1 + static_cast<int>(rng() % 6);
        const int k = 1 + static_cast<int>(rng() % 6);
        const int m = 1 + static_cast<int>(rng() % 6);
        const Tensor a = oracle::random_tensor(rng, {t, k});
        const Tensor b = oracle::random_tensor(rng, {k, m});
        EXPECT_LE(oracle::max_abs_diff(matmul(a, b), oracle::matmul(a, b)), 1e-5f);
    }
    EXPECT_THROW(matmul(Tensor({2, 3}), Tensor({4, 2})), DimensionError);
}

TEST(Concat, AxisSemantics) {
    const Tensor a({2, 2}, {1, 2, 3, 4});
    const Tensor b({1, 2}, {5, 6});
    const Tensor r0 = concat(a, b, 0);
    EXPECT_EQ(r0, Tensor({3, 2}, {1, 2, 3, 4, 5, 6}));

    const Tensor c({2, 1}, {7, 8});
    const Tensor r1 = concat(a, c, 1);
    EXPECT_EQ(r1, Tensor({2, 3}, {1, 2, 7, 3, 4, 8}));

    EXPECT_THROW(concat(a, c, 0), DimensionError);
}

TEST(Elementwise, AddMulScale) {
    std::mt19937 rng(3);
    const Tensor a = oracle::random_tensor(rng, {3, 4});
    const Tensor b = oracle::random_tensor(rng, {3, 4});
    const Tensor s = add(a, b);
    const Tensor p = mul(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_FLOAT_EQ(s.data()[i], a.data()[i] + b.data()[i]);
        EXPECT_FLOAT_EQ(p.data()[i], a.data()[i] * b.data()[i]);
    }
    EXPECT_THROW(add(a, Tensor({4, 3})), DimensionError);

    const Tensor sc = scale(a, 2.0f);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_FLOAT_EQ(sc.data()[i], 2.0f * a.data()[i]);
}

TEST(Elementwise, ScaleChannelsBroadcast) {
    const Tensor tok({2, 3}, {1, 2, 3, 4, 5, 6});
    const Tensor f({3}, {2, 0, -1});
    EXPECT_EQ(scale_channels(tok, f), Tensor({2, 3}, {2, 0, -3, 8, 0, -6}));
}

TEST(Elementwise, MeanOverRows) {
    const Tensor tok({2, 2}, {1, 10, 3, 30});
    const Tensor m = mean_over_rows(tok);
    EXPECT_FLOAT_EQ(m.at(0), 2.0f);
    EXPECT_FLOAT_EQ(m.at(1), 20.0f);
}

TEST(Determinism, BitIdenticalRepeats) {
    std::mt19937 rng(19);
    const Tensor a = oracle::random_tensor(rng, {4, 4, 4});
    const Tensor w = oracle::random_tensor(rng, {2, 4, 3, 3});
    const Tensor bias = oracle::random_tensor(rng, {2});
    const Tensor r1 = conv2d(a, w, bias, 1, 1);
    const Tensor r2 = conv2d(a, w, bias, 1, 1);
    EXPECT_EQ(r1, r2);

    const Tensor t = oracle::random_tensor(rng, {5, 6});
    EXPECT_EQ(softmax(t), softmax(t));
}

TEST(Finite, CheckFiniteRejectsNan) {
    Tensor t({2}, {1.0f, std::numeric_limits<float>::quiet_NaN()});
    EXPECT_THROW(check_finite(t, "test"), NumericError);
    Tensor ok({2}, {1.0f, 2.0f});
    EXPECT_NO_THROW(check_finite(ok, "test"));
}
