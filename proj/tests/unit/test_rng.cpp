#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "stochcbf/rng.hpp"

using stochcbf::CounterRng;
using stochcbf::philox4x32_10;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswerZero) {
    const auto out = philox4x32_10({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out[0], 0x6627e8d5u);
    EXPECT_EQ(out[1], 0xe169c58du);
    EXPECT_EQ(out[2], 0xbc57ac4cu);
    EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
    const auto out = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(out[0], 0x408f276du);
    EXPECT_EQ(out[1], 0x41c83b0eu);
    EXPECT_EQ(out[2], 0xa20bc7c6u);
    EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
    const auto out =
        philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(out[0], 0xd16cfe09u);
    EXPECT_EQ(out[1], 0x94fdcceb);
    EXPECT_EQ(out[2], 0x5001e420u);
    EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(CounterRng, SameSeedAndStreamReproduce) {
    CounterRng a(42, 7), b(42, 7);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.normal(), b.normal());
}

TEST(CounterRng, StreamsDiffer) {
    CounterRng a(42, 0), b(42, 1), c(43, 0);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 100; ++i) {
        seen.insert(a.next_u64());
        seen.insert(b.next_u64());
        seen.insert(c.next_u64());
    }
    EXPECT_EQ(seen.size(), 300u);
}

TEST(CounterRng, UniformIsOpenInterval) {
    CounterRng rng(1);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    EXPECT_NEAR(sum / n, 0.5, 3e-3);
    EXPECT_LT(lo, 1e-4);
    EXPECT_GT(hi, 1.0 - 1e-4);
}

TEST(CounterRng, NormalMoments) {
    CounterRng rng(2024, 3);
    const int n = 1000000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s1 += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    EXPECT_NEAR(s1 / n, 0.0, 5e-3);
    EXPECT_NEAR(s2 / n, 1.0, 5e-3);
    EXPECT_NEAR(s4 / n, 3.0, 3e-2);
}
