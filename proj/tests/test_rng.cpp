#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "champ/rng.hpp"

using champ::Rng;
using champ::derive_seed;
using champ::splitmix64;

TEST(Splitmix, AdvancesStateDeterministically) {
    std::uint64_t a = 42, b = 42;
    EXPECT_EQ(splitmix64(a), splitmix64(b));
    EXPECT_EQ(a, b);
    EXPECT_NE(splitmix64(a), splitmix64(b) + 1);
}

TEST(DeriveSeed, DistinguishesStreamsAndCounters) {
    const auto base = derive_seed(7, "client", 0, 0);
    EXPECT_EQ(base, derive_seed(7, "client", 0, 0));
    EXPECT_NE(base, derive_seed(7, "client", 0, 1));
    EXPECT_NE(base, derive_seed(7, "client", 1, 0));
    EXPECT_NE(base, derive_seed(7, "partition", 0, 0));
    EXPECT_NE(base, derive_seed(8, "client", 0, 0));
}

TEST(Rng, SameSeedSameStream) {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.below(1000), b.below(1000));
}

TEST(Rng, BelowStaysInRange) {
    Rng rng(5);
    for (int i = 0; i < 10000; ++i) EXPECT_LT(rng.below(7), 7u);
}

TEST(Rng, UniformIntInclusiveBounds) {
    Rng rng(9);
    bool lo = false, hi = false;
    for (int i = 0; i < 10000; ++i) {
        const int v = rng.uniform_int(2, 5);
        ASSERT_GE(v, 2);
        ASSERT_LE(v, 5);
        lo |= v == 2;
        hi |= v == 5;
    }
    EXPECT_TRUE(lo);
    EXPECT_TRUE(hi);
}

TEST(Rng, UniformInUnitInterval) {
    Rng rng(11);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Rng, NormalHasPlausibleMoments) {
    Rng rng(13);
    double sum = 0.0, sq = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.02);
    EXPECT_NEAR(sq / n, 1.0, 0.03);
}

TEST(Rng, ShuffleIsPermutation) {
    Rng rng(17);
    std::vector<int> v(100);
    std::iota(v.begin(), v.end(), 0);
    auto shuffled = v;
    rng.shuffle(shuffled);
    EXPECT_NE(shuffled, v);  // astronomically unlikely to be identity
    std::sort(shuffled.begin(), shuffled.end());
    EXPECT_EQ(shuffled, v);
}
