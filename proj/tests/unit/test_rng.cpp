#include <gtest/gtest.h>

#include <set>

#include "bhin/rng.hpp"

using bhin::Rng;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, SplitDependsOnlyOnSeedAndLabel) {
  Rng a(7);
  const Rng fresh(7);
  for (int i = 0; i < 10; ++i) a.next_u64();
  Rng x = a.split("walks", 3), y = fresh.split("walks", 3);
  EXPECT_EQ(x.next_u64(), y.next_u64());
  EXPECT_NE(fresh.split("walks", 3).next_u64(), fresh.split("walks", 4).next_u64());
  EXPECT_NE(fresh.split("walks").next_u64(), fresh.split("negatives").next_u64());
}

TEST(Rng, UniformInUnitInterval) {
  Rng rng(1);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(Rng, BelowCoversRangeEvenly) {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto x = rng.below(7);
    ASSERT_LT(x, 7u);
    ++counts[x];
  }
  for (int c : counts) EXPECT_NEAR(c / 70000.0, 1.0 / 7, 0.01);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng rng(5);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  rng.shuffle(v);
  EXPECT_EQ(std::set<int>(v.begin(), v.end()).size(), 10u);
}

TEST(Rng, NormalMoments) {
  Rng rng(11);
  double s = 0, s2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}
