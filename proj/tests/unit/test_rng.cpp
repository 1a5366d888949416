#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dmpk/rng.hpp"

using namespace dmpk;

// Known-answer vectors of the Random123 reference implementation.
TEST(Philox, KnownAnswerZero) {
  const auto r = philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(r, (PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
}

TEST(Philox, KnownAnswerOnes) {
  const auto r = philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff});
  EXPECT_EQ(r, (PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
}

TEST(Philox, KnownAnswerPi) {
  const auto r = philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0});
  EXPECT_EQ(r, (PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(SplitMix, KnownValue) { EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL); }

TEST(PathKeys, DistinctAndDeterministic) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> keys;
  for (std::uint64_t p = 0; p < 1000; ++p) {
    const auto k = derive_path_key(42, p);
    EXPECT_EQ(k, derive_path_key(42, p));
    keys.insert({k[0], k[1]});
  }
  EXPECT_EQ(keys.size(), 1000u);
  EXPECT_NE(derive_path_key(1, 0), derive_path_key(2, 0));
}

TEST(Uniform, OpenInterval) {
  EXPECT_GT(uniform_open(0, 0), 0.0);
  EXPECT_LT(uniform_open(0xffffffff, 0xffffffff), 1.0);
  EXPECT_EQ(uniform_open(0x80000000, 0), 0.5 + 0x1.0p-53);
}

TEST(BoxMuller, FiniteAndMoments) {
  double sum = 0, sq = 0;
  const int n = 100000;
  for (int i = 0; i < n / 2; ++i) {
    const auto z = box_muller(philox4x32_10({static_cast<std::uint32_t>(i), 0, 0, 0}, {7, 9}));
    for (double v : z) {
      ASSERT_TRUE(std::isfinite(v));
      sum += v;
      sq += v * v;
    }
  }
  EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}
