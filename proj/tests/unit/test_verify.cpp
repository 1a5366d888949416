#include <gtest/gtest.h>

#include "dmpk/verify.hpp"

using namespace dmpk;

namespace {

void expect_all_pass(const std::vector<CheckResult>& checks) {
  EXPECT_FALSE(checks.empty());
  for (const auto& c : checks) {
    EXPECT_TRUE(c.pass()) << c.name << ": " << c.failures << "/" << c.trials << " failures, worst "
                          << c.worst_residual;
    EXPECT_GT(c.trials, 0u) << c.name;
  }
  EXPECT_TRUE(all_pass(checks));
}

}  // namespace

TEST(VerifySuites, CheckResultLogic) {
  CheckResult c{"x", 10, 2, 0.0, 2};
  EXPECT_TRUE(c.pass());
  c.failures = 3;
  EXPECT_FALSE(c.pass());
  EXPECT_FALSE(all_pass({c}));
  EXPECT_TRUE(all_pass({}));
}

TEST(VerifySuites, Identities) { expect_all_pass(verify_identities(20, 1)); }
TEST(VerifySuites, Ordering) { expect_all_pass(verify_ordering(10, 1)); }
TEST(VerifySuites, Noise) { expect_all_pass(verify_noise(20000, 1)); }
TEST(VerifySuites, Constraints) { expect_all_pass(verify_constraints(1, 1)); }
TEST(VerifySuites, SmallLength) { expect_all_pass(verify_small_s(20, 1)); }
