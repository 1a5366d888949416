#include <gtest/gtest.h>

#include <cmath>

#include "dmpk/analysis.hpp"
#include "dmpk/errors.hpp"
#include "oracles.hpp"

using namespace dmpk;

TEST(Observables, LandauerConductance) {
  EXPECT_EQ(landauer_g(std::vector<double>{0.25, 0.5, 0.125}), 0.875);
  EXPECT_EQ(landauer_g(std::vector<double>{}), 0.0);
}

TEST(Observables, LyapunovValues) {
  EXPECT_NEAR(lyapunov_f(std::vector<double>{0.5}), 4 * std::log(2.0), 1e-14);
  EXPECT_NEAR(lyapunov_f(std::vector<double>{0.25, 0.5}), 8.8932, 1e-4);
  EXPECT_TRUE(std::isinf(lyapunov_f(std::vector<double>{0.5, 0.5})));
  EXPECT_TRUE(std::isinf(lyapunov_f(std::vector<double>{0.0, 0.5})));
  NoiseStream stream(1, 0);
  for (int i = 0; i < 20; ++i) {
    const auto T = sample_open_domain(5, stream);
    EXPECT_NEAR(lyapunov_f(T), oracle::lyapunov_f(T), 1e-10 * std::fabs(oracle::lyapunov_f(T)));
  }
}

TEST(Identities, SingleChannelClosedForm) {
  // N = 1: both sides of Z reduce to -2T.
  for (double t : {0.1, 0.5, 0.93}) {
    const auto z = proof_identity_Z(std::vector<double>{t});
    EXPECT_NEAR(z.lhs, -2 * t, 1e-14);
    EXPECT_NEAR(z.rhs, -2 * t, 1e-14);
    EXPECT_NEAR(z.bound, 16.0 / 3.0, 1e-14);
  }
}

TEST(Identities, HoldAtRandomPoints) {
  NoiseStream stream(4, 0);
  for (std::size_t n = 1; n <= 8; ++n) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto T = sample_open_domain(n, stream);
      const auto z = proof_identity_Z(T);
      EXPECT_LT(relative_residual(z.lhs, z.rhs), 1e-9);
      EXPECT_LE(std::fabs(z.rhs), z.bound);
      const auto s = proof_identity_sums(T);
      EXPECT_LT(s.worst_residual(), 1e-9);
      EXPECT_TRUE(s.bounds_hold());
    }
  }
  EXPECT_THROW(proof_identity_Z(std::vector<double>{0.5, 0.4}), DomainError);
  EXPECT_THROW(proof_identity_sums(std::vector<double>{}), DomainError);
}

TEST(SampleOpenDomain, RespectsGap) {
  NoiseStream stream(2, 0);
  for (int i = 0; i < 100; ++i) EXPECT_GE(min_domain_gap(sample_open_domain(4, stream, 0.05)), 0.05);
  EXPECT_THROW(sample_open_domain(0, stream), DomainError);
  EXPECT_THROW(sample_open_domain(10, stream, 0.1), DomainError);
}

TEST(Summaries, MomentsMatchTwoPass) {
  NoiseStream stream(6, 0);
  std::vector<double> x;
  for (int i = 0; i < 1000; ++i) x.push_back(3.0 + 2.0 * stream.next_normal());
  const auto m = summarize(x);
  const auto [mean, var] = oracle::mean_variance(x);
  EXPECT_NEAR(m.mean, mean, 1e-12);
  EXPECT_NEAR(m.variance, var, 1e-10);
  EXPECT_EQ(m.count, 1000u);
  EXPECT_NEAR(m.stderr_mean, std::sqrt(var / 1000), 1e-12);
  // Normal data: se(var) ~ var sqrt(2/(n-1)).
  EXPECT_NEAR(m.stderr_variance / (var * std::sqrt(2.0 / 999)), 1.0, 0.15);
  EXPECT_EQ(summarize(std::vector<double>{}).count, 0u);
  EXPECT_EQ(summarize(std::vector<double>{2.0}).variance, 0.0);
}

TEST(Summaries, PathSummaries) {
  std::vector<PathRecord> paths(3);
  for (std::size_t p = 0; p < 3; ++p) {
    paths[p].grid = {0.0, 1.0};
    paths[p].states = {{0.5}, {0.1 * static_cast<double>(p)}};
  }
  const auto s = summarize_paths(paths, "g", landauer_g);
  ASSERT_EQ(s.moments.size(), 2u);
  EXPECT_EQ(s.moments[0].variance, 0.0);
  EXPECT_NEAR(s.moments[1].mean, 0.1, 1e-15);
  EXPECT_NEAR(s.moments[1].variance, 0.01, 1e-15);
}

TEST(Audit, CountsViolationsAndStuckStarts) {
  PathRecord ok;
  ok.grid = {0.0, 0.5};
  ok.states = {{1.0, 1.0}, {0.3, 0.6}};
  PathRecord stuck = ok;
  stuck.states[1] = {1.0, 1.0};
  PathRecord bad = ok;
  bad.states[1] = {0.6, 0.3};
  const auto a = audit_paths({ok, stuck, bad});
  EXPECT_EQ(a.states_checked, 3u);
  EXPECT_EQ(a.violations, 2u);
  EXPECT_EQ(a.stuck_degenerate, 1u);
  EXPECT_LT(a.min_gap, 0.0);
  EXPECT_EQ(audit_paths({ok}).violations, 0u);
}

TEST(Ucf, TargetAndScoring) {
  EXPECT_NEAR(ucf_target(SymmetryClass(1, 4)), 2.0 / 15, 1e-16);
  EXPECT_NEAR(ucf_target(SymmetryClass(2, 4)), 1.0 / 15, 1e-16);

  EnsembleSummary s;
  s.moments.push_back({0.0, 0.07, 0.0, 0.002, 1000});
  const auto r = score_ucf(s, SymmetryClass(2, 4));
  EXPECT_NEAR(r.relative_error, 0.05, 1e-12);
  EXPECT_NEAR(r.z_score, (0.07 - 1.0 / 15) / 0.002, 1e-12);
  EXPECT_TRUE(r.pass);
  s.moments.back().stderr_variance = 1e-4;
  EXPECT_FALSE(score_ucf(s, SymmetryClass(2, 4)).pass);
  s.moments.back() = {0.0, 0.09, 0.0, 0.02, 1000};
  EXPECT_FALSE(score_ucf(s, SymmetryClass(2, 4)).pass);
  EXPECT_THROW(score_ucf(EnsembleSummary{}, SymmetryClass(2, 4)), DomainError);
}

TEST(Ucf, ZeroLengthHasNoVariance) {
  const auto s = ucf_variance(SymmetryClass(2, 3), 0.0, 4, SolverConfig{});
  ASSERT_EQ(s.moments.size(), 1u);
  EXPECT_EQ(s.moments[0].variance, 0.0);
  EXPECT_EQ(s.moments[0].mean, 3.0);
  EXPECT_THROW(ucf_variance(SymmetryClass(2, 3), 1.0, 1, SolverConfig{}), DomainError);
}

TEST(Ucf, ShortRunIsPlausible) {
  std::vector<PathRecord> keep;
  const auto s = ucf_variance(SymmetryClass(2, 3), 0.5, 50, SolverConfig{}, &keep);
  EXPECT_EQ(keep.size(), 50u);
  EXPECT_GT(s.moments.back().variance, 0.0);
  EXPECT_LT(s.moments.back().mean, 3.0);
  EXPECT_EQ(audit_paths(keep).violations, 0u);
}

TEST(Kolmogorov, KnownValues) {
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
  EXPECT_NEAR(kolmogorov_q(1.0), 0.26999967167735456, 1e-12);
  EXPECT_NEAR(kolmogorov_q(1.358), 0.05, 2e-4);
  EXPECT_LT(kolmogorov_q(3.0), 1e-7);
}

TEST(Kolmogorov, TwoSampleMatchesBruteForce) {
  NoiseStream stream(3, 0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> a, b;
    for (int i = 0; i < 200; ++i) a.push_back(stream.next_normal());
    for (int i = 0; i < 150; ++i) b.push_back(0.2 + stream.next_normal());
    if (trial % 2 == 0) b.insert(b.end(), a.begin(), a.begin() + 20);  // ties
    const auto r = ks_two_sample(a, b);
    EXPECT_NEAR(r.distance, oracle::ks_distance(a, b), 1e-15);
    EXPECT_EQ(r.n, a.size());
    EXPECT_EQ(r.m, b.size());
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
  }
  EXPECT_THROW(ks_two_sample(std::vector<double>{}, std::vector<double>{1.0}), DomainError);
  const std::vector<double> same{1, 2, 3};
  EXPECT_EQ(ks_two_sample(same, same).distance, 0.0);
  EXPECT_TRUE(ks_two_sample(same, same).pass());
}

TEST(Ordering, InputValidation) {
  const SymmetryClass cls(2, 2);
  const SolverConfig config;
  EXPECT_THROW(ordering_test({0, {0.2, 0.5}}, {0, {0.3, 0.4}}, 1.0, cls, config, 1), DomainError);
  EXPECT_THROW(ordering_test({0, {0.2}}, {0, {0.3}}, 1.0, cls, config, 1), DomainError);
}

TEST(Ordering, SmallRunHasNoViolations) {
  SolverConfig config;
  config.record_grid = {0.5};
  const auto r = ordering_test({0, {0.2, 0.5}}, {0, {0.25, 0.55}}, 1.0, SymmetryClass(1, 2), config, 20);
  EXPECT_EQ(r.pairs, 20u);
  EXPECT_EQ(r.grid_points, 60u);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_GT(r.min_margin, 0.0);
}

TEST(LawEquality, NeedsEnoughPaths) {
  const std::vector<double> times{0.5};
  EXPECT_THROW(law_equality_test(SymmetryClass(2, 2), times, 10, SolverConfig{}), DomainError);
}

TEST(LawEquality, EnginesAgreeOnSmallSystem) {
  SolverConfig config;
  config.seed = 12;
  const std::vector<double> times{0.5};
  const auto m = matrix_g_samples(SymmetryClass(2, 2), times, 200, config);
  const auto s = sde_g_samples(SymmetryClass(2, 2), times, 200, config);
  ASSERT_EQ(m.g.size(), 1u);
  ASSERT_EQ(m.g[0].size(), 200u);
  EXPECT_EQ(m.domain_violations, 0u);
  EXPECT_LT(m.max_defect, 1e-6);
  // 200 vs 200 samples: the 0.1% critical KS distance is about 0.195.
  EXPECT_LT(ks_two_sample(m.g[0], s[0]).distance, 0.195);
}

TEST(GrowthProbe, FiniteAndFitted) {
  SolverConfig config;
  config.record_grid = {0.25, 0.5, 0.75};
  const auto probe = lyapunov_growth_probe(SymmetryClass(2, 3), {0, {0.2, 0.5, 0.8}}, 1.0, 20, config);
  EXPECT_TRUE(probe.all_finite);
  EXPECT_NEAR(probe.initial_f, lyapunov_f(std::vector<double>{0.2, 0.5, 0.8}), 1e-12);
  EXPECT_EQ(probe.f.moments.size(), 5u);
  EXPECT_THROW(lyapunov_growth_probe(SymmetryClass(2, 3), {0, {0.2, 0.5, 0.5}}, 1.0, 2, config), DomainError);
}
