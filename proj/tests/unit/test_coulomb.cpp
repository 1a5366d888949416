#include <gtest/gtest.h>

#include <cmath>

#include "dmpk/analysis.hpp"
#include "dmpk/coulomb.hpp"
#include "dmpk/errors.hpp"

using namespace dmpk;

TEST(Coulomb, DmpkDriftAgrees) {
  for (int beta : {1, 2}) {
    const SymmetryClass cls(beta, 6);
    const auto sys = dmpk_as_coulomb(cls);
    EXPECT_EQ(sys.pair_dimension, beta + 1);
    NoiseStream stream(beta, 0);
    for (int trial = 0; trial < 20; ++trial) {
      const auto T = sample_open_domain(6, stream, 1e-3);
      const auto a = coulomb_drift(sys, T);
      const auto b = dmpk_drift(T, cls);
      for (int k = 0; k < 6; ++k) EXPECT_NEAR(a[k], b[k], 1e-11 * (1 + std::fabs(b[k])));
    }
  }
}

TEST(Coulomb, DriftErrors) {
  const auto sys = dmpk_as_coulomb(SymmetryClass(2, 2));
  EXPECT_THROW(coulomb_drift(sys, std::vector<double>{0.3, 0.3}), SingularityError);
  EXPECT_THROW(coulomb_drift(sys, std::vector<double>{0.3}), DomainError);
  CoulombSystem empty;
  empty.dimension = 1;
  EXPECT_THROW(CoulombModel{empty}, DomainError);
}

TEST(Coulomb, SolveMatchesDmpkSolver) {
  for (int beta : {1, 2}) {
    const SymmetryClass cls(beta, 4);
    const auto sys = dmpk_as_coulomb(cls);
    SolverConfig config;
    config.seed = 3;
    config.record_grid = {0.5};
    const std::vector<double> T0{0.2, 0.4, 0.6, 0.8};
    for (std::uint64_t p = 0; p < 5; ++p) {
      const auto a = coulomb_solve(sys, T0, 1.0, config, p);
      const auto b = solve_path({0, T0}, 1.0, cls, config, p);
      ASSERT_EQ(a.grid, b.grid);
      for (std::size_t i = 0; i < a.states.size(); ++i) {
        for (int k = 0; k < 4; ++k) EXPECT_NEAR(a.states[i][k], b.states[i][k], 1e-12);
      }
    }
  }
}

TEST(Coulomb, ChannelMapPermutesNoise) {
  // Two free particles far apart: swapping the channel map swaps their noise.
  CoulombSystem sys;
  sys.dimension = 2;
  sys.drift_smooth = [](auto, auto, std::span<double> v) { v[0] = v[1] = 0.0; };
  sys.pair_coefficient = [](auto, auto, std::span<double> c) { std::fill(c.begin(), c.end(), 0.0); };
  sys.diffusion = [](auto, auto, std::span<double> d) { d[0] = d[1] = 1.0; };
  SolverConfig config;
  const std::vector<double> x0{-100.0, 100.0};
  const auto a = coulomb_solve(sys, x0, 0.1, config, 0);
  const auto b = coulomb_solve(sys, x0, 0.1, config, 0, {1, 0});
  EXPECT_NEAR(a.states.back()[0] + 100.0, b.states.back()[1] - 100.0, 1e-12);
  EXPECT_NEAR(a.states.back()[1] - 100.0, b.states.back()[0] + 100.0, 1e-12);
}
