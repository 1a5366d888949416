#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dmpk/sde.hpp"

namespace dmpk {

/// One named check of a verification suite.
struct CheckResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  /// Largest residual seen; the unit depends on the check (relative error,
  /// defect norm, or z-score for Monte-Carlo moments).
  double worst_residual = 0.0;
  /// Failures tolerated before the check counts as failed.
  std::size_t allowed_failures = 0;

  bool pass() const noexcept { return failures <= allowed_failures; }
};

bool all_pass(const std::vector<CheckResult>& checks);

/// Both proof identities and their bounds at `trials` random points of D_N
/// for each N = 1..8. Residuals are relative; the tolerance is 1e-9.
std::vector<CheckResult> verify_identities(std::size_t trials, std::uint64_t seed);

/// Synchronously coupled pairs from T_high = k/(N+1) and T_low = T_high - 0.01,
/// N = 4, s_end = 2, beta = 1 and 2. A failure is a grid point where some
/// component of the upper path is not strictly above the lower one.
/// If `keep` is non-null every simulated path is appended to it.
std::vector<CheckResult> verify_ordering(std::size_t pairs, std::uint64_t seed,
                                         std::vector<PathRecord>* keep = nullptr);

/// Second moments of the generator blocks against their laws, `samples`
/// draws per class at N = 3. Moment residuals are z-scores (failure above 3);
/// structural checks are exact.
std::vector<CheckResult> verify_noise(std::size_t samples, std::uint64_t seed);

/// Matrix-engine paths of 10^4 steps (N = 4, dt 1e-4) with per-step
/// reprojection; current defect <= 1e-10, beta=1 time-reversal defect <= 1e-12.
std::vector<CheckResult> verify_constraints(std::size_t paths, std::uint64_t seed);

/// beta = 2, N = 4, s = 0.01: matrix paths whose spectrum has every gap
/// above 1e-8; at most 1% may fail.
std::vector<CheckResult> verify_small_s(std::size_t paths, std::uint64_t seed);

}  // namespace dmpk
