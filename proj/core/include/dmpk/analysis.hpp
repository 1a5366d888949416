#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dmpk/noise.hpp"
#include "dmpk/sde.hpp"
#include "dmpk/types.hpp"

namespace dmpk {

/// Landauer conductance g = sum_k T_k.
double landauer_g(std::span<const double> T);

/// f(T) = sum_k (-2 log T_k - 2 log(1-T_k) - sum_{l != k} log|T_k - T_l|).
/// Returns +infinity on the boundary of D_N instead of throwing.
double lyapunov_f(std::span<const double> T);

/// The quantity Z from the Lyapunov drift computation, evaluated two ways
/// on the augmented state T_0 = 0, T_{N+1} = 1, rho_k = T_k^2 (1 - T_k):
///   lhs = sum_{k=1..N} [ (sum_j 1/(T_k-T_j)) (sum_l rho_k/(T_k-T_l)) - sum_m rho_k/(T_k-T_m)^2 ]
///   rhs = 1/3 sum over distinct (k, j, l) in 0..N+1 of (1 - T_j - T_l - T_k)
/// with bound = 2/3 (N+1)^3.
struct ZIdentity {
  double lhs = 0.0;
  double rhs = 0.0;
  double bound = 0.0;
};

ZIdentity proof_identity_Z(std::span<const double> T);

/// Companion sums on the augmented state.
///   repulsion: sum_{k=1..N} sum_{j != k} T_k(1-T_k)/(T_k-T_j) = 1/2 sum_{k != j} (1 - T_k - T_j),
///              |.| <= (N+1)(N+2)/2
///   square:    sum_{k=1..N} sum_{j != k} T_k^2/(T_j-T_k)
///                = -sum_{k,j=1..N} (T_k+T_j)/2 + sum_k T_k^2/(1-T_k),
///              -N^2 <= . <= sum_k T_k^2/(1-T_k)
struct SumIdentities {
  double repulsion_lhs = 0.0, repulsion_rhs = 0.0, repulsion_bound = 0.0;
  double square_lhs = 0.0, square_rhs = 0.0, square_lower = 0.0, square_upper = 0.0;

  /// Largest relative disagreement |lhs - rhs| / (1 + |lhs|).
  double worst_residual() const;
  bool bounds_hold() const;
};

SumIdentities proof_identity_sums(std::span<const double> T);

/// Relative residual |a - b| / (1 + |a|).
double relative_residual(double a, double b);

/// Uniform point of D_N: sorted uniforms, redrawn until every gap is >= min_gap.
std::vector<double> sample_open_domain(std::size_t channels, NoiseStream& stream, double min_gap = 1e-4);

// ---------------------------------------------------------------------------
// Ensemble statistics
// ---------------------------------------------------------------------------

struct MomentSummary {
  double mean = 0.0;
  /// Unbiased sample variance.
  double variance = 0.0;
  double stderr_mean = 0.0;
  /// Standard error of the variance from the fourth central moment.
  double stderr_variance = 0.0;
  std::size_t count = 0;
};

MomentSummary summarize(std::span<const double> samples);

struct EnsembleSummary {
  std::string observable;
  std::vector<double> grid;
  std::vector<MomentSummary> moments;
  std::size_t paths = 0;
  std::uint64_t seed = 0;
};

/// Observable on every grid point of every path.
EnsembleSummary summarize_paths(const std::vector<PathRecord>& paths, const std::string& observable,
                                const std::function<double(std::span<const double>)>& fn);

/// Runs `paths` DMPK paths from T0 to s_end (grid from config.record_grid).
std::vector<PathRecord> run_ensemble(const TransmissionState& T0, double s_end, const SymmetryClass& cls,
                                     const SolverConfig& config, std::size_t paths);

struct DomainAudit {
  std::size_t states_checked = 0;
  /// Recorded states with s > 0 outside the open domain at gap_tol = 0.
  std::size_t violations = 0;
  /// Paths that started degenerate but were still degenerate at their first positive grid time.
  std::size_t stuck_degenerate = 0;
  double min_gap = 1.0;
};

DomainAudit audit_paths(const std::vector<PathRecord>& paths);

/// Var(g(s_eval)) from the degenerate start. Requires paths >= 2; s_eval = 0
/// gives the unevolved start and variance zero.
/// If `keep` is non-null the paths are stored there.
EnsembleSummary ucf_variance(const SymmetryClass& cls, double s_eval, std::size_t paths,
                             const SolverConfig& config, std::vector<PathRecord>* keep = nullptr);

/// 2 / (15 beta).
double ucf_target(const SymmetryClass& cls);

inline constexpr double kUcfRelativeTolerance = 0.2;
/// Largest |Var(g) - target| in units of its standard error.
inline constexpr double kUcfMaxZ = 3.0;

struct UcfResult {
  double var_g = 0.0;
  double stderr_var_g = 0.0;
  double mean_g = 0.0;
  double target = 0.0;
  double relative_error = 0.0;
  double z_score = 0.0;
  std::size_t paths = 0;
  /// |relative_error| <= kUcfRelativeTolerance and |z_score| <= kUcfMaxZ.
  bool pass = false;
};

/// Scores the last grid point of a ucf_variance summary against ucf_target.
UcfResult score_ucf(const EnsembleSummary& summary, const SymmetryClass& cls);

struct OrderingReport {
  std::size_t pairs = 0;
  std::size_t grid_points = 0;
  /// Grid points (over all pairs) where some component of `high` is not above `low`.
  std::size_t violations = 0;
  double min_margin = 1.0;
};

/// Lockstep-coupled solutions from low and high (high_j > low_j for all j).
/// If `keep` is non-null both solutions of every pair are appended to it.
OrderingReport ordering_test(const TransmissionState& low, const TransmissionState& high, double s_end,
                             const SymmetryClass& cls, const SolverConfig& config, std::size_t paths,
                             std::vector<PathRecord>* keep = nullptr);

// ---------------------------------------------------------------------------
// Two-sample comparison
// ---------------------------------------------------------------------------

/// Acceptance threshold on the KS distance for the law-equality experiment.
inline constexpr double kLawEqualityThreshold = 0.04;
inline constexpr std::size_t kLawEqualityMinPaths = 1000;

struct TwoSampleReport {
  double s = 0.0;
  double distance = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
  double p_value = 1.0;
  double threshold = kLawEqualityThreshold;

  bool pass() const noexcept { return distance < threshold; }
};

/// Complementary Kolmogorov distribution Q(x) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2).
double kolmogorov_q(double x);

/// Two-sample Kolmogorov-Smirnov distance with asymptotic p-value.
TwoSampleReport ks_two_sample(std::span<const double> a, std::span<const double> b,
                              double threshold = kLawEqualityThreshold);

/// g at each of `times` (rows) for `paths` matrix-engine paths (columns).
struct MatrixSamples {
  std::vector<std::vector<double>> g;
  double max_defect = 0.0;
  /// Spectra at positive times that fall outside the open domain.
  std::size_t domain_violations = 0;
};

MatrixSamples matrix_g_samples(const SymmetryClass& cls, std::span<const double> times, std::size_t paths,
                               const SolverConfig& config);

/// g at each of `times` for `paths` DMPK paths from the degenerate start.
std::vector<std::vector<double>> sde_g_samples(const SymmetryClass& cls, std::span<const double> times,
                                               std::size_t paths, const SolverConfig& config,
                                               std::vector<PathRecord>* keep = nullptr);

struct LawEqualityRun {
  std::vector<TwoSampleReport> reports;
  std::vector<PathRecord> sde_paths;
  double max_matrix_defect = 0.0;
  std::size_t matrix_domain_violations = 0;
};

/// g-samples at each time in `times` from the matrix engine (seed
/// config.seed) and from the DMPK engine with degenerate start (seed
/// config.seed + 1, so the two samples are independent), compared by KS.
/// Requires paths >= kLawEqualityMinPaths.
LawEqualityRun law_equality_test(const SymmetryClass& cls, std::span<const double> times, std::size_t paths,
                                 const SolverConfig& config, double threshold = kLawEqualityThreshold);

struct GrowthProbe {
  EnsembleSummary f;
  double initial_f = 0.0;
  double fit_intercept = 0.0;
  double fit_slope = 0.0;
  bool all_finite = true;
  /// Intercept within 10% of f(T0).
  bool within_envelope = true;
};

/// Mean of the Lyapunov function along DMPK paths from T0 with a linear fit.
GrowthProbe lyapunov_growth_probe(const SymmetryClass& cls, const TransmissionState& T0, double s_end,
                                  std::size_t paths, const SolverConfig& config);

}  // namespace dmpk
