#pragma once

#include <span>
#include <utility>
#include <vector>

#include "dmpk/integrator.hpp"
#include "dmpk/types.hpp"

namespace dmpk {

// ---------------------------------------------------------------------------
// DMPK coefficients
// ---------------------------------------------------------------------------

/// v_k = -T_k + 2T_k/(bN+2-b) * (1 - T_k + b/2 * sum_{j!=k} (T_k+T_j-2T_kT_j)/(T_k-T_j)).
/// Throws SingularityError on coincident entries.
std::vector<double> dmpk_drift(std::span<const double> T, const SymmetryClass& cls);

/// D_k = sqrt(4 T_k^2 (1-T_k) / (bN+2-b)). Throws DomainError outside [0, 1].
std::vector<double> dmpk_diffusion(std::span<const double> T, const SymmetryClass& cls);

struct LambdaCoefficients {
  std::vector<double> drift;
  /// Coefficient of dB_k, i.e. -sqrt(4 lambda_k (lambda_k - 1) / (b(N-1)+2)).
  std::vector<double> diffusion;
};

/// Coefficients of the SDE for lambda_k = 1/T_k driven by the same B_k.
LambdaCoefficients lambda_coefficients(std::span<const double> lambda, const SymmetryClass& cls);

// ---------------------------------------------------------------------------
// Cut-off regularization
// ---------------------------------------------------------------------------

/// chi_R is a product of C^2 ramps, one per face of D_N (T_1 = 0, T_N = 1,
/// T_k = T_{k+1}), in the Euclidean distance to that face. Each ramp is 1 at
/// distance >= r = 1/(sqrt(2) R) and 0 at distance <= inner_fraction * r.
struct RegularizationConfig {
  double R = 10.0;
  double inner_fraction = 0.5;
};

double cutoff_chi(std::span<const double> T, const RegularizationConfig& reg);
std::vector<double> regularized_drift(std::span<const double> T, const SymmetryClass& cls,
                                      const RegularizationConfig& reg);
std::vector<double> regularized_diffusion(std::span<const double> T, const SymmetryClass& cls,
                                          const RegularizationConfig& reg);

/// T_k = 1 - (N+1-k)/n, k = 1..N. Requires n >= N+1.
TransmissionState degenerate_start(const SymmetryClass& cls, int n);

// ---------------------------------------------------------------------------
// Models for AdaptiveEuler
// ---------------------------------------------------------------------------

/// DMPK in the T chart on (0, 1).
class DmpkModel {
 public:
  explicit DmpkModel(SymmetryClass cls) : cls_(cls) {}
  std::size_t dimension() const noexcept { return cls_.size(); }
  double lower_bound() const noexcept { return 0.0; }
  double upper_bound() const noexcept { return 1.0; }
  void evaluate(std::span<const double> T, std::span<double> drift, std::span<double> diffusion) const;
  /// Same, with C_k = 1 - T_k supplied; differences of two T close to one
  /// are taken from C.
  void evaluate(std::span<const double> T, std::span<const double> C, std::span<double> drift,
                std::span<double> diffusion) const;
  /// Neighbouring eigenvalues repel like a Bessel process of dimension beta + 1.
  int pair_dimension() const noexcept { return cls_.beta() + 1; }
  const SymmetryClass& symmetry() const noexcept { return cls_; }

 private:
  SymmetryClass cls_;
};

/// DMPK in the lambda chart on (1, inf); coordinates are index-aligned with T.
class DmpkLambdaModel {
 public:
  explicit DmpkLambdaModel(SymmetryClass cls) : cls_(cls) {}
  std::size_t dimension() const noexcept { return cls_.size(); }
  double lower_bound() const noexcept { return 1.0; }
  double upper_bound() const noexcept { return std::numeric_limits<double>::infinity(); }
  void evaluate(std::span<const double> lambda, std::span<double> drift, std::span<double> diffusion) const;
  int pair_dimension() const noexcept { return cls_.beta() + 1; }

 private:
  SymmetryClass cls_;
};

/// The cut-off system v^(R) = chi_R v, D^(R) = chi_R D.
class RegularizedDmpkModel {
 public:
  RegularizedDmpkModel(SymmetryClass cls, RegularizationConfig reg) : inner_(cls), reg_(reg) {}
  std::size_t dimension() const noexcept { return inner_.dimension(); }
  double lower_bound() const noexcept { return 0.0; }
  double upper_bound() const noexcept { return 1.0; }
  void evaluate(std::span<const double> T, std::span<double> drift, std::span<double> diffusion) const;

 private:
  DmpkModel inner_;
  RegularizationConfig reg_;
};

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

struct PathRecord {
  std::vector<double> grid;
  /// states[i] is the coordinate vector at grid[i].
  std::vector<std::vector<double>> states;
  StepStats stats;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
};

/// {0} + grid points strictly inside (0, s_end) + {s_end}, sorted and unique.
std::vector<double> record_times(std::span<const double> grid, double s_end);

StepControl step_control(const SolverConfig& config);

/// Integrates the DMPK SDE from T0 and records T on the record grid. A
/// degenerate T0 (all ones) is recorded as-is at s = 0 and integrated from
/// degenerate_start(cls, config.resolved_degenerate_n(cls)).
PathRecord solve_path(const TransmissionState& T0, double s_end, const SymmetryClass& cls,
                      const SolverConfig& config, std::uint64_t path_index);

/// Same, for the cut-off system.
PathRecord solve_regularized_path(const TransmissionState& T0, double s_end, const SymmetryClass& cls,
                                  const RegularizationConfig& reg, const SolverConfig& config,
                                  std::uint64_t path_index);

/// Two solutions driven by the same Brownian motions, stepped in lockstep.
std::pair<PathRecord, PathRecord> solve_coupled(const TransmissionState& first, const TransmissionState& second,
                                                double s_end, const SymmetryClass& cls,
                                                const SolverConfig& config, std::uint64_t path_index);

}  // namespace dmpk
