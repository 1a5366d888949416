#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dmpk {

/// Default tolerance for membership in the open ordered domain D_N.
inline constexpr double kDefaultGapTol = 1e-12;

/// Symmetry class (beta = 1 time-reversal symmetric, beta = 2 broken) and channel count.
class SymmetryClass {
 public:
  SymmetryClass(int beta, int channels);

  int beta() const noexcept { return beta_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(channels_); }

  /// beta*(N-1) + 2, which is the same number as beta*N + 2 - beta.
  double denominator() const noexcept { return beta_ * (channels_ - 1) + 2.0; }

  friend bool operator==(const SymmetryClass&, const SymmetryClass&) = default;

 private:
  int beta_;
  int channels_;
};

/// Transmission eigenvalues at wire length s, stored ascending.
struct TransmissionState {
  double s = 0.0;
  std::vector<double> T;
};

/// lambda_k = 1 / T_k, index-aligned with the TransmissionState it came from
/// (so the stored vector is descending whenever T is ascending).
struct LambdaState {
  double s = 0.0;
  std::vector<double> lambda;
};

enum class Chart { Transmission, Lambda };

struct SolverConfig {
  double dt_base = 1e-3;
  double eta_gap = 0.1;
  int max_halvings = 40;
  std::vector<double> record_grid;
  /// Unset means max(N+1, 100*N).
  std::optional<int> degenerate_n;
  Chart chart = Chart::Transmission;
  int reproject_every = 1;
  std::uint64_t seed = 0;

  /// Throws DomainError when an invariant is broken.
  void validate(const SymmetryClass& cls) const;
  int resolved_degenerate_n(const SymmetryClass& cls) const;
};

LambdaState to_lambda(const TransmissionState& state);
TransmissionState to_transmission(const LambdaState& state);

/// True iff T_1 > tol, 1 - T_N > tol and every consecutive gap exceeds tol.
bool in_open_domain(std::span<const double> T, double gap_tol = kDefaultGapTol);
bool in_open_domain(const TransmissionState& state, double gap_tol = kDefaultGapTol);

/// Smallest of the consecutive gaps and the two boundary distances (may be negative).
double min_domain_gap(std::span<const double> T);

/// All T_k equal to one: the zero-length conductor.
bool is_degenerate_start(const TransmissionState& state);

}  // namespace dmpk
