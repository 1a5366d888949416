#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "dmpk/noise.hpp"
#include "dmpk/types.hpp"

namespace dmpk {

/// Hard ceiling on the current-conservation defect after reprojection.
inline constexpr double kDefectCeiling = 1e-6;
/// lambda values this far below one are rounding and get clamped to one.
inline constexpr double kLambdaClamp = 1e-10;
/// lambda values further below one than this cannot come from the group.
inline constexpr double kLambdaViolation = 1e-8;

/// 2N x 2N transfer matrix at wire length s.
struct TransferMatrix {
  ComplexMatrix m;
  double s = 0.0;
  SymmetryClass cls;

  static TransferMatrix identity(const SymmetryClass& cls);
};

/// M = diag(U+, U-) [[L, sqrt(L^2-1)], [sqrt(L^2-1), L]] diag(V+, V-).
struct SingularDecomposition {
  ComplexMatrix U_plus, U_minus, V_plus, V_minus;
  Eigen::VectorXd Lambda;
};

struct ConstraintDefect {
  /// ||M* Sz M - Sz||_F
  double current = 0.0;
  /// ||Sx M Sx - conj(M)||_F; not applicable for beta = 2.
  std::optional<double> time_reversal;
};

ComplexMatrix sigma_z(Eigen::Index n);
ComplexMatrix sigma_x(Eigen::Index n);

ConstraintDefect constraint_defect(const TransferMatrix& m);

/// m * X^{-1/2}, X = Sz m* Sz m, which lies on the group exactly in exact
/// arithmetic. The principal inverse square root comes from a coupled
/// Newton-Schulz iteration; requires ||X - 1||_F < 1.
TransferMatrix reproject(const TransferMatrix& m);

/// beta=1: overwrite the lower block row with the conjugate of the upper one,
/// so that Sx M Sx = conj(M) holds exactly in storage.
void enforce_time_reversal(ComplexMatrix& m);

/// T_k = 1/lambda_k with lambda_k the eigenvalues of M++* M++, ascending in T.
TransmissionState transmission_spectrum(const TransferMatrix& m);

TransferMatrix assemble_from_decomposition(const SingularDecomposition& d, const SymmetryClass& cls);

/// Matrices recorded on the grid produced by record_times(config.record_grid, s_end).
struct MatrixPath {
  std::vector<TransferMatrix> records;
  double max_defect = 0.0;
  std::optional<double> max_time_reversal_defect;
  std::uint64_t steps = 0;
};

/// Ito Euler-Maruyama for dM = dL M from M(0) = 1. Each step factor 1 + dL
/// is projected onto the group before it multiplies M, and M itself is
/// reprojected every config.reproject_every steps. Coarse steps follow the
/// same partition as the SDE engines, and Re(db_kk) is taken from the path's
/// Brownian motions B_k, so that both engines see the same B_k for a given
/// (seed, path).
MatrixPath evolve_transfer(double s_end, const SymmetryClass& cls, const SolverConfig& config,
                           std::uint64_t path_index);

/// Fraction of `paths` matrix paths whose spectrum at s_small is in D_N at gap_tol.
double small_s_nondegeneracy(const SymmetryClass& cls, double s_small, std::size_t paths, double gap_tol,
                             const SolverConfig& config);

}  // namespace dmpk
