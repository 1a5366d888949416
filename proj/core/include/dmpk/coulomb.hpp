#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "dmpk/sde.hpp"

namespace dmpk {

/// Coefficients of an interacting-particle SDE with Coulomb repulsion,
///   dx_k = D_k(x) dB_k + v_k(x) ds + sum_{l != k} c_kl(x) / (x_k - x_l) ds.
///
/// Every coefficient function receives x and u = upper - x; the solver keeps
/// u accurate close to the upper bound, so coefficients vanishing there
/// should be computed from u.
struct CoulombSystem {
  using Coefficient = std::function<void(std::span<const double> x, std::span<const double> u, std::span<double> out)>;

  std::size_t dimension = 0;
  /// v: fills the smooth drift.
  Coefficient drift_smooth;
  /// c: fills the N x N pair coefficients, row-major (diagonal ignored).
  Coefficient pair_coefficient;
  /// D: fills the diffusion coefficients.
  Coefficient diffusion;
  /// Open interval the particles live in.
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  /// Dimension of the Bessel process a colliding pair behaves like; values
  /// above one enable the solver's pair step (see AdaptiveEuler).
  int pair_dimension = 0;
};

/// Adapter exposing a CoulombSystem to AdaptiveEuler.
class CoulombModel {
 public:
  explicit CoulombModel(const CoulombSystem& system);
  std::size_t dimension() const noexcept { return system_->dimension; }
  double lower_bound() const noexcept { return system_->lower; }
  double upper_bound() const noexcept { return system_->upper; }
  int pair_dimension() const noexcept { return system_->pair_dimension; }
  void evaluate(std::span<const double> x, std::span<double> drift, std::span<double> diffusion) const;
  void evaluate(std::span<const double> x, std::span<const double> u, std::span<double> drift,
                std::span<double> diffusion) const;

 private:
  const CoulombSystem* system_;
  mutable std::vector<double> pair_, gap_;
};

/// v_k + sum_{l != k} c_kl / (x_k - x_l).
std::vector<double> coulomb_drift(const CoulombSystem& system, std::span<const double> x);

/// DMPK written as a Coulomb system on (0, 1):
///   c_kl(T) = b/(bN+2-b) * T_k (T_k + T_l - 2 T_k T_l),
///   v_k(T)  = -T_k + 2 T_k (1 - T_k) / (bN+2-b),
///   D_k     = dmpk diffusion,
/// with pair dimension b + 1.
CoulombSystem dmpk_as_coulomb(const SymmetryClass& cls);

/// Integrates from x0 (pairwise distinct) and records x on the record grid.
/// `channel_map[k]` selects the Brownian motion driving coordinate k.
PathRecord coulomb_solve(const CoulombSystem& system, std::span<const double> x0, double s_end,
                         const SolverConfig& config, std::uint64_t path_index,
                         std::vector<std::size_t> channel_map = {});

}  // namespace dmpk
