#include "dmpk/coulomb.hpp"

#include <cmath>
#include <string>

#include "dmpk/errors.hpp"

namespace dmpk {

CoulombModel::CoulombModel(const CoulombSystem& system)
    : system_(&system), pair_(system.dimension * system.dimension), gap_(system.dimension) {
  if (!system.drift_smooth || !system.pair_coefficient || !system.diffusion) {
    throw DomainError("Coulomb system has an empty coefficient function");
  }
}

void CoulombModel::evaluate(std::span<const double> x, std::span<double> drift,
                            std::span<double> diffusion) const {
  for (std::size_t k = 0; k < x.size(); ++k) gap_[k] = system_->upper - x[k];
  evaluate(x, gap_, drift, diffusion);
}

void CoulombModel::evaluate(std::span<const double> x, std::span<const double> u, std::span<double> drift,
                            std::span<double> diffusion) const {
  const std::size_t n = system_->dimension;
  // Differences of two coordinates in the upper half come from u.
  const double half = 0.5 * (system_->upper - system_->lower);
  system_->drift_smooth(x, u, drift);
  system_->pair_coefficient(x, u, pair_);
  system_->diffusion(x, u, diffusion);
  for (std::size_t k = 0; k < n; ++k) {
    double repulsion = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      if (l == k) continue;
      const double d = u[k] < half && u[l] < half ? u[l] - u[k] : x[k] - x[l];
      repulsion += pair_[k * n + l] / d;
    }
    drift[k] += repulsion;
  }
}

std::vector<double> coulomb_drift(const CoulombSystem& system, std::span<const double> x) {
  if (x.size() != system.dimension) throw DomainError("state has wrong dimension");
  for (std::size_t k = 0; k < x.size(); ++k) {
    for (std::size_t l = k + 1; l < x.size(); ++l) {
      if (x[k] == x[l]) throw SingularityError("coincident coordinates in Coulomb drift");
    }
  }
  std::vector<double> drift(x.size()), diffusion(x.size());
  CoulombModel(system).evaluate(x, drift, diffusion);
  return drift;
}

CoulombSystem dmpk_as_coulomb(const SymmetryClass& cls) {
  const double den = cls.denominator();
  const double beta = cls.beta();
  CoulombSystem sys;
  sys.dimension = cls.size();
  sys.lower = 0.0;
  sys.upper = 1.0;
  sys.pair_dimension = cls.beta() + 1;
  sys.drift_smooth = [den](std::span<const double> T, std::span<const double> C, std::span<double> v) {
    for (std::size_t k = 0; k < T.size(); ++k) v[k] = -T[k] + 2.0 * T[k] * std::max(0.0, C[k]) / den;
  };
  sys.pair_coefficient = [den, beta](std::span<const double> T, std::span<const double> C, std::span<double> c) {
    const std::size_t n = T.size();
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t l = 0; l < n; ++l) {
        c[k * n + l] = l == k ? 0.0 : beta / den * T[k] * (T[k] * C[l] + T[l] * C[k]);
      }
    }
  };
  sys.diffusion = [den](std::span<const double> T, std::span<const double> C, std::span<double> d) {
    for (std::size_t k = 0; k < T.size(); ++k) d[k] = 2.0 * T[k] * std::sqrt(std::max(0.0, C[k]) / den);
  };
  return sys;
}

PathRecord coulomb_solve(const CoulombSystem& system, std::span<const double> x0, double s_end,
                         const SolverConfig& config, std::uint64_t path_index,
                         std::vector<std::size_t> channel_map) {
  if (x0.size() != system.dimension) throw DomainError("initial state has wrong dimension");
  const CoulombModel model(system);
  PathRecord rec;
  rec.seed = config.seed;
  rec.path_index = path_index;
  rec.grid = record_times(config.record_grid, s_end);
  AdaptiveEuler<CoulombModel> euler(model, 1, BrownianPath(NoiseStream(config.seed, path_index), system.dimension),
                                    step_control(config), std::vector<double>(x0.begin(), x0.end()),
                                    std::move(channel_map));
  rec.states.emplace_back(x0.begin(), x0.end());
  for (std::size_t i = 1; i < rec.grid.size(); ++i) {
    try {
      euler.advance_to(rec.grid[i], config.dt_base);
    } catch (const StepFailure& e) {
      throw StepFailure(std::string(e.what()) + " (path " + std::to_string(path_index) + ")", e.s(), e.state());
    }
    const auto x = euler.state();
    rec.states.emplace_back(x.begin(), x.end());
  }
  rec.stats = euler.stats();
  return rec;
}

}  // namespace dmpk
