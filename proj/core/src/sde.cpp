#include "dmpk/sde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dmpk/errors.hpp"

namespace dmpk {

namespace {

void require_distinct(std::span<const double> x) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    for (std::size_t j = k + 1; j < x.size(); ++j) {
      if (x[k] == x[j]) {
        throw SingularityError("coincident coordinates " + std::to_string(k) + " and " + std::to_string(j));
      }
    }
  }
}

/// C^2 ramp: 0 for u <= 0, 1 for u >= 1.
double smootherstep(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (u * (6.0 * u - 15.0) + 10.0);
}

std::vector<double> initial_coordinates(const TransmissionState& T0, const SymmetryClass& cls,
                                        const SolverConfig& config) {
  if (T0.T.size() != cls.size()) throw DomainError("initial state has wrong channel count");
  if (is_degenerate_start(T0)) return degenerate_start(cls, config.resolved_degenerate_n(cls)).T;
  if (!in_open_domain(T0, 0.0)) throw DomainError("initial state is neither in D_N nor the degenerate start");
  return T0.T;
}

template <class Model, class ToT>
PathRecord integrate(const Model& model, std::vector<double> x0, const std::vector<double>& initial_record,
                     double s_end, const SolverConfig& config, std::uint64_t path_index, ToT to_t) {
  PathRecord rec;
  rec.seed = config.seed;
  rec.path_index = path_index;
  rec.grid = record_times(config.record_grid, s_end);
  const std::size_t n = model.dimension();
  AdaptiveEuler<Model> euler(model, 1, BrownianPath(NoiseStream(config.seed, path_index), n),
                             step_control(config), std::move(x0));
  rec.states.reserve(rec.grid.size());
  rec.states.push_back(initial_record);
  for (std::size_t i = 1; i < rec.grid.size(); ++i) {
    try {
      euler.advance_to(rec.grid[i], config.dt_base);
    } catch (const StepFailure& e) {
      throw StepFailure(std::string(e.what()) + " (path " + std::to_string(path_index) + ")", e.s(), e.state());
    }
    rec.states.push_back(to_t(euler.state()));
  }
  rec.stats = euler.stats();
  return rec;
}

std::vector<double> identity_map(std::span<const double> x) { return {x.begin(), x.end()}; }

std::vector<double> reciprocal_map(std::span<const double> x) {
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = 1.0 / x[k];
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void DmpkModel::evaluate(std::span<const double> T, std::span<double> drift, std::span<double> diffusion) const {
  std::vector<double> C(T.size());
  for (std::size_t k = 0; k < T.size(); ++k) C[k] = 1.0 - T[k];
  evaluate(T, C, drift, diffusion);
}

void DmpkModel::evaluate(std::span<const double> T, std::span<const double> C, std::span<double> drift,
                         std::span<double> diffusion) const {
  const std::size_t n = T.size();
  const double den = cls_.denominator();
  const double half_beta = 0.5 * cls_.beta();
  // The repulsion summand is antisymmetric in (k, j): accumulate each pair once.
  std::fill(drift.begin(), drift.end(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double tk = T[k], ck = C[k];
    for (std::size_t j = k + 1; j < n; ++j) {
      const double tj = T[j], cj = C[j];
      const double gap = ck < 0.5 && cj < 0.5 ? cj - ck : tk - tj;
      const double term = (tk * cj + tj * ck) / gap;
      drift[k] += term;
      drift[j] -= term;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double tk = T[k], ck = std::max(0.0, C[k]);
    drift[k] = -tk + 2.0 * tk / den * (ck + half_beta * drift[k]);
    diffusion[k] = 2.0 * tk * std::sqrt(ck / den);
  }
}

void DmpkLambdaModel::evaluate(std::span<const double> lambda, std::span<double> drift,
                               std::span<double> diffusion) const {
  const std::size_t n = lambda.size();
  const double den = cls_.denominator();
  const double coupling = cls_.beta() / den;
  std::fill(drift.begin(), drift.end(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double lk = lambda[k];
    for (std::size_t l = k + 1; l < n; ++l) {
      const double ll = lambda[l];
      const double term = (2.0 * lk * ll - lk - ll) / (lk - ll);
      drift[k] += term;
      drift[l] -= term;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double lk = lambda[k];
    drift[k] = 2.0 * lk - 1.0 + coupling * drift[k];
    diffusion[k] = -std::sqrt(std::max(0.0, 4.0 * lk * (lk - 1.0) / den));
  }
}

void RegularizedDmpkModel::evaluate(std::span<const double> T, std::span<double> drift,
                                    std::span<double> diffusion) const {
  const double chi = cutoff_chi(T, reg_);
  if (chi == 0.0) {
    std::fill(drift.begin(), drift.end(), 0.0);
    std::fill(diffusion.begin(), diffusion.end(), 0.0);
    return;
  }
  inner_.evaluate(T, drift, diffusion);
  if (chi != 1.0) {
    for (auto& v : drift) v *= chi;
    for (auto& d : diffusion) d *= chi;
  }
}

// ---------------------------------------------------------------------------

std::vector<double> dmpk_drift(std::span<const double> T, const SymmetryClass& cls) {
  if (T.size() != cls.size()) throw DomainError("state has wrong channel count");
  require_distinct(T);
  std::vector<double> drift(T.size()), diffusion(T.size());
  DmpkModel(cls).evaluate(T, drift, diffusion);
  return drift;
}

std::vector<double> dmpk_diffusion(std::span<const double> T, const SymmetryClass& cls) {
  if (T.size() != cls.size()) throw DomainError("state has wrong channel count");
  std::vector<double> out(T.size());
  const double den = cls.denominator();
  for (std::size_t k = 0; k < T.size(); ++k) {
    const double t = T[k];
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("transmission eigenvalue outside [0, 1]");
    out[k] = std::sqrt(4.0 * t * t * (1.0 - t) / den);
  }
  return out;
}

LambdaCoefficients lambda_coefficients(std::span<const double> lambda, const SymmetryClass& cls) {
  if (lambda.size() != cls.size()) throw DomainError("state has wrong channel count");
  for (double l : lambda) {
    if (!(l >= 1.0)) throw DomainError("lambda below one");
  }
  require_distinct(lambda);
  LambdaCoefficients out{std::vector<double>(lambda.size()), std::vector<double>(lambda.size())};
  DmpkLambdaModel(cls).evaluate(lambda, out.drift, out.diffusion);
  return out;
}

double cutoff_chi(std::span<const double> T, const RegularizationConfig& reg) {
  if (T.empty()) return 0.0;
  const double r = 1.0 / (std::sqrt(2.0) * reg.R);
  const double r0 = reg.inner_fraction * r;
  auto ramp = [&](double d) { return smootherstep((d - r0) / (r - r0)); };
  double chi = ramp(T.front()) * ramp(1.0 - T.back());
  for (std::size_t k = 0; k + 1 < T.size() && chi > 0.0; ++k) {
    const double gap = T[k + 1] - T[k];
    if (!(gap > 0.0)) return 0.0;
    chi *= ramp(gap / std::sqrt(2.0));
  }
  return chi;
}

std::vector<double> regularized_drift(std::span<const double> T, const SymmetryClass& cls,
                                      const RegularizationConfig& reg) {
  if (T.size() != cls.size()) throw DomainError("state has wrong channel count");
  std::vector<double> drift(T.size()), diffusion(T.size());
  RegularizedDmpkModel(cls, reg).evaluate(T, drift, diffusion);
  return drift;
}

std::vector<double> regularized_diffusion(std::span<const double> T, const SymmetryClass& cls,
                                          const RegularizationConfig& reg) {
  if (T.size() != cls.size()) throw DomainError("state has wrong channel count");
  std::vector<double> drift(T.size()), diffusion(T.size());
  RegularizedDmpkModel(cls, reg).evaluate(T, drift, diffusion);
  return diffusion;
}

TransmissionState degenerate_start(const SymmetryClass& cls, int n) {
  const int N = cls.channels();
  if (n < N + 1) throw DomainError("degenerate start needs n >= N + 1");
  TransmissionState out{0.0, std::vector<double>(cls.size())};
  for (int k = 1; k <= N; ++k) {
    out.T[static_cast<std::size_t>(k - 1)] = 1.0 - static_cast<double>(N + 1 - k) / n;
  }
  return out;
}

std::vector<double> record_times(std::span<const double> grid, double s_end) {
  if (!(s_end >= 0.0)) throw DomainError("s_end must be >= 0");
  std::vector<double> out{0.0};
  for (double s : grid) {
    if (s > 0.0 && s < s_end) out.push_back(s);
  }
  if (s_end > 0.0) out.push_back(s_end);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

StepControl step_control(const SolverConfig& config) { return {config.eta_gap, config.max_halvings}; }

PathRecord solve_path(const TransmissionState& T0, double s_end, const SymmetryClass& cls,
                      const SolverConfig& config, std::uint64_t path_index) {
  config.validate(cls);
  std::vector<double> x0 = initial_coordinates(T0, cls, config);
  if (config.chart == Chart::Lambda) {
    return integrate(DmpkLambdaModel(cls), reciprocal_map(x0), T0.T, s_end, config, path_index, reciprocal_map);
  }
  return integrate(DmpkModel(cls), std::move(x0), T0.T, s_end, config, path_index, identity_map);
}

PathRecord solve_regularized_path(const TransmissionState& T0, double s_end, const SymmetryClass& cls,
                                  const RegularizationConfig& reg, const SolverConfig& config,
                                  std::uint64_t path_index) {
  config.validate(cls);
  std::vector<double> x0 = initial_coordinates(T0, cls, config);
  return integrate(RegularizedDmpkModel(cls, reg), std::move(x0), T0.T, s_end, config, path_index,
                   identity_map);
}

std::pair<PathRecord, PathRecord> solve_coupled(const TransmissionState& first, const TransmissionState& second,
                                                double s_end, const SymmetryClass& cls,
                                                const SolverConfig& config, std::uint64_t path_index) {
  config.validate(cls);
  const std::size_t n = cls.size();
  std::vector<double> x0 = initial_coordinates(first, cls, config);
  const std::vector<double> x1 = initial_coordinates(second, cls, config);
  x0.insert(x0.end(), x1.begin(), x1.end());

  const DmpkModel model(cls);
  AdaptiveEuler<DmpkModel> euler(model, 2, BrownianPath(NoiseStream(config.seed, path_index), n),
                                 step_control(config), std::move(x0));
  std::pair<PathRecord, PathRecord> out;
  for (PathRecord* rec : {&out.first, &out.second}) {
    rec->seed = config.seed;
    rec->path_index = path_index;
    rec->grid = record_times(config.record_grid, s_end);
  }
  out.first.states.push_back(first.T);
  out.second.states.push_back(second.T);
  for (std::size_t i = 1; i < out.first.grid.size(); ++i) {
    euler.advance_to(out.first.grid[i], config.dt_base);
    const auto x = euler.state();
    out.first.states.emplace_back(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
    out.second.states.emplace_back(x.begin() + static_cast<std::ptrdiff_t>(n), x.end());
  }
  out.first.stats = out.second.stats = euler.stats();
  return out;
}

}  // namespace dmpk
