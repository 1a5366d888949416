#include "dmpk/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "dmpk/ensemble.hpp"
#include "dmpk/errors.hpp"
#include "dmpk/transfer.hpp"

namespace dmpk {

namespace {

// T with the fixed endpoints 0 and 1 attached.
std::vector<long double> augmented(std::span<const double> T) {
  std::vector<long double> t;
  t.reserve(T.size() + 2);
  t.push_back(0.0L);
  for (double x : T) t.push_back(x);
  t.push_back(1.0L);
  return t;
}

void require_interior(std::span<const double> T, const char* who) {
  if (T.empty()) throw DomainError(std::string(who) + ": empty state");
  if (!in_open_domain(T, 0.0)) throw DomainError(std::string(who) + ": state outside the open domain");
}

std::size_t grid_index(const std::vector<double>& grid, double s) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i] - s) <= 1e-12 * std::max(1.0, s)) return i;
  }
  throw DomainError("time " + std::to_string(s) + " is not on the record grid");
}

}  // namespace

double landauer_g(std::span<const double> T) {
  double g = 0.0;
  for (double t : T) g += t;
  return g;
}

double lyapunov_f(std::span<const double> T) {
  if (!in_open_domain(T, 0.0)) return std::numeric_limits<double>::infinity();
  double f = 0.0;
  for (std::size_t k = 0; k < T.size(); ++k) {
    f -= 2.0 * std::log(T[k]) + 2.0 * std::log1p(-T[k]);
    for (std::size_t l = 0; l < T.size(); ++l) {
      if (l != k) f -= std::log(std::abs(T[k] - T[l]));
    }
  }
  return f;
}

// The direct form cancels terms of size rho/gap^2 against each other, so it
// is accumulated in extended precision.
ZIdentity proof_identity_Z(std::span<const double> T) {
  require_interior(T, "proof_identity_Z");
  const auto t = augmented(T);
  const std::size_t m = t.size();
  const std::size_t n = T.size();

  long double lhs = 0.0L;
  for (std::size_t k = 1; k <= n; ++k) {
    const long double rho = t[k] * t[k] * (1.0L - t[k]);
    long double inv = 0.0L, inv_sq = 0.0L;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == k) continue;
      const long double d = 1.0L / (t[k] - t[j]);
      inv += d;
      inv_sq += d * d;
    }
    lhs += rho * (inv * inv - inv_sq);
  }

  long double rhs = 0.0L;
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = 0; j < m; ++j) {
      if (j == k) continue;
      for (std::size_t l = 0; l < m; ++l) {
        if (l == k || l == j) continue;
        rhs += 1.0L - t[j] - t[l] - t[k];
      }
    }
  rhs /= 3.0L;

  const double np1 = static_cast<double>(n + 1);
  return {static_cast<double>(lhs), static_cast<double>(rhs), 2.0 / 3.0 * np1 * np1 * np1};
}

double relative_residual(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(a)); }

double SumIdentities::worst_residual() const {
  return std::max(relative_residual(repulsion_lhs, repulsion_rhs), relative_residual(square_lhs, square_rhs));
}

bool SumIdentities::bounds_hold() const {
  const double slack = 1e-9 * (1.0 + std::abs(square_lhs));
  return std::abs(repulsion_lhs) <= repulsion_bound * (1.0 + 1e-12) && square_lhs >= square_lower - slack &&
         square_lhs <= square_upper + slack;
}

SumIdentities proof_identity_sums(std::span<const double> T) {
  require_interior(T, "proof_identity_sums");
  const auto t = augmented(T);
  const std::size_t m = t.size();
  const std::size_t n = T.size();
  SumIdentities out;

  long double rep = 0.0L, sq = 0.0L;
  for (std::size_t k = 1; k <= n; ++k)
    for (std::size_t j = 0; j < m; ++j) {
      if (j == k) continue;
      rep += t[k] * (1.0L - t[k]) / (t[k] - t[j]);
      sq += t[k] * t[k] / (t[j] - t[k]);
    }
  out.repulsion_lhs = static_cast<double>(rep);
  out.square_lhs = static_cast<double>(sq);

  long double rep_rhs = 0.0L;
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = 0; j < m; ++j)
      if (j != k) rep_rhs += 1.0L - t[k] - t[j];
  out.repulsion_rhs = static_cast<double>(rep_rhs / 2.0L);
  const double nd = static_cast<double>(n);
  out.repulsion_bound = (nd + 1.0) * (nd + 2.0) / 2.0;

  long double pair = 0.0L, tail = 0.0L;
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t j = 1; j <= n; ++j) pair += (t[k] + t[j]) / 2.0L;
    tail += t[k] * t[k] / (1.0L - t[k]);
  }
  out.square_rhs = static_cast<double>(tail - pair);
  out.square_lower = -nd * nd;
  out.square_upper = static_cast<double>(tail);
  return out;
}

std::vector<double> sample_open_domain(std::size_t channels, NoiseStream& stream, double min_gap) {
  if (channels == 0) throw DomainError("sample_open_domain: need at least one channel");
  if (!(min_gap >= 0.0) || min_gap * static_cast<double>(channels + 1) >= 1.0)
    throw DomainError("sample_open_domain: min_gap leaves no room");
  std::vector<double> T(channels);
  for (;;) {
    for (double& t : T) t = stream.next_uniform();
    std::sort(T.begin(), T.end());
    if (min_domain_gap(T) >= min_gap) return T;
  }
}

// ---------------------------------------------------------------------------

MomentSummary summarize(std::span<const double> samples) {
  MomentSummary out;
  out.count = samples.size();
  if (samples.empty()) return out;
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  out.mean = mean;
  if (samples.size() < 2) return out;

  double m2 = 0.0, m4 = 0.0;
  for (double x : samples) {
    const double d = (x - mean) * (x - mean);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  out.variance = m2 * n / (n - 1.0);
  out.stderr_mean = std::sqrt(out.variance / n);
  const double s4 = out.variance * out.variance;
  out.stderr_variance = std::sqrt(std::max(0.0, (m4 - (n - 3.0) / (n - 1.0) * s4) / n));
  return out;
}

EnsembleSummary summarize_paths(const std::vector<PathRecord>& paths, const std::string& observable,
                                const std::function<double(std::span<const double>)>& fn) {
  EnsembleSummary out;
  out.observable = observable;
  out.paths = paths.size();
  if (paths.empty()) return out;
  out.grid = paths.front().grid;
  out.seed = paths.front().seed;
  std::vector<double> column(paths.size());
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    for (std::size_t p = 0; p < paths.size(); ++p) column[p] = fn(paths[p].states.at(i));
    out.moments.push_back(summarize(column));
  }
  return out;
}

std::vector<PathRecord> run_ensemble(const TransmissionState& T0, double s_end, const SymmetryClass& cls,
                                     const SolverConfig& config, std::size_t paths) {
  config.validate(cls);
  std::vector<PathRecord> out(paths);
  for_each_path(paths, [&](std::size_t p) { out[p] = solve_path(T0, s_end, cls, config, p); });
  return out;
}

DomainAudit audit_paths(const std::vector<PathRecord>& paths) {
  DomainAudit audit;
  for (const auto& rec : paths) {
    const bool degenerate = !rec.states.empty() && std::all_of(rec.states.front().begin(), rec.states.front().end(),
                                                               [](double t) { return t == 1.0; });
    bool first_positive = true;
    for (std::size_t i = 0; i < rec.grid.size(); ++i) {
      if (rec.grid[i] <= 0.0) continue;
      const auto& T = rec.states[i];
      ++audit.states_checked;
      if (!in_open_domain(T, 0.0)) ++audit.violations;
      audit.min_gap = std::min(audit.min_gap, min_domain_gap(T));
      if (first_positive && degenerate && std::all_of(T.begin(), T.end(), [](double t) { return t == 1.0; }))
        ++audit.stuck_degenerate;
      first_positive = false;
    }
  }
  return audit;
}

double ucf_target(const SymmetryClass& cls) { return 2.0 / (15.0 * cls.beta()); }

EnsembleSummary ucf_variance(const SymmetryClass& cls, double s_eval, std::size_t paths, const SolverConfig& config,
                             std::vector<PathRecord>* keep) {
  if (paths < 2) throw DomainError("ucf_variance: need at least two paths");
  if (!(s_eval >= 0.0)) throw DomainError("ucf_variance: s_eval must be non-negative");
  SolverConfig cfg = config;
  cfg.record_grid = {s_eval};
  const TransmissionState start{0.0, std::vector<double>(cls.size(), 1.0)};
  auto records = run_ensemble(start, s_eval, cls, cfg, paths);
  EnsembleSummary summary = summarize_paths(records, "g", landauer_g);
  summary.seed = cfg.seed;
  if (keep != nullptr) *keep = std::move(records);
  return summary;
}

UcfResult score_ucf(const EnsembleSummary& summary, const SymmetryClass& cls) {
  if (summary.moments.empty()) throw DomainError("score_ucf: empty summary");
  const MomentSummary& m = summary.moments.back();
  UcfResult r;
  r.var_g = m.variance;
  r.stderr_var_g = m.stderr_variance;
  r.mean_g = m.mean;
  r.target = ucf_target(cls);
  r.paths = m.count;
  r.relative_error = (r.var_g - r.target) / r.target;
  const double deviation = r.var_g - r.target;
  r.z_score = deviation == 0.0 ? 0.0 : deviation / r.stderr_var_g;
  r.pass = std::abs(r.relative_error) <= kUcfRelativeTolerance && std::abs(r.z_score) <= kUcfMaxZ;
  return r;
}

OrderingReport ordering_test(const TransmissionState& low, const TransmissionState& high, double s_end,
                             const SymmetryClass& cls, const SolverConfig& config, std::size_t paths,
                             std::vector<PathRecord>* keep) {
  if (low.T.size() != cls.size() || high.T.size() != cls.size())
    throw DomainError("ordering_test: state size does not match the channel count");
  if (!in_open_domain(low) || !in_open_domain(high)) throw DomainError("ordering_test: states must lie in D_N");
  for (std::size_t k = 0; k < cls.size(); ++k)
    if (!(high.T[k] > low.T[k])) throw DomainError("ordering_test: initial states are not ordered");

  std::vector<std::pair<PathRecord, PathRecord>> pairs(paths);
  for_each_path(paths, [&](std::size_t p) { pairs[p] = solve_coupled(low, high, s_end, cls, config, p); });

  OrderingReport report;
  report.pairs = paths;
  for (const auto& [lo, hi] : pairs) {
    for (std::size_t i = 0; i < lo.grid.size(); ++i) {
      ++report.grid_points;
      double margin = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < cls.size(); ++k) margin = std::min(margin, hi.states[i][k] - lo.states[i][k]);
      report.min_margin = std::min(report.min_margin, margin);
      if (!(margin > 0.0)) ++report.violations;
    }
  }
  if (keep != nullptr) {
    for (auto& [lo, hi] : pairs) {
      keep->push_back(std::move(lo));
      keep->push_back(std::move(hi));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

double kolmogorov_q(double x) {
  if (x < 0.18) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TwoSampleReport ks_two_sample(std::span<const double> a, std::span<const double> b, double threshold) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());

  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }

  TwoSampleReport r;
  r.distance = d;
  r.n = x.size();
  r.m = y.size();
  r.threshold = threshold;
  const double ne = n * m / (n + m);
  const double root = std::sqrt(ne);
  r.p_value = kolmogorov_q((root + 0.12 + 0.11 / root) * d);
  return r;
}

namespace {

std::vector<double> comparison_grid(std::span<const double> times, SolverConfig& cfg, double& s_end) {
  if (times.empty()) throw DomainError("no comparison times");
  for (double s : times)
    if (!(s > 0.0)) throw DomainError("comparison times must be positive");
  s_end = *std::max_element(times.begin(), times.end());
  cfg.record_grid.assign(times.begin(), times.end());
  return record_times(cfg.record_grid, s_end);
}

}  // namespace

MatrixSamples matrix_g_samples(const SymmetryClass& cls, std::span<const double> times, std::size_t paths,
                               const SolverConfig& config) {
  SolverConfig cfg = config;
  double s_end = 0.0;
  const auto grid = comparison_grid(times, cfg, s_end);
  cfg.validate(cls);
  std::vector<std::size_t> slots;
  for (double s : times) slots.push_back(grid_index(grid, s));

  MatrixSamples out;
  out.g.assign(times.size(), std::vector<double>(paths));
  std::mutex merge;
  for_each_path(paths, [&](std::size_t p) {
    const MatrixPath path = evolve_transfer(s_end, cls, cfg, p);
    std::size_t bad = 0;
    for (std::size_t t = 0; t < slots.size(); ++t) {
      const TransmissionState spectrum = transmission_spectrum(path.records[slots[t]]);
      if (!in_open_domain(spectrum, 0.0)) ++bad;
      out.g[t][p] = landauer_g(spectrum.T);
    }
    std::lock_guard lock(merge);
    out.max_defect = std::max(out.max_defect, path.max_defect);
    out.domain_violations += bad;
  });
  return out;
}

std::vector<std::vector<double>> sde_g_samples(const SymmetryClass& cls, std::span<const double> times,
                                               std::size_t paths, const SolverConfig& config,
                                               std::vector<PathRecord>* keep) {
  SolverConfig cfg = config;
  double s_end = 0.0;
  const auto grid = comparison_grid(times, cfg, s_end);
  const TransmissionState start{0.0, std::vector<double>(cls.size(), 1.0)};
  auto records = run_ensemble(start, s_end, cls, cfg, paths);
  std::vector<std::vector<double>> g(times.size(), std::vector<double>(paths));
  for (std::size_t t = 0; t < times.size(); ++t) {
    const std::size_t slot = grid_index(grid, times[t]);
    for (std::size_t p = 0; p < paths; ++p) g[t][p] = landauer_g(records[p].states[slot]);
  }
  if (keep != nullptr) *keep = std::move(records);
  return g;
}

LawEqualityRun law_equality_test(const SymmetryClass& cls, std::span<const double> times, std::size_t paths,
                                 const SolverConfig& config, double threshold) {
  if (paths < kLawEqualityMinPaths)
    throw DomainError("law_equality_test: need at least " + std::to_string(kLawEqualityMinPaths) + " paths");
  SolverConfig sde_cfg = config;
  sde_cfg.seed = config.seed + 1;

  LawEqualityRun run;
  const MatrixSamples matrix = matrix_g_samples(cls, times, paths, config);
  run.max_matrix_defect = matrix.max_defect;
  run.matrix_domain_violations = matrix.domain_violations;
  const auto sde = sde_g_samples(cls, times, paths, sde_cfg, &run.sde_paths);
  for (std::size_t t = 0; t < times.size(); ++t) {
    TwoSampleReport r = ks_two_sample(matrix.g[t], sde[t], threshold);
    r.s = times[t];
    run.reports.push_back(r);
  }
  return run;
}

GrowthProbe lyapunov_growth_probe(const SymmetryClass& cls, const TransmissionState& T0, double s_end,
                                  std::size_t paths, const SolverConfig& config) {
  if (!in_open_domain(T0)) throw DomainError("lyapunov_growth_probe: start must lie in D_N");
  if (paths == 0) throw DomainError("lyapunov_growth_probe: need at least one path");
  const auto records = run_ensemble(T0, s_end, cls, config, paths);

  GrowthProbe probe;
  probe.f = summarize_paths(records, "f", lyapunov_f);
  probe.f.seed = config.seed;
  probe.initial_f = lyapunov_f(T0.T);

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(probe.f.grid.size());
  for (std::size_t i = 0; i < probe.f.grid.size(); ++i) {
    const double x = probe.f.grid[i], y = probe.f.moments[i].mean;
    if (!std::isfinite(y)) probe.all_finite = false;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double det = n * sxx - sx * sx;
  if (det > 0.0) {
    probe.fit_slope = (n * sxy - sx * sy) / det;
    probe.fit_intercept = (sy - probe.fit_slope * sx) / n;
  } else {
    probe.fit_intercept = n > 0.0 ? sy / n : 0.0;
  }
  probe.within_envelope =
      probe.all_finite && std::abs(probe.fit_intercept - probe.initial_f) <= 0.1 * std::abs(probe.initial_f);
  return probe;
}

}  // namespace dmpk
