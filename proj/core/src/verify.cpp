#include "dmpk/verify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <mutex>

#include "dmpk/analysis.hpp"
#include "dmpk/ensemble.hpp"
#include "dmpk/noise.hpp"
#include "dmpk/transfer.hpp"

namespace dmpk {

namespace {

constexpr double kIdentityTol = 1e-9;
constexpr double kMomentZ = 3.0;

// Accumulates z-scores of sample moments against their expected values.
class MomentCheck {
 public:
  MomentCheck(std::string name, std::size_t samples) : result_{std::move(name), samples, 0, 0.0, 0} {}

  void variance(std::span<const double> x, double expected) {
    const MomentSummary m = summarize(x);
    score((m.variance - expected) / m.stderr_variance);
  }

  void covariance(std::span<const double> x, std::span<const double> y, double expected) {
    std::vector<double> prod(x.size());
    const MomentSummary mx = summarize(x), my = summarize(y);
    for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx.mean) * (y[i] - my.mean);
    const MomentSummary mp = summarize(prod);
    score((mp.mean - expected) / mp.stderr_mean);
  }

  CheckResult result() const { return result_; }

 private:
  void score(double z) {
    if (!std::isfinite(z)) z = std::numeric_limits<double>::infinity();
    result_.worst_residual = std::max(result_.worst_residual, std::abs(z));
    if (std::abs(z) > kMomentZ) ++result_.failures;
  }

  CheckResult result_;
};

CheckResult exact_check(std::string name, std::size_t trials, double worst, double tol = 0.0) {
  CheckResult r{std::move(name), trials, 0, worst, 0};
  if (!(worst <= tol)) r.failures = 1;
  return r;
}

std::string class_tag(int beta) { return " beta=" + std::to_string(beta); }

}  // namespace

bool all_pass(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass(); });
}

std::vector<CheckResult> verify_identities(std::size_t trials, std::uint64_t seed) {
  std::vector<CheckResult> out;
  for (int n = 1; n <= 8; ++n) {
    NoiseStream stream(seed, static_cast<std::uint64_t>(n));
    CheckResult z{"Z identity N=" + std::to_string(n), trials, 0, 0.0, 0};
    CheckResult zb{"Z bound N=" + std::to_string(n), trials, 0, 0.0, 0};
    CheckResult sums{"sum identities N=" + std::to_string(n), trials, 0, 0.0, 0};
    CheckResult sb{"sum bounds N=" + std::to_string(n), trials, 0, 0.0, 0};
    for (std::size_t t = 0; t < trials; ++t) {
      const auto T = sample_open_domain(static_cast<std::size_t>(n), stream);
      const ZIdentity id = proof_identity_Z(T);
      const double rz = relative_residual(id.lhs, id.rhs);
      z.worst_residual = std::max(z.worst_residual, rz);
      if (!(rz <= kIdentityTol)) ++z.failures;
      const double ratio = std::abs(id.lhs) / id.bound;
      zb.worst_residual = std::max(zb.worst_residual, ratio);
      if (!(ratio <= 1.0)) ++zb.failures;

      const SumIdentities s = proof_identity_sums(T);
      const double rs = s.worst_residual();
      sums.worst_residual = std::max(sums.worst_residual, rs);
      if (!(rs <= kIdentityTol)) ++sums.failures;
      if (!s.bounds_hold()) ++sb.failures;
      sb.worst_residual = std::max(sb.worst_residual, std::abs(s.repulsion_lhs) / s.repulsion_bound);
    }
    out.push_back(z);
    out.push_back(zb);
    out.push_back(sums);
    out.push_back(sb);
  }
  return out;
}

std::vector<CheckResult> verify_ordering(std::size_t pairs, std::uint64_t seed, std::vector<PathRecord>* keep) {
  constexpr int kChannels = 4;
  std::vector<CheckResult> out;
  for (int beta : {1, 2}) {
    const SymmetryClass cls(beta, kChannels);
    TransmissionState high{0.0, {}}, low{0.0, {}};
    for (int k = 1; k <= kChannels; ++k) {
      high.T.push_back(static_cast<double>(k) / (kChannels + 1));
      low.T.push_back(high.T.back() - 0.01);
    }
    SolverConfig cfg;
    cfg.seed = seed;
    for (int i = 1; i < 20; ++i) cfg.record_grid.push_back(0.1 * i);
    const OrderingReport r = ordering_test(low, high, 2.0, cls, cfg, pairs, keep);
    CheckResult c{"ordering" + class_tag(beta), pairs, r.violations, std::max(0.0, -r.min_margin), 0};
    out.push_back(c);
  }
  return out;
}

std::vector<CheckResult> verify_noise(std::size_t samples, std::uint64_t seed) {
  constexpr int kChannels = 3;
  constexpr double ds = 0.01;
  std::vector<CheckResult> out;
  for (int beta : {1, 2}) {
    const SymmetryClass cls(beta, kChannels);
    const std::size_t n = cls.size();
    const double nd = static_cast<double>(n);
    NoiseStream stream(seed, static_cast<std::uint64_t>(beta));

    // Column-major sample tables: one vector per scalar feature.
    auto table = [&](std::size_t count) { return std::vector<std::vector<double>>(count, std::vector<double>(samples)); };
    auto ap_re = table(n * n), ap_im = table(n * n), am_re = table(n * n), am_im = table(n * n);
    auto b_re = table(n * n), b_im = table(n * n), dB = table(n);
    double a_antiherm = 0.0, a_diag_real = 0.0, a_conj = 0.0, b_sym = 0.0;

    for (std::size_t t = 0; t < samples; ++t) {
      const NoiseIncrement inc = assemble_L_increment(cls, ds, stream);
      a_antiherm = std::max(a_antiherm, (inc.da_plus + inc.da_plus.adjoint()).cwiseAbs().maxCoeff());
      a_diag_real = std::max(a_diag_real, inc.da_plus.diagonal().real().cwiseAbs().maxCoeff());
      if (beta == 1) {
        a_conj = std::max(a_conj, (inc.da_minus - inc.da_plus.conjugate()).cwiseAbs().maxCoeff());
        b_sym = std::max(b_sym, (inc.db - inc.db.transpose()).cwiseAbs().maxCoeff());
      }
      std::vector<double> diag(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const auto e = static_cast<Eigen::Index>(i), f = static_cast<Eigen::Index>(j);
          ap_re[i * n + j][t] = inc.da_plus(e, f).real();
          ap_im[i * n + j][t] = inc.da_plus(e, f).imag();
          am_re[i * n + j][t] = inc.da_minus(e, f).real();
          am_im[i * n + j][t] = inc.da_minus(e, f).imag();
          b_re[i * n + j][t] = inc.db(e, f).real();
          b_im[i * n + j][t] = inc.db(e, f).imag();
        }
        diag[i] = inc.db(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
      }
      const auto B = driving_brownian(diag, cls);
      for (std::size_t k = 0; k < n; ++k) dB[k][t] = B[k];
    }

    const std::string tag = class_tag(beta);
    MomentCheck a_off("a off-diagonal variance" + tag, samples), a_diag("a diagonal variance" + tag, samples);
    MomentCheck b_off("b off-diagonal variance" + tag, samples), b_diag("b diagonal variance" + tag, samples);
    MomentCheck cross("a-b covariance" + tag, samples), bm("driving Brownian variance" + tag, samples);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t e = i * n + j;
        if (i == j) {
          a_diag.variance(ap_im[e], ds / nd);
          const double bd = beta == 1 ? ds / (nd + 1.0) : ds / (2.0 * nd);
          b_diag.variance(b_re[e], bd);
          b_diag.variance(b_im[e], bd);
          cross.covariance(ap_im[e], b_im[e], 0.0);
        } else {
          if (i < j) {
            a_off.variance(ap_re[e], ds / (2.0 * nd));
            a_off.variance(ap_im[e], ds / (2.0 * nd));
            cross.covariance(ap_re[e], b_re[e], 0.0);
          }
          if (beta == 2 || i < j) {
            const double bo = beta == 1 ? ds / (2.0 * (nd + 1.0)) : ds / (2.0 * nd);
            b_off.variance(b_re[e], bo);
            b_off.variance(b_im[e], bo);
          }
        }
      }
    }
    for (std::size_t k = 0; k < n; ++k) bm.variance(dB[k], ds);
    out.push_back(a_off.result());
    out.push_back(a_diag.result());
    out.push_back(b_off.result());
    out.push_back(b_diag.result());
    out.push_back(cross.result());
    out.push_back(bm.result());

    out.push_back(exact_check("a anti-hermitian" + tag, samples, a_antiherm));
    out.push_back(exact_check("a diagonal real part" + tag, samples, a_diag_real));
    if (beta == 1) {
      out.push_back(exact_check("a minus equals conj(a plus)" + tag, samples, a_conj));
      out.push_back(exact_check("b symmetric" + tag, samples, b_sym));
      MomentCheck pair("b transpose pair covariance" + tag, samples);
      pair.covariance(b_re[1], b_re[n], ds / (2.0 * (nd + 1.0)));
      out.push_back(pair.result());
    } else {
      MomentCheck minus("a minus variance" + tag, samples), indep("a plus/minus covariance" + tag, samples);
      MomentCheck pair("b transpose pair covariance" + tag, samples);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          minus.variance(am_re[i * n + j], ds / (2.0 * nd));
          minus.variance(am_im[i * n + j], ds / (2.0 * nd));
          indep.covariance(ap_re[i * n + j], am_re[i * n + j], 0.0);
          pair.covariance(b_re[i * n + j], b_re[j * n + i], 0.0);
        }
        minus.variance(am_im[i * n + i], ds / nd);
        indep.covariance(ap_im[i * n + i], am_im[i * n + i], 0.0);
      }
      out.push_back(minus.result());
      out.push_back(indep.result());
      out.push_back(pair.result());
    }
    // Var(dB_k) = den * Var(Re db_kk) must equal ds as an identity of the laws.
    const double diag_var = beta == 1 ? ds / (nd + 1.0) : ds / (2.0 * nd);
    out.push_back(
        exact_check("driving Brownian variance algebra" + tag, 1, std::abs(cls.denominator() * diag_var / ds - 1.0), 1e-15));
  }
  return out;
}

std::vector<CheckResult> verify_constraints(std::size_t paths, std::uint64_t seed) {
  constexpr int kChannels = 4;
  std::vector<CheckResult> out;
  for (int beta : {1, 2}) {
    const SymmetryClass cls(beta, kChannels);
    SolverConfig cfg;
    cfg.seed = seed;
    cfg.dt_base = 1e-4;
    cfg.reproject_every = 1;
    for (int i = 1; i < 1000; ++i) cfg.record_grid.push_back(1e-3 * i);
    double worst = 0.0, worst_tr = 0.0;
    std::size_t fail = 0, fail_tr = 0;
    std::uint64_t steps = 0;
    std::mutex merge;
    for_each_path(paths, [&](std::size_t p) {
      const MatrixPath path = evolve_transfer(1.0, cls, cfg, p);
      std::lock_guard lock(merge);
      steps = std::max(steps, path.steps);
      worst = std::max(worst, path.max_defect);
      if (path.max_defect > 1e-10) ++fail;
      if (path.max_time_reversal_defect) {
        worst_tr = std::max(worst_tr, *path.max_time_reversal_defect);
        if (*path.max_time_reversal_defect > 1e-12) ++fail_tr;
      }
    });
    const std::string tag = class_tag(beta) + " (" + std::to_string(steps) + " steps)";
    out.push_back({"current conservation" + tag, paths, fail, worst, 0});
    if (beta == 1) out.push_back({"time reversal" + tag, paths, fail_tr, worst_tr, 0});
  }
  return out;
}

std::vector<CheckResult> verify_small_s(std::size_t paths, std::uint64_t seed) {
  const SymmetryClass cls(2, 4);
  SolverConfig cfg;
  cfg.seed = seed;
  std::vector<double> gaps(paths);
  for_each_path(paths, [&](std::size_t p) {
    const MatrixPath path = evolve_transfer(0.01, cls, cfg, p);
    gaps[p] = min_domain_gap(transmission_spectrum(path.records.back()).T);
  });
  CheckResult c{"small-s nondegeneracy beta=2 N=4 s=0.01", paths, 0, 0.0, paths / 100};
  double smallest = std::numeric_limits<double>::infinity();
  for (double g : gaps) {
    if (!(g > 1e-8)) ++c.failures;
    smallest = std::min(smallest, g);
  }
  // Residual: the smallest gap seen, for the record.
  c.worst_residual = paths > 0 ? smallest : 0.0;
  return {c};
}

}  // namespace dmpk
