// Acceptance suite: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit status is zero only if every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dmpk/analysis.hpp"
#include "dmpk/coulomb.hpp"
#include "dmpk/ensemble.hpp"
#include "dmpk/verify.hpp"

using namespace dmpk;

namespace {

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Outcome& o) {
  std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void progress(const char* what) {
  static const auto start = std::chrono::steady_clock::now();
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::fprintf(stderr, "[%7.1fs] %s\n", t, what);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome from_checks(const std::vector<CheckResult>& checks) {
  Outcome o{all_pass(checks), ""};
  for (const auto& c : checks) {
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += fmt("%s %zu/%zu fail (worst %.3g)", c.name.c_str(), c.failures, c.trials, c.worst_residual);
  }
  return o;
}

// Paths kept from the SDE runs, audited together at the end.
std::vector<PathRecord> audited;
std::size_t matrix_violations = 0;

Outcome ucf() {
  const SymmetryClass cls(2, 32);
  SolverConfig config;
  config.seed = kSeed;
  config.eta_gap = 0.5;
  std::vector<PathRecord> keep;
  const UcfResult r = score_ucf(ucf_variance(cls, 6.0, 20000, config, &keep), cls);
  audited.insert(audited.end(), std::make_move_iterator(keep.begin()), std::make_move_iterator(keep.end()));
  return {r.pass, fmt("Var(g) = %.5f +- %.5f, target %.5f, rel %+.3f, z %+.2f, <g> = %.4f, %zu paths", r.var_g,
                      r.stderr_var_g, r.target, r.relative_error, r.z_score, r.mean_g, r.paths)};
}

Outcome law_equality() {
  const SymmetryClass cls(2, 4);
  SolverConfig config;
  config.seed = kSeed + 100;
  const std::vector<double> times{0.5, 1.0, 2.0};
  LawEqualityRun run = law_equality_test(cls, times, 5000, config);
  matrix_violations += run.matrix_domain_violations;
  audited.insert(audited.end(), std::make_move_iterator(run.sde_paths.begin()),
                 std::make_move_iterator(run.sde_paths.end()));
  Outcome o{true, ""};
  for (const auto& r : run.reports) {
    o.pass = o.pass && r.pass();
    o.detail += fmt("s=%g KS %.4f (p %.3f); ", r.s, r.distance, r.p_value);
  }
  o.detail += fmt("max matrix defect %.2e", run.max_matrix_defect);
  return o;
}

Outcome ordering() { return from_checks(verify_ordering(1000, kSeed + 200, &audited)); }

Outcome coulomb_equivalence() {
  Outcome o{true, ""};
  for (int beta : {1, 2}) {
    const SymmetryClass cls(beta, 4);
    SolverConfig config;
    config.seed = kSeed + 300 + beta;
    for (int i = 1; i < 10; ++i) config.record_grid.push_back(0.1 * i);
    const CoulombSystem system = dmpk_as_coulomb(cls);
    const TransmissionState start{0.0, std::vector<double>(4, 1.0)};
    const std::vector<double> x0 = degenerate_start(cls, config.resolved_degenerate_n(cls)).T;
    constexpr std::size_t kPaths = 100;
    std::vector<PathRecord> generic(kPaths), special(kPaths);
    for_each_path(kPaths, [&](std::size_t p) {
      generic[p] = coulomb_solve(system, x0, 1.0, config, p);
      special[p] = solve_path(start, 1.0, cls, config, p);
    });
    double worst = 0.0;
    for (std::size_t p = 0; p < kPaths; ++p) {
      // Index 0 holds the start each engine was given.
      for (std::size_t i = 1; i < generic[p].states.size(); ++i) {
        for (std::size_t k = 0; k < 4; ++k) {
          worst = std::max(worst, std::abs(generic[p].states[i][k] - special[p].states[i][k]));
        }
      }
    }
    o.pass = o.pass && worst <= 1e-12;
    o.detail += fmt("%sbeta=%d max |diff| %.2e over %zu paths", o.detail.empty() ? "" : "; ", beta, worst, kPaths);
    audited.insert(audited.end(), std::make_move_iterator(generic.begin()), std::make_move_iterator(generic.end()));
    audited.insert(audited.end(), std::make_move_iterator(special.begin()), std::make_move_iterator(special.end()));
  }
  return o;
}

Outcome domain() {
  const DomainAudit a = audit_paths(audited);
  const bool pass = a.violations == 0 && a.stuck_degenerate == 0 && matrix_violations == 0;
  return {pass, fmt("%zu paths, %zu states, %zu outside D_N, %zu stuck at the all-ones start, min gap %.3g, "
                    "%zu matrix spectra outside D_N",
                    audited.size(), a.states_checked, a.violations, a.stuck_degenerate, a.min_gap,
                    matrix_violations)};
}

}  // namespace

int main() {
  std::fprintf(stderr, "worker threads: %zu\n", worker_count());

  progress("identities");
  const Outcome identities = from_checks(verify_identities(10000, kSeed + 400));
  progress("noise");
  const Outcome noise = from_checks(verify_noise(100000, kSeed + 500));
  progress("constraints");
  const Outcome constraints = from_checks(verify_constraints(20, kSeed + 600));
  progress("small length");
  const Outcome small = from_checks(verify_small_s(2000, kSeed + 700));
  progress("coulomb equivalence");
  const Outcome coulomb = coulomb_equivalence();
  progress("ordering");
  const Outcome order = ordering();
  progress("law equality");
  const Outcome law = law_equality();
  progress("conductance fluctuations");
  const Outcome fluctuations = ucf();
  progress("done");

  report(1, "conductance fluctuations", fluctuations);
  report(2, "law equality", law);
  report(3, "monotone coupling", order);
  report(4, "domain", domain());
  report(5, "group conservation", constraints);
  report(6, "identities", identities);
  report(7, "noise law", noise);
  report(8, "coulomb equivalence", coulomb);
  report(9, "small-length nondegeneracy", small);
  return failures == 0 ? 0 : 1;
}
