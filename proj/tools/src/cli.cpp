#include "dmpk/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <stdexcept>

#include "CLI11.hpp"
#include "dmpk/analysis.hpp"
#include "dmpk/coulomb.hpp"
#include "dmpk/ensemble.hpp"
#include "dmpk/errors.hpp"
#include "dmpk/transfer.hpp"
#include "dmpk/verify.hpp"
#include "json.hpp"

namespace dmpk::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr int kManifestSchema = 1;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flags shared by the experiment subcommands.
struct RunFlags {
  int beta = 2;
  int channels = 4;
  double length = 1.0;
  std::size_t paths = 10;
  std::uint64_t seed = 0;
  double dt = 1e-3;
  double eta = 0.1;
  std::optional<int> degenerate_n;
  std::string chart = "T";
  std::string out;
};

struct Invocation {
  std::vector<std::string> args;
  std::string started_at;
  std::chrono::steady_clock::time_point start;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void add_run_flags(CLI::App* app, RunFlags& f) {
  app->add_option("--beta", f.beta, "Symmetry class (1 or 2)")->check(CLI::IsMember({1, 2}));
  app->add_option("--channels", f.channels, "Number of channels N")->check(CLI::PositiveNumber);
  app->add_option("--length", f.length, "Wire length s")->check(CLI::NonNegativeNumber);
  app->add_option("--paths", f.paths, "Number of Monte-Carlo paths");
  app->add_option("--seed", f.seed, "Master seed");
  app->add_option("--dt", f.dt, "Base step")->check(CLI::PositiveNumber);
  app->add_option("--eta", f.eta, "Gap guard factor")->check(CLI::PositiveNumber);
  app->add_option("--degenerate-n", f.degenerate_n, "Approximant index for the all-ones start");
}

SymmetryClass make_class(const RunFlags& f) {
  try {
    return SymmetryClass(f.beta, f.channels);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

SolverConfig make_config(const RunFlags& f, const SymmetryClass& cls) {
  SolverConfig cfg;
  cfg.dt_base = f.dt;
  cfg.eta_gap = f.eta;
  cfg.degenerate_n = f.degenerate_n;
  cfg.seed = f.seed;
  if (f.chart == "lambda") {
    cfg.chart = Chart::Lambda;
  } else if (f.chart != "T") {
    throw UsageError("--chart must be T or lambda");
  }
  try {
    cfg.validate(cls);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

json config_json(const RunFlags& f, const SymmetryClass& cls, const SolverConfig& cfg) {
  return {
      {"beta", f.beta},
      {"channels", f.channels},
      {"length", f.length},
      {"paths", f.paths},
      {"seed", f.seed},
      {"dt", cfg.dt_base},
      {"eta", cfg.eta_gap},
      {"max_halvings", cfg.max_halvings},
      {"degenerate_n", cfg.resolved_degenerate_n(cls)},
      {"chart", f.chart},
      {"reproject_every", cfg.reproject_every},
  };
}

void write_manifest(const std::string& out_path, const std::string& subcommand, const json& config,
                    std::uint64_t seed, const Invocation& inv) {
  json m;
  m["schema_version"] = kManifestSchema;
  m["subcommand"] = subcommand;
  m["config"] = config;
  m["seed"] = seed;
  m["version"] = DMPK_VERSION;
  m["started_at"] = inv.started_at;
  m["elapsed_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - inv.start).count();
  m["worker_threads"] = worker_count();
  m["argv"] = inv.args;
  std::ofstream file(out_path + ".manifest.json");
  if (!file) throw UsageError("cannot write manifest next to " + out_path);
  file << m.dump(2) << '\n';
}

void write_json(const json& doc, const std::string& out_path, std::ostream& out) {
  out << doc.dump(2) << '\n';
  if (out_path.empty()) return;
  std::ofstream file(out_path);
  if (!file) throw UsageError("cannot open " + out_path);
  file << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

int cmd_simulate(const RunFlags& f, const std::string& mode, const std::vector<double>& grid, const Invocation& inv) {
  const SymmetryClass cls = make_class(f);
  SolverConfig cfg = make_config(f, cls);
  cfg.record_grid = grid;
  if (f.paths < 1) throw UsageError("--paths must be at least 1");
  if (mode != "sde" && cfg.chart == Chart::Lambda) throw UsageError("--chart applies to --mode sde only");
  if (f.out.empty()) throw UsageError("simulate needs --out");

  const std::vector<double> times = record_times(grid, f.length);
  std::vector<std::vector<std::vector<double>>> states(f.paths);
  if (mode == "sde") {
    const TransmissionState start{0.0, std::vector<double>(cls.size(), 1.0)};
    auto paths = run_ensemble(start, f.length, cls, cfg, f.paths);
    for (std::size_t p = 0; p < f.paths; ++p) states[p] = std::move(paths[p].states);
  } else if (mode == "matrix") {
    for_each_path(f.paths, [&](std::size_t p) {
      const MatrixPath path = evolve_transfer(f.length, cls, cfg, p);
      for (const auto& m : path.records) states[p].push_back(transmission_spectrum(m).T);
    });
  } else {
    const CoulombSystem sys = dmpk_as_coulomb(cls);
    const std::vector<double> x0 = degenerate_start(cls, cfg.resolved_degenerate_n(cls)).T;
    for_each_path(f.paths, [&](std::size_t p) { states[p] = coulomb_solve(sys, x0, f.length, cfg, p).states; });
  }

  std::ofstream csv(f.out);
  if (!csv) throw UsageError("cannot open " + f.out);
  csv << "path_id,s";
  for (std::size_t k = 1; k <= cls.size(); ++k) csv << ",T_" << k;
  csv << '\n';
  char buf[32];
  for (std::size_t p = 0; p < f.paths; ++p) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      csv << p;
      std::snprintf(buf, sizeof buf, "%.17g", times[i]);
      csv << ',' << buf;
      for (double t : states[p][i]) {
        std::snprintf(buf, sizeof buf, "%.17g", t);
        csv << ',' << buf;
      }
      csv << '\n';
    }
  }
  csv.close();

  json config = config_json(f, cls, cfg);
  config["mode"] = mode;
  config["grid"] = times;
  write_manifest(f.out, "simulate", config, f.seed, inv);
  return kPass;
}

int cmd_ucf(const RunFlags& f, const Invocation& inv, std::ostream& out) {
  const SymmetryClass cls = make_class(f);
  const SolverConfig cfg = make_config(f, cls);
  if (f.paths < 2) throw UsageError("--paths must be at least 2");
  const UcfResult r = score_ucf(ucf_variance(cls, f.length, f.paths, cfg), cls);
  json doc = {
      {"beta", f.beta},         {"channels", f.channels},
      {"length", f.length},     {"paths", f.paths},
      {"seed", f.seed},         {"var_g", r.var_g},
      {"stderr_var_g", r.stderr_var_g}, {"mean_g", r.mean_g},
      {"target", r.target},     {"relative_error", r.relative_error},
      {"z_score", r.z_score},   {"pass", r.pass},
  };
  write_json(doc, f.out, out);
  if (!f.out.empty()) write_manifest(f.out, "ucf", config_json(f, cls, cfg), f.seed, inv);
  return r.pass ? kPass : kCheckFailed;
}

int cmd_compare(const RunFlags& f, const std::vector<double>& times, double threshold, bool self_check,
                const Invocation& inv, std::ostream& out) {
  const SymmetryClass cls = make_class(f);
  const SolverConfig cfg = make_config(f, cls);
  if (f.paths < kLawEqualityMinPaths) {
    throw UsageError("--paths must be at least " + std::to_string(kLawEqualityMinPaths));
  }
  if (times.empty()) throw UsageError("--times is empty");
  for (double s : times) {
    if (!(s > 0.0)) throw UsageError("--times must be positive");
  }

  std::vector<TwoSampleReport> reports;
  if (self_check) {
    const MatrixSamples m = matrix_g_samples(cls, times, f.paths, cfg);
    for (std::size_t i = 0; i < times.size(); ++i) {
      reports.push_back(ks_two_sample(m.g[i], m.g[i], threshold));
      reports.back().s = times[i];
    }
  } else {
    reports = law_equality_test(cls, times, f.paths, cfg, threshold).reports;
  }

  json doc = json::array();
  bool all = true;
  for (const auto& r : reports) {
    doc.push_back({{"s", r.s},
                   {"ks_distance", r.distance},
                   {"p_value", r.p_value},
                   {"threshold", r.threshold},
                   {"n", r.n},
                   {"m", r.m},
                   {"pass", r.pass()}});
    all = all && r.pass();
  }
  write_json(doc, f.out, out);
  if (!f.out.empty()) {
    json config = config_json(f, cls, cfg);
    config["times"] = times;
    config["threshold"] = threshold;
    config["self_check"] = self_check;
    write_manifest(f.out, "compare", config, f.seed, inv);
  }
  return all ? kPass : kCheckFailed;
}

int cmd_verify(const std::string& suite, std::size_t trials, std::uint64_t seed, const std::string& out_path,
               const Invocation& inv, std::ostream& out) {
  std::vector<CheckResult> checks;
  auto pick = [&](std::size_t fallback) { return trials > 0 ? trials : fallback; };
  if (suite == "identities") {
    checks = verify_identities(pick(10000), seed);
  } else if (suite == "ordering") {
    checks = verify_ordering(pick(1000), seed);
  } else if (suite == "noise") {
    checks = verify_noise(pick(100000), seed);
  } else if (suite == "constraints") {
    checks = verify_constraints(pick(20), seed);
  } else {
    checks = verify_small_s(pick(2000), seed);
  }
  json doc = json::array();
  for (const auto& c : checks) {
    doc.push_back({{"name", c.name},
                   {"trials", c.trials},
                   {"failures", c.failures},
                   {"worst_residual", c.worst_residual},
                   {"pass", c.pass()}});
  }
  write_json(doc, out_path, out);
  if (!out_path.empty()) {
    write_manifest(out_path, "verify", {{"suite", suite}, {"trials", trials}, {"seed", seed}}, seed, inv);
  }
  return all_pass(checks) ? kPass : kCheckFailed;
}

int replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  std::ifstream file(manifest_path);
  if (!file) throw UsageError("cannot open " + manifest_path);
  json m;
  try {
    m = json::parse(file);
  } catch (const json::exception& e) {
    throw UsageError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!m.contains("schema_version") || m["schema_version"] != kManifestSchema) {
    throw UsageError("unsupported manifest schema");
  }
  if (!m.contains("argv") || !m["argv"].is_array()) throw UsageError("manifest has no argv");
  const auto args = m["argv"].get<std::vector<std::string>>();
  if (args.empty() || args.front() == "replay") throw UsageError("manifest argv is not a replayable run");
  return run_cli(args, out, err);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Invocation inv{args, utc_now(), std::chrono::steady_clock::now()};

  CLI::App app{"Monte-Carlo simulation of the DMPK equation and its transfer-matrix model", "dmpk"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DMPK_VERSION);

  RunFlags sim;
  std::string mode = "sde";
  std::vector<double> grid;
  auto* simulate = app.add_subcommand("simulate", "Write sampled paths to CSV");
  add_run_flags(simulate, sim);
  simulate->add_option("--mode", mode, "Engine")->check(CLI::IsMember({"sde", "matrix", "coulomb"}));
  simulate->add_option("--grid", grid, "Record times, comma separated")->delimiter(',');
  simulate->add_option("--chart", sim.chart, "Coordinates for the sde engine (T or lambda)");
  simulate->add_option("--out", sim.out, "CSV output path")->required();

  RunFlags ucf;
  ucf.channels = 32;
  ucf.length = 6.0;
  ucf.paths = 20000;
  auto* ucf_cmd = app.add_subcommand("ucf", "Variance of the conductance from the all-ones start");
  add_run_flags(ucf_cmd, ucf);
  ucf_cmd->add_option("--out", ucf.out, "Also write the summary JSON here");

  RunFlags cmp;
  cmp.paths = 5000;
  std::vector<double> times{0.5, 1.0, 2.0};
  double threshold = kLawEqualityThreshold;
  bool self_check = false;
  auto* compare = app.add_subcommand("compare", "KS comparison of g between the matrix and DMPK engines");
  add_run_flags(compare, cmp);
  compare->add_option("--times", times, "Comparison times, comma separated")->delimiter(',');
  compare->add_option("--threshold", threshold, "Largest accepted KS distance")->check(CLI::PositiveNumber);
  compare->add_flag("--self-check", self_check, "Compare the matrix sample with itself");
  compare->add_option("--out", cmp.out, "Also write the report JSON here");

  std::string suite;
  std::size_t trials = 0;
  std::uint64_t verify_seed = 0;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("--suite", suite, "Suite name")
      ->required()
      ->check(CLI::IsMember({"identities", "ordering", "noise", "constraints", "smalls"}));
  verify->add_option("--trials", trials, "Trials, paths or samples (0 = suite default)");
  verify->add_option("--seed", verify_seed, "Master seed");
  verify->add_option("--out", verify_out, "Also write the report JSON here");

  std::string manifest;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay_cmd->add_option("manifest", manifest, "Manifest JSON")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kPass;
  } catch (const CLI::CallForVersion&) {
    out << DMPK_VERSION << '\n';
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "dmpk: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, mode, grid, inv);
    if (ucf_cmd->parsed()) return cmd_ucf(ucf, inv, out);
    if (compare->parsed()) return cmd_compare(cmp, times, threshold, self_check, inv, out);
    if (verify->parsed()) return cmd_verify(suite, trials, verify_seed, verify_out, inv, out);
    return replay(manifest, out, err);
  } catch (const UsageError& e) {
    err << "dmpk: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "dmpk: numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
}

}  // namespace dmpk::cli
