#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include "json.hpp"
#include <sstream>

#include "dmpk/cli.hpp"

using dmpk::cli::run_cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("dmpk_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, dmpk::cli::kUsageError);
  EXPECT_EQ(run({"bogus"}).code, dmpk::cli::kUsageError);
  EXPECT_EQ(run({"simulate"}).code, dmpk::cli::kUsageError);
  EXPECT_EQ(run({"simulate", "--beta", "3", "--out", path("x.csv")}).code, dmpk::cli::kUsageError);
  EXPECT_EQ(run({"verify", "--suite", "nope"}).code, dmpk::cli::kUsageError);
  EXPECT_EQ(run({"compare", "--paths", "10"}).code, dmpk::cli::kUsageError);
  EXPECT_EQ(run({"simulate", "--mode", "matrix", "--chart", "lambda", "--out", path("x.csv")}).code,
            dmpk::cli::kUsageError);
  EXPECT_EQ(run({"replay", path("missing.json")}).code, dmpk::cli::kUsageError);
}

TEST_F(CliTest, SimulateWritesCsvAndManifest) {
  const std::string out = path("paths.csv");
  const std::vector<std::string> args{"simulate", "--beta", "2", "--channels", "3", "--length", "0.2",
                                      "--paths", "2", "--seed", "5", "--grid", "0.1", "--out", out};
  ASSERT_EQ(run(args).code, dmpk::cli::kPass);
  std::istringstream csv(slurp(out));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "path_id,s,T_1,T_2,T_3");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 2 * 3);

  const auto manifest = nlohmann::json::parse(slurp(out + ".manifest.json"));
  EXPECT_EQ(manifest["schema_version"], 1);
  EXPECT_EQ(manifest["subcommand"], "simulate");
  EXPECT_EQ(manifest["seed"], 5);
  EXPECT_EQ(manifest["config"]["degenerate_n"], 300);
  EXPECT_TRUE(manifest.contains("argv"));

  // Same arguments, same bytes.
  const std::string first = slurp(out);
  ASSERT_EQ(run(args).code, dmpk::cli::kPass);
  EXPECT_EQ(slurp(out), first);

  // Replay reproduces the file.
  fs::remove(out);
  ASSERT_EQ(run({"replay", out + ".manifest.json"}).code, dmpk::cli::kPass);
  EXPECT_EQ(slurp(out), first);
}

TEST_F(CliTest, SimulateOtherEngines) {
  for (const std::string mode : {"matrix", "coulomb"}) {
    const std::string out = path(mode + ".csv");
    ASSERT_EQ(run({"simulate", "--mode", mode, "--channels", "2", "--length", "0.1", "--paths", "1", "--out", out})
                  .code,
              dmpk::cli::kPass)
        << mode;
    EXPECT_NE(slurp(out).find("T_2"), std::string::npos);
  }
}

TEST_F(CliTest, ZeroLengthRowsAreTheStart) {
  const std::string out = path("zero.csv");
  ASSERT_EQ(run({"simulate", "--channels", "2", "--length", "0", "--paths", "1", "--out", out}).code,
            dmpk::cli::kPass);
  EXPECT_EQ(slurp(out), "path_id,s,T_1,T_2\n0,0,1,1\n");
}

TEST_F(CliTest, UcfAtZeroLengthFails) {
  const auto r = run({"ucf", "--channels", "2", "--length", "0", "--paths", "3"});
  EXPECT_EQ(r.code, dmpk::cli::kCheckFailed);
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["var_g"], 0.0);
  EXPECT_FALSE(doc["pass"].get<bool>());
}

TEST_F(CliTest, VerifyReportsJson) {
  const std::string out = path("verify.json");
  const auto r = run({"verify", "--suite", "identities", "--trials", "5", "--out", out});
  EXPECT_EQ(r.code, dmpk::cli::kPass);
  const auto doc = nlohmann::json::parse(slurp(out));
  ASSERT_TRUE(doc.is_array());
  ASSERT_FALSE(doc.empty());
  for (const auto& c : doc) EXPECT_TRUE(c["pass"].get<bool>()) << c["name"];
  EXPECT_TRUE(fs::exists(out + ".manifest.json"));
}

TEST_F(CliTest, CompareSelfCheckIsExact) {
  const auto r = run({"compare", "--channels", "2", "--paths", "1000", "--times", "0.1", "--dt", "0.01",
                      "--self-check"});
  EXPECT_EQ(r.code, dmpk::cli::kPass);
  const auto doc = nlohmann::json::parse(r.out);
  ASSERT_EQ(doc.size(), 1u);
  EXPECT_EQ(doc[0]["ks_distance"], 0.0);
}
