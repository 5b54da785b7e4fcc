// End-to-end runs of the wspec binary: exit codes, files and determinism.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <wspec/simulation.hpp>

#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "wspec_cli_e2e";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = "cd '" + work_dir().string() + "' && " + env + " '" + std::string(WSPEC_BINARY) + "' " +
                          args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_series(const std::string& name, const std::vector<double>& x, double scale = 1.0) {
  std::ofstream out(work_dir() / name);
  out.precision(17);
  for (double v : x) out << v * scale << "\n";
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    write_series("wn.csv", oracle::normals(512, 1));
    write_series("const.csv", std::vector<double>(64, 5.0));
    const auto ls1 = wspec::simulate(wspec::ls1_process(1024, 3)).values;
    write_series("ls1.csv", ls1);
    write_series("ls1x10.csv", ls1, 10.0);
    std::ofstream(work_dir() / "bad.cfg") << "method = DM\ncolour = blue\n";
    std::ofstream(work_dir() / "dv.cfg") << "method = DV\nlevel = 0.9\n";
  }
};

}  // namespace

TEST_F(CliTest, EstimateWhiteNoiseIsNearlyFlat) {
  ASSERT_EQ(run("estimate wn.csv -o est_wn"), 0);
  const auto rows = read_csv(work_dir() / "est_wn/spectrum.csv");
  ASSERT_EQ(rows.size(), 257u);
  double lo = 1e9, hi = -1e9;
  for (const auto& r : rows) {
    ASSERT_EQ(r.size(), 2u);
    lo = std::min(lo, r[1]);
    hi = std::max(hi, r[1]);
  }
  EXPECT_LT(hi - lo, 0.5);
  const auto bundle = nlohmann::json::parse(slurp(work_dir() / "est_wn/estimate.json"));
  EXPECT_EQ(bundle["status"], "ok");
  EXPECT_EQ(bundle["config"]["method"], "DM");
  EXPECT_GT(bundle["payload"]["selection"]["lambda"].get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(work_dir() / "est_wn/band.csv"));
}

TEST_F(CliTest, EstimateIsReproducible) {
  ASSERT_EQ(run("estimate wn.csv -o rep_a"), 0);
  ASSERT_EQ(run("estimate wn.csv -o rep_b"), 0);
  EXPECT_EQ(slurp(work_dir() / "rep_a/estimate.json"), slurp(work_dir() / "rep_b/estimate.json"));
  ASSERT_EQ(run("estimate --config rep_a/config.txt -o rep_c"), 0);
  EXPECT_EQ(slurp(work_dir() / "rep_a/estimate.json"), slurp(work_dir() / "rep_c/estimate.json"));
}

TEST_F(CliTest, EstimateUsageErrorsWriteNothing) {
  EXPECT_EQ(run("estimate wn.csv -m XX -o bad_method"), 2);
  EXPECT_FALSE(fs::exists(work_dir() / "bad_method"));
  EXPECT_EQ(run("estimate missing.csv -o bad_input"), 2);
  EXPECT_FALSE(fs::exists(work_dir() / "bad_input"));
  EXPECT_EQ(run("estimate wn.csv --config bad.cfg -o bad_cfg"), 2);
  EXPECT_FALSE(fs::exists(work_dir() / "bad_cfg"));
  EXPECT_EQ(run("estimate wn.csv --level 2 -o bad_level"), 2);
  EXPECT_EQ(run("estimate wn.csv --unknown-flag"), 2);
}

TEST_F(CliTest, EstimateConfigFileAndFlags) {
  ASSERT_EQ(run("estimate wn.csv --config dv.cfg -m LS -o cfg_mix"), 0);
  const auto bundle = nlohmann::json::parse(slurp(work_dir() / "cfg_mix/estimate.json"));
  EXPECT_EQ(bundle["config"]["method"], "LS");
  EXPECT_EQ(bundle["config"]["level"], "0.9");
}

TEST_F(CliTest, EstimateNonconvergenceExitsOne) {
  // A constant series has an all-zero periodogram after mean correction.
  EXPECT_EQ(run("estimate const.csv -o nonconv"), 1);
  const auto bundle = nlohmann::json::parse(slurp(work_dir() / "nonconv/estimate.json"));
  EXPECT_EQ(bundle["status"], "nonconverged");
  EXPECT_FALSE(bundle["diagnostic"].get<std::string>().empty());
}

TEST_F(CliTest, EstimateTvFollowsTimeVariation) {
  ASSERT_EQ(run("estimate-tv ls1.csv --K 16 --J 16 -o tv"), 0);
  const auto rows = read_csv(work_dir() / "tv/surface.csv");
  ASSERT_EQ(rows.size(), 256u);
  // Correlate the u-profile at the fifth frequency with sin(2 pi u).
  std::vector<double> prof, ref;
  for (const auto& r : rows) {
    if (std::abs(r[0] - 5.0 / 17.0) < 1e-12) {
      prof.push_back(r[3]);
      ref.push_back(std::sin(2 * M_PI * r[2]));
    }
  }
  ASSERT_EQ(prof.size(), 16u);
  EXPECT_GT(oracle::spearman(prof, ref), 0.5);
  const auto bundle = nlohmann::json::parse(slurp(work_dir() / "tv/estimate_tv.json"));
  EXPECT_EQ(bundle["payload"]["selection"]["theta"].size(), 4u);
  EXPECT_TRUE(bundle["payload"]["selection"]["converged"].get<bool>());
}

TEST_F(CliTest, EstimateTvValidation) {
  EXPECT_EQ(run("estimate-tv ls1.csv --J 1 -o tv_j1"), 2);
  EXPECT_FALSE(fs::exists(work_dir() / "tv_j1"));
  EXPECT_EQ(run("estimate-tv ls1.csv --grid eeg -o tv_eeg"), 2);  // needs T = 60000
  EXPECT_EQ(run("estimate-tv ls1.csv --K 200 --J 32 -o tv_big"), 2);
  EXPECT_FALSE(fs::exists(work_dir() / "tv_big"));
}

TEST_F(CliTest, StationarityTest) {
  EXPECT_EQ(run("test-stationarity ls1.csv --n-perm 10 -o st_bad"), 2);
  EXPECT_FALSE(fs::exists(work_dir() / "st_bad"));
  ASSERT_EQ(run("test-stationarity ls1.csv --K 32 --J 32 --n-perm 199 --fast -o st"), 0);
  const auto bundle = nlohmann::json::parse(slurp(work_dir() / "st/stationarity.json"));
  EXPECT_LE(bundle["payload"]["test"]["p1"].get<double>(), 0.05);
  EXPECT_LE(bundle["payload"]["test"]["p2"].get<double>(), 0.05);
}

TEST_F(CliTest, CompareIdenticalOffsetAndSwapped) {
  ASSERT_EQ(run("compare ls1.csv ls1.csv --K 8 --J 8 -o cmp_same"), 0);
  auto same = nlohmann::json::parse(slurp(work_dir() / "cmp_same/compare.json"));
  EXPECT_EQ(same["payload"]["significant_positive"], 0);
  EXPECT_EQ(same["payload"]["significant_negative"], 0);

  ASSERT_EQ(run("compare ls1x10.csv ls1.csv --K 8 --J 8 -o cmp_up"), 0);
  ASSERT_EQ(run("compare ls1.csv ls1x10.csv --K 8 --J 8 -o cmp_down"), 0);
  const auto up = read_csv(work_dir() / "cmp_up/difference.csv");
  const auto down = read_csv(work_dir() / "cmp_down/difference.csv");
  ASSERT_EQ(up.size(), 64u);
  for (std::size_t i = 0; i < up.size(); ++i) {
    EXPECT_EQ(up[i][5], 1.0);  // sign
    EXPECT_NEAR(up[i][3], 2 * std::log(10.0), 1e-4);
    EXPECT_NEAR(down[i][3], -up[i][3], 1e-9);
  }
  // Default grids depend on T, so these two series give different grids.
  EXPECT_EQ(run("compare ls1.csv wn.csv -o cmp_bad"), 2);
  EXPECT_FALSE(fs::exists(work_dir() / "cmp_bad"));
}

TEST_F(CliTest, SimulateDeterministicAndValidated) {
  EXPECT_EQ(run("simulate --reps 0 -o sim_bad"), 2);
  EXPECT_FALSE(fs::exists(work_dir() / "sim_bad"));
  EXPECT_EQ(run("simulate --process AR7 -o sim_bad"), 2);
  ASSERT_EQ(run("simulate --process AR3 --T 64 --reps 2 --methods LS,IM,DM,DV,PO -o sim_a"), 0);
  ASSERT_EQ(run("simulate --process AR3 --T 64 --reps 2 --methods LS,IM,DM,DV,PO -o sim_b"), 0);
  EXPECT_EQ(slurp(work_dir() / "sim_a/simulation.json"), slurp(work_dir() / "sim_b/simulation.json"));
  const std::string table = slurp(work_dir() / "sim_a/simulation.txt");
  for (const char* m : {"LS", "IM", "DM", "DV", "PO"}) EXPECT_NE(table.find(m), std::string::npos) << m;
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  ASSERT_EQ(run("estimate wn.csv -m LS", "WSPEC_OUT_DIR=env_out"), 0);
  EXPECT_TRUE(fs::exists(work_dir() / "env_out/estimate.json"));
}
