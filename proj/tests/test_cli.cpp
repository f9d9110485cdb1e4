#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string err;
};

Outcome run_cli(const std::string& args, const std::string& tag) {
  fs::create_directories(FATRACK_SCRATCH);
  const std::string err_path = std::string(FATRACK_SCRATCH) + "/" + tag + ".stderr";
  const std::string cmd = std::string(FATRACK_CLI) + " " + args + " > /dev/null 2> " + err_path;
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err_path);
  std::stringstream ss;
  ss << in.rdbuf();
  o.err = ss.str();
  return o;
}

std::string data(const std::string& name) { return std::string(FATRACK_TEST_DATA) + "/cli/" + name; }
std::string scratch(const std::string& name) { return std::string(FATRACK_SCRATCH) + "/" + name; }

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) row.push_back(f);
    rows.push_back(row);
  }
  return rows;
}

const std::string kFig3Args = " --n 64 --gamma 0.8 --lambda 0.1 --max-iter 2000 --grid-size 4096";

}  // namespace

TEST(Cli, MissingFieldExitsTwo) {
  const Outcome o = run_cli("run " + data("missing_runs.json") + " --out-dir " + scratch("missing"), "missing");
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("missing required field 'runs'"), std::string::npos) << o.err;
}

TEST(Cli, SyntaxErrorIsLineAnchored) {
  const Outcome o = run_cli("run " + data("bad_syntax.json") + " --out-dir " + scratch("syntax"), "syntax");
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("bad_syntax.json:5:"), std::string::npos) << o.err;
}

TEST(Cli, InvalidValueIsLineAnchored) {
  const Outcome o = run_cli("run " + data("bad_value.json") + " --out-dir " + scratch("value"), "value");
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("bad_value.json:8: scenario.pd"), std::string::npos) << o.err;
}

TEST(Cli, RunWritesMetricsAndManifest) {
  const std::string out = scratch("run");
  fs::remove_all(out);
  const Outcome o = run_cli("run " + std::string(FATRACK_CONFIG_DIR) + "/smoke.json --runs 1 --seed 5 --jobs 2 --out-dir " + out, "run");
  ASSERT_EQ(o.code, 0) << o.err;
  const auto rows = read_csv(out + "/metrics.csv");
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0], (std::vector<std::string>{"algorithm", "snr_db", "time_step", "rmse", "nees_mean",
                                               "continuity_pct", "feat_rmse", "fvib_rmse"}));
  EXPECT_EQ(rows.size(), 1u + 3 * 24);
  std::ifstream manifest(out + "/manifest.json");
  std::stringstream ss;
  ss << manifest.rdbuf();
  EXPECT_NE(ss.str().find("\"seed\": 5"), std::string::npos);
  EXPECT_NE(ss.str().find("\"runs\": 1"), std::string::npos);
  EXPECT_NE(ss.str().find("\"wall_time_s\""), std::string::npos);
}

TEST(Cli, DenoiseEmptyOmegaExitsTwo) {
  const Outcome o =
      run_cli("denoise " + data("fig3_samples.csv") + " " + data("empty_omega.txt") + kFig3Args + " --out-dir " +
                  scratch("empty"),
              "empty");
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("no indices"), std::string::npos) << o.err;
}

TEST(Cli, DenoiseDimensionMismatchExitsTwo) {
  const Outcome o =
      run_cli("denoise " + data("fig3_samples.csv") + " " + data("short_omega.txt") + kFig3Args + " --out-dir " +
                  scratch("short"),
              "short");
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("samples but"), std::string::npos) << o.err;
}

TEST(Cli, DenoiseBadSampleIsLineAnchored) {
  const Outcome o =
      run_cli("denoise " + data("bad_samples.csv") + " " + data("fig3_omega.txt") + kFig3Args + " --out-dir " +
                  scratch("badsample"),
              "badsample");
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("bad_samples.csv:4: field 'im'"), std::string::npos) << o.err;
}

TEST(Cli, DenoiseFig3) {
  const std::string out = scratch("fig3");
  fs::remove_all(out);
  const Outcome o =
      run_cli("denoise " + data("fig3_samples.csv") + " " + data("fig3_omega.txt") + kFig3Args + " --out-dir " + out,
              "fig3");
  ASSERT_EQ(o.code, 0) << o.err;

  const auto grid = read_csv(out + "/dual_poly.csv");
  ASSERT_EQ(grid.size(), 1u + 4096);
  EXPECT_EQ(grid[0], (std::vector<std::string>{"f", "re", "im", "abs"}));
  // The two largest local maxima of |Y| sit on the planted frequencies.
  std::vector<std::pair<double, double>> peaks;
  const std::size_t n = grid.size() - 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double here = std::stod(grid[k + 1][3]);
    const double left = std::stod(grid[(k + n - 1) % n + 1][3]);
    const double right = std::stod(grid[(k + 1) % n + 1][3]);
    if (here >= left && here >= right) peaks.emplace_back(here, std::stod(grid[k + 1][0]));
  }
  std::sort(peaks.rbegin(), peaks.rend());
  ASSERT_GE(peaks.size(), 2u);
  const double lo = std::min(peaks[0].second, peaks[1].second);
  const double hi = std::max(peaks[0].second, peaks[1].second);
  EXPECT_NEAR(lo, 0.2, 1e-3);
  EXPECT_NEAR(hi, 0.55, 1e-3);

  const auto mis = read_csv(out + "/misassociations.csv");
  ASSERT_EQ(mis.size(), 5u);
  EXPECT_EQ(mis[1][1], "28");
  EXPECT_EQ(read_csv(out + "/x_hat.csv").size(), 65u);
  EXPECT_EQ(read_csv(out + "/e_hat.csv").size(), 61u);
  EXPECT_EQ(read_csv(out + "/q_hat.csv").size(), 65u);
  EXPECT_EQ(read_csv(out + "/spectrum.csv").size(), 3u);
}
