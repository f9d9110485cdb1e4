#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fatrack/pipeline.hpp"

namespace fatrack {

/// A spec file that fails to parse or validate. `line` is 1-based, 0 when
/// no location applies.
class SpecError : public std::runtime_error {
 public:
  SpecError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct ExperimentSpec {
  ScenarioConfig scenario;  // sigma2 is overwritten per sweep point
  BatchConfig batch;
  int runs = 1;
  std::uint64_t seed = 0;
  std::vector<Algorithm> algorithms;
  std::vector<double> sweep_snr_db;
  std::string metrics_csv = "metrics.csv";
  std::string summary_csv = "summary.csv";
  std::string manifest = "manifest.json";
};

/// Parses and validates a JSON experiment spec. Required: runs, seed,
/// algorithms, sweep_snr_db, scenario.targets (each with r0, v0, rho_vib,
/// f_vib). Everything else defaults to the paper's values.
ExperimentSpec parse_experiment(const std::string& text, const std::string& source = "<spec>");
ExperimentSpec load_experiment(const std::string& path);

struct SweepResult {
  double snr_db = 0.0;
  std::vector<RunMetrics> metrics;  // one per algorithm, in spec order
};

std::vector<SweepResult> run_experiment(const ExperimentSpec& spec, int jobs = 1);

/// algorithm,snr_db,time_step,rmse,nees_mean,continuity_pct,feat_rmse,fvib_rmse
void write_metrics_csv(std::ostream& os, const std::vector<SweepResult>& results);

/// algorithm,snr_db,runs,tracks,final_continuity_pct,rmse,feat_rmse,fvib_rmse
void write_summary_csv(std::ostream& os, const std::vector<SweepResult>& results, int runs);

/// Fixed-format number: "%.6g", "nan" for NaN.
std::string format_number(double v);

}  // namespace fatrack
