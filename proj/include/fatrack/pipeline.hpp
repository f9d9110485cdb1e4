#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fatrack/association.hpp"
#include "fatrack/atomic_admm.hpp"
#include "fatrack/dual_spectral.hpp"
#include "fatrack/kinematics.hpp"
#include "fatrack/scenario.hpp"

namespace fatrack {

enum class Algorithm { kBaseline, kFeatureAided, kAugmented };

std::string to_string(Algorithm a);
/// "baseline", "fa" or "augmented"; throws ConfigError otherwise.
Algorithm parse_algorithm(const std::string& name);

enum class FeatureLikelihoodMode {
  kGaussian,  // feature_likelihood with sigma_tilde^2
  kConstant,  // every feature likelihood is exactly 1
};

struct BatchConfig {
  int N = 32;
  int A = 16;
  double gamma_scale = 1.0;   // gamma = gamma_scale * sigma * sqrt(N ln N)
  double lambda_scale = 1.0;  // lambda = lambda_scale * gamma / sqrt(alpha)
  double zeta = 1.0;
  AdmmOptions admm;
  double sigma_tilde_factor = 3.1622776601683795;  // sqrt(10)
  AssocConfig assoc;
  LocateOptions locate;
  FeatureLikelihoodMode feature_mode = FeatureLikelihoodMode::kGaussian;

  void validate() const;
};

struct Track {
  int id = 0;
  LinearModel model;
  std::vector<StateEstimate> states;  // per global step
  std::vector<int> chi;               // per global step: scan entry index or kUnassigned
  Eigen::VectorXcd feature_estimate;  // per global step; NaN where none
  std::vector<double> fvib;           // per global step, Hz; NaN where none
  RecoveredSpectrum recovered;        // from the latest batch
  bool lost = false;
  int lost_at = -1;
};

/// What one batch hands to the next, per track.
struct BatchCarry {
  StateEstimate state;
  Eigen::VectorXcd x_bar;  // feature over the overlap; empty when unavailable
  std::optional<cplx> z0;  // feature sample associated at the handoff step
};

/// Tracks with the paper's CV model (kappa from each target's vibration)
/// and `steps` empty slots. Initial states are filled by the caller.
std::vector<Track> make_tracks(const ScenarioConfig& scenario, int steps);

/// Initial estimates drawn from N(truth(0), P0), covariance P0.
std::vector<StateEstimate> init_tracks(const std::vector<TruthTarget>& truths, const ScenarioConfig& cfg,
                                       Rng& rng);

/// Batch covering global steps [offset, offset + length). Pass 1 filters
/// steps 1..length-1, using feature-aided association for steps below A
/// when a prior is present. Per-track sparse feature recovery follows.
/// With refilter, pass 2 re-filters steps 1..min(N-A, length-1) with the
/// recovered features. Results are written into the tracks; the returned
/// carry holds the state at step N-A and the features x_hat(N-A..N-1).
std::vector<BatchCarry> run_batch(std::vector<Track>& tracks, const std::vector<Scan>& scans, int offset,
                                  int length, const BatchConfig& cfg, double sigma2,
                                  const std::vector<BatchCarry>& carry, bool refilter = true);

/// First batch: no prior, no feature-aided steps in pass 1.
std::vector<BatchCarry> run_first_batch(std::vector<Track>& tracks, const std::vector<Scan>& scans,
                                        int length, const BatchConfig& cfg, double sigma2,
                                        const std::vector<StateEstimate>& init, bool refilter = true);

/// Start steps of the sliding batches over `steps` samples.
std::vector<int> batch_offsets(int steps, int N, int A);

std::vector<Track> run_baseline(const Realization& real, const ScenarioConfig& scenario,
                                const BatchConfig& cfg, const std::vector<StateEstimate>& init);
std::vector<Track> run_feature_aided(const Realization& real, const ScenarioConfig& scenario,
                                     const BatchConfig& cfg, const std::vector<StateEstimate>& init);
/// State [r, r', Re xF, Re xF', Im xF, Im xF'] with feature initialized at truth.
std::vector<Track> run_augmented(const Realization& real, const ScenarioConfig& scenario,
                                 const BatchConfig& cfg, const std::vector<StateEstimate>& init);

/// (x - truth)^T P^-1 (x - truth) over the leading truth.size() components.
double nees(const StateEstimate& est, const Eigen::VectorXd& truth);

/// Marks the track lost at the first step whose position error exceeds
/// 10 sigma_m or whose NEES exceeds 20. Returns the flag.
bool track_loss_check(Track& track, const TruthTarget& truth, double dt, double sigma_m);

struct StepMetrics {
  double rmse = 0.0;
  double nees_mean = 0.0;
  double continuity_pct = 0.0;
  double feat_rmse = 0.0;
  double fvib_rmse = 0.0;
};

struct RunMetrics {
  Algorithm algorithm = Algorithm::kBaseline;
  std::vector<StepMetrics> steps;
  double final_continuity_pct = 0.0;
  double rmse = 0.0;       // over all steps and surviving tracks
  double feat_rmse = 0.0;  // NaN when the algorithm has no feature estimate
  double fvib_rmse = 0.0;
  long track_count = 0;
};

/// Sums over runs, merged in run order.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(int steps);
  void add(const std::vector<Track>& tracks, const Realization& real, const ScenarioConfig& scenario);
  void merge(const MetricsAccumulator& other);
  RunMetrics finish(Algorithm algorithm) const;

 private:
  struct Step {
    long alive = 0;
    double pos_sq = 0.0;
    double nees = 0.0;
    long feat_n = 0;
    double feat_sq = 0.0;
    long fvib_n = 0;
    double fvib_sq = 0.0;
  };
  std::vector<Step> steps_;
  long tracks_ = 0;
};

/// splitmix64 of seed and run index.
std::uint64_t run_seed(std::uint64_t seed, std::uint64_t run);

/// Independent seeded runs of each algorithm on common realizations.
std::vector<RunMetrics> monte_carlo(const ScenarioConfig& scenario, const BatchConfig& batch, int runs,
                                    const std::vector<Algorithm>& algorithms, std::uint64_t seed,
                                    int jobs = 1);

/// Single target, no clutter, Pd = 1, truth simulated from the CV model
/// itself. Returns the NEES averaged over runs and steps.
double linear_gaussian_nees(int runs, int steps, std::uint64_t seed, double dt = 0.5, double kappa = 0.2,
                            double R = 25.0);

}  // namespace fatrack
