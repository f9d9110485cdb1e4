#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "fatrack/feature_signal.hpp"

namespace fatrack {

using Rng = std::mt19937_64;

/// Vibrating point scatterer seen by a range-only radar.
struct TruthTarget {
  double r0 = 0.0;       // initial range, m
  double v0 = 0.0;       // initial range rate, m/s
  double rho_vib = 0.0;  // vibration magnitude, m
  double f_vib = 0.0;    // vibration frequency, Hz
  double b = 1.0;        // return strength
  double phi = 0.0;      // target phase shift
  double phi0 = 0.0;     // waveform initial phase
  double xi = 0.3;       // wavelength, m

  void validate() const;
};

struct ScenarioConfig {
  std::vector<TruthTarget> targets;
  int steps = 80;
  double dt = 0.5;
  double pd = 0.9;
  double mu = 5e-3;  // clutter density per metre of range
  double region_lo = -1500.0;
  double region_hi = -500.0;
  double R = 25.0;        // range measurement variance
  double sigma2 = 0.1;    // feature measurement noise variance
  double clutter_amp_lo = 0.5;
  double clutter_amp_hi = 1.5;
  double p0_range = 10.0;  // initial covariance diagonal
  double p0_rate = 10.0;
  bool random_target_phase = true;  // draw each target's phi uniformly per run

  void validate() const;

  /// Four vibrating targets at the given feature SNR (dB, b^2 / sigma2).
  static ScenarioConfig paper(double snr_db);
};

/// sigma2 = b^2 10^(-snr_db/10)
double snr_to_sigma2(double snr_db, double b = 1.0);

struct Measurement {
  double z_k = 0.0;
  cplx z_f{0.0, 0.0};
  int origin = -1;  // target index, or -1 for clutter; scoring only
};

struct Scan {
  int t = 0;
  std::vector<Measurement> entries;
};

/// Range and range rate at step t >= 0, time tau = t * dt.
std::pair<double, double> truth_state(const TruthTarget& target, int t, double dt);

/// b exp(i (4 pi / xi) range + i phi + i phi0)
cplx radar_return(const TruthTarget& target, int t, double dt);

/// kappa^2 = rho^2 (2 pi f)^4 / 3
double process_noise_variance(double rho_vib, double f_vib);

/// Largest |d^2 x_F / d tau^2| over the first `steps` samples (dense
/// evaluation between samples).
double max_feature_acceleration(const TruthTarget& target, int steps, double dt);

Scan generate_scan(const std::vector<TruthTarget>& truths, const ScenarioConfig& config, Rng& rng, int t);

/// One realization: target phases (when random) and every scan.
struct Realization {
  std::vector<TruthTarget> truths;
  std::vector<Scan> scans;
};

Realization generate_realization(const ScenarioConfig& config, Rng& rng);

}  // namespace fatrack
