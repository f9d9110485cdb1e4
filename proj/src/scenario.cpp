#include "fatrack/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fatrack/errors.hpp"

namespace fatrack {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

void TruthTarget::validate() const {
  if (!(f_vib >= 0.0)) throw ConfigError("vibration frequency must be >= 0");
  if (!(rho_vib >= 0.0)) throw ConfigError("vibration magnitude must be >= 0");
  if (!(b > 0.0)) throw ConfigError("return strength b must be positive");
  if (!(xi > 0.0)) throw ConfigError("wavelength must be positive");
}

void ScenarioConfig::validate() const {
  if (targets.empty()) throw ConfigError("scenario needs at least one target");
  for (const auto& t : targets) t.validate();
  if (steps < 2) throw ConfigError("scenario needs at least two steps");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(pd > 0.0 && pd <= 1.0)) throw ConfigError("pd must lie in (0,1]");
  if (!(mu >= 0.0)) throw ConfigError("clutter density mu must be >= 0");
  if (!(region_hi > region_lo)) throw ConfigError("clutter region must be nonempty");
  if (!(R >= 0.0)) throw ConfigError("range variance R must be >= 0");
  if (!(sigma2 >= 0.0)) throw ConfigError("feature variance sigma2 must be >= 0");
  if (!(clutter_amp_lo >= 0.0 && clutter_amp_hi >= clutter_amp_lo)) {
    throw ConfigError("clutter amplitude interval is invalid");
  }
  if (!(p0_range >= 0.0 && p0_rate >= 0.0)) throw ConfigError("initial covariance must be >= 0");
}

ScenarioConfig ScenarioConfig::paper(double snr_db) {
  ScenarioConfig c;
  const double r0[] = {-1020.0, -960.0, -920.0, -900.0};
  const double v0[] = {3.2, 1.6, 0.2, 0.2};
  const double rho[] = {0.0244, 0.0244, 0.0137, 0.0137};
  const double f[] = {0.6, 0.6, 0.8, 0.8};
  for (int m = 0; m < 4; ++m) {
    TruthTarget t;
    t.r0 = r0[m];
    t.v0 = v0[m];
    t.rho_vib = rho[m];
    t.f_vib = f[m];
    c.targets.push_back(t);
  }
  c.sigma2 = snr_to_sigma2(snr_db);
  return c;
}

double snr_to_sigma2(double snr_db, double b) { return b * b * std::pow(10.0, -snr_db / 10.0); }

std::pair<double, double> truth_state(const TruthTarget& target, int t, double dt) {
  const double tau = t * dt;
  const double w = kTwoPi * target.f_vib;
  return {target.r0 + tau * target.v0 + target.rho_vib * std::sin(w * tau),
          target.v0 + target.rho_vib * w * std::cos(w * tau)};
}

cplx radar_return(const TruthTarget& target, int t, double dt) {
  const double range = truth_state(target, t, dt).first;
  return target.b * std::polar(1.0, 4.0 * std::numbers::pi / target.xi * range + target.phi + target.phi0);
}

double process_noise_variance(double rho_vib, double f_vib) {
  if (!(rho_vib >= 0.0 && f_vib >= 0.0)) throw ConfigError("vibration parameters must be >= 0");
  return rho_vib * rho_vib * std::pow(kTwoPi * f_vib, 4) / 3.0;
}

double max_feature_acceleration(const TruthTarget& target, int steps, double dt) {
  // x_F = b e^{i psi}, psi = k r(tau): |x_F''| = b sqrt(psi''^2 + psi'^4)
  const double k = 4.0 * std::numbers::pi / target.xi;
  const double w = kTwoPi * target.f_vib;
  const int samples = std::max(steps, 2) * 32;
  const double span = (steps - 1) * dt;
  double best = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double tau = span * i / samples;
    const double d1 = k * (target.v0 + target.rho_vib * w * std::cos(w * tau));
    const double d2 = -k * target.rho_vib * w * w * std::sin(w * tau);
    best = std::max(best, target.b * std::sqrt(d2 * d2 + d1 * d1 * d1 * d1));
  }
  return best;
}

Scan generate_scan(const std::vector<TruthTarget>& truths, const ScenarioConfig& config, Rng& rng, int t) {
  Scan scan;
  scan.t = t;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double range_sd = std::sqrt(config.R);
  const double feat_sd = std::sqrt(config.sigma2 / 2.0);
  for (std::size_t m = 0; m < truths.size(); ++m) {
    if (unit(rng) >= config.pd) continue;
    Measurement meas;
    meas.z_k = truth_state(truths[m], t, config.dt).first + range_sd * gauss(rng);
    const double re = gauss(rng);
    const double im = gauss(rng);
    meas.z_f = radar_return(truths[m], t, config.dt) + feat_sd * cplx(re, im);
    meas.origin = static_cast<int>(m);
    scan.entries.push_back(meas);
  }
  const double width = config.region_hi - config.region_lo;
  std::poisson_distribution<int> count(config.mu * width);
  const int n_clutter = config.mu > 0.0 ? count(rng) : 0;
  for (int c = 0; c < n_clutter; ++c) {
    Measurement meas;
    meas.z_k = config.region_lo + width * unit(rng);
    const double amp = config.clutter_amp_lo + (config.clutter_amp_hi - config.clutter_amp_lo) * unit(rng);
    meas.z_f = std::polar(amp, kTwoPi * unit(rng));
    scan.entries.push_back(meas);
  }
  std::shuffle(scan.entries.begin(), scan.entries.end(), rng);
  return scan;
}

Realization generate_realization(const ScenarioConfig& config, Rng& rng) {
  config.validate();
  Realization real;
  real.truths = config.targets;
  if (config.random_target_phase) {
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    for (auto& t : real.truths) t.phi = phase(rng);
  }
  real.scans.reserve(static_cast<std::size_t>(config.steps));
  for (int t = 0; t < config.steps; ++t) real.scans.push_back(generate_scan(real.truths, config, rng, t));
  return real;
}

}  // namespace fatrack
