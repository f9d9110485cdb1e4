#include "fatrack/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "fatrack/errors.hpp"

namespace fatrack {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct FeatureRef {
  const Eigen::VectorXcd* series = nullptr;  // indexed by batch-local step
  bool available(int t) const { return series != nullptr && t < series->size(); }
};

// Tracks x scan entries; feature factors multiply in where a reference exists.
LikelihoodTable likelihoods(const std::vector<Prediction>& preds, const Scan& scan,
                            const std::vector<FeatureRef>& refs, int local_t, double sigma_tilde2,
                            FeatureLikelihoodMode mode) {
  const auto M = static_cast<Eigen::Index>(preds.size());
  const auto n = static_cast<Eigen::Index>(scan.entries.size());
  LikelihoodTable C(M, n);
  for (Eigen::Index m = 0; m < M; ++m) {
    const auto& p = preds[static_cast<std::size_t>(m)];
    const FeatureRef& ref = refs[static_cast<std::size_t>(m)];
    const bool use_feature = ref.available(local_t);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& meas = scan.entries[static_cast<std::size_t>(r)];
      const Eigen::VectorXd v = Eigen::VectorXd::Constant(1, meas.z_k) - p.z_pred;
      double c = kinematic_likelihood(v, p.S);
      if (use_feature) {
        const double cf = mode == FeatureLikelihoodMode::kConstant
                              ? 1.0
                              : feature_likelihood(meas.z_f, (*ref.series)(local_t), sigma_tilde2);
        c = joint_likelihood(c, cf);
      }
      C(m, r) = c;
    }
  }
  return C;
}

struct PassResult {
  std::vector<std::vector<StateEstimate>> states;  // [track][local t]
  std::vector<std::vector<int>> chi;
};

// Filters local steps 1..last starting from start[m] at local step 0.
PassResult filter_pass(const std::vector<Track>& tracks, const std::vector<Scan>& scans, int offset, int last,
                       const std::vector<StateEstimate>& start, const std::vector<FeatureRef>& refs,
                       const BatchConfig& cfg, double sigma_tilde2) {
  const std::size_t M = tracks.size();
  PassResult out;
  out.states.assign(M, {});
  out.chi.assign(M, {});
  for (std::size_t m = 0; m < M; ++m) {
    out.states[m].push_back(start[m]);
    out.chi[m].push_back(kUnassigned);
  }
  std::vector<Prediction> preds(M);
  for (int t = 1; t <= last; ++t) {
    const Scan& scan = scans[static_cast<std::size_t>(offset + t)];
    for (std::size_t m = 0; m < M; ++m) preds[m] = predict(out.states[m].back(), tracks[m].model);
    const LikelihoodTable C = likelihoods(preds, scan, refs, t, sigma_tilde2, cfg.feature_mode);
    const Assignment a = nn_jpdaf_assign(C, cfg.assoc);
    for (std::size_t m = 0; m < M; ++m) {
      const int r = a.chi[m];
      if (r == kUnassigned) {
        out.states[m].push_back(coast(preds[m]));
      } else {
        const Eigen::VectorXd z = Eigen::VectorXd::Constant(1, scan.entries[static_cast<std::size_t>(r)].z_k);
        out.states[m].push_back(update(preds[m], z, tracks[m].model));
      }
      out.chi[m].push_back(r);
    }
  }
  return out;
}

struct FeatureFit {
  bool ok = false;
  Eigen::VectorXcd x_hat;
  RecoveredSpectrum spectrum;
  double fvib = kNaN;
};

FeatureFit estimate_feature(const std::vector<int>& chi, const Scan* const* scans, int length,
                            const std::optional<cplx>& z0, const Eigen::VectorXcd& x_bar,
                            const BatchConfig& cfg, double sigma2, double dt) {
  FeatureFit fit;
  DenoiseProblem prob;
  prob.pattern.n = length;
  std::vector<cplx> samples;
  if (z0) {
    prob.pattern.omega.push_back(0);
    samples.push_back(*z0);
  }
  for (int t = 1; t < length; ++t) {
    const int r = chi[static_cast<std::size_t>(t)];
    if (r == kUnassigned) continue;
    prob.pattern.omega.push_back(t);
    samples.push_back(scans[t]->entries[static_cast<std::size_t>(r)].z_f);
  }
  if (samples.empty()) return fit;
  prob.z_tilde = Eigen::Map<const Eigen::VectorXcd>(samples.data(), static_cast<Eigen::Index>(samples.size()));
  const double sigma = std::sqrt(sigma2);
  prob.gamma = cfg.gamma_scale * sigma * std::sqrt(length * std::log(static_cast<double>(length)));
  prob.lambda = cfg.lambda_scale * prob.gamma / std::sqrt(static_cast<double>(samples.size()));
  if (x_bar.size() > 0) {
    prob.prior = OverlapPrior{x_bar.head(std::min<Eigen::Index>(x_bar.size(), length)), cfg.zeta};
  }
  const DenoiseSolution sol = solve(prob, cfg.admm);
  fit.ok = true;
  fit.x_hat = sol.x_hat;
  fit.spectrum = locate_frequencies({sol.certificate(), prob.gamma, prob.lambda}, cfg.locate);
  fit_amplitudes(fit.spectrum, sol.x_hat);
  fit.spectrum.source = "admm";
  if (fit.spectrum.lines.size() >= 2) fit.fvib = vibration_frequency(fit.spectrum, dt);
  return fit;
}

LinearModel augmented_model(const LinearModel& kin, double feature_accel_var, double sigma2) {
  const double dt = kin.dt;
  Eigen::Matrix2d Fc;
  Fc << 1.0, dt, 0.0, 1.0;
  Eigen::Matrix2d Qc;
  Qc << std::pow(dt, 4) / 4.0, std::pow(dt, 3) / 2.0, std::pow(dt, 3) / 2.0, dt * dt;
  LinearModel m;
  m.dt = dt;
  m.F = Eigen::MatrixXd::Zero(6, 6);
  m.Q = Eigen::MatrixXd::Zero(6, 6);
  for (int b = 0; b < 3; ++b) m.F.block<2, 2>(2 * b, 2 * b) = Fc;
  m.Q.block<2, 2>(0, 0) = kin.Q;
  m.Q.block<2, 2>(2, 2) = feature_accel_var * Qc;
  m.Q.block<2, 2>(4, 4) = feature_accel_var * Qc;
  m.H = Eigen::MatrixXd::Zero(3, 6);
  m.H(0, 0) = 1.0;
  m.H(1, 2) = 1.0;
  m.H(2, 4) = 1.0;
  m.R = Eigen::MatrixXd::Zero(3, 3);
  m.R(0, 0) = kin.R(0, 0);
  m.R(1, 1) = sigma2 / 2.0;
  m.R(2, 2) = sigma2 / 2.0;
  return m;
}

void reset_history(Track& track, int steps) {
  track.states.assign(static_cast<std::size_t>(steps), StateEstimate{});
  track.chi.assign(static_cast<std::size_t>(steps), kUnassigned);
  track.feature_estimate = Eigen::VectorXcd::Constant(steps, cplx(kNaN, kNaN));
  track.fvib.assign(static_cast<std::size_t>(steps), kNaN);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kBaseline:
      return "baseline";
    case Algorithm::kFeatureAided:
      return "fa";
    case Algorithm::kAugmented:
      return "augmented";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "baseline") return Algorithm::kBaseline;
  if (name == "fa") return Algorithm::kFeatureAided;
  if (name == "augmented") return Algorithm::kAugmented;
  throw ConfigError("unknown algorithm '" + name + "' (expected baseline, fa or augmented)");
}

void BatchConfig::validate() const {
  if (N < 2) throw ConfigError("batch length N must be >= 2");
  if (A < 1 || A >= N) throw ConfigError("overlap A must satisfy 1 <= A < N");
  if (!(gamma_scale > 0.0)) throw ConfigError("gamma_scale must be positive");
  if (!(lambda_scale > 0.0)) throw ConfigError("lambda_scale must be positive");
  if (!(zeta > 0.0)) throw ConfigError("zeta must be positive");
  if (!(sigma_tilde_factor > 0.0)) throw ConfigError("sigma_tilde_factor must be positive");
  admm.validate();
  assoc.validate();
  locate.validate();
}

std::vector<Track> make_tracks(const ScenarioConfig& scenario, int steps) {
  std::vector<Track> tracks(scenario.targets.size());
  for (std::size_t m = 0; m < tracks.size(); ++m) {
    const auto& tgt = scenario.targets[m];
    tracks[m].id = static_cast<int>(m);
    tracks[m].model = LinearModel::constant_velocity(
        scenario.dt, std::sqrt(process_noise_variance(tgt.rho_vib, tgt.f_vib)), scenario.R);
    reset_history(tracks[m], steps);
  }
  return tracks;
}

std::vector<StateEstimate> init_tracks(const std::vector<TruthTarget>& truths, const ScenarioConfig& cfg,
                                       Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<StateEstimate> out;
  for (const auto& t : truths) {
    const auto [r, v] = truth_state(t, 0, cfg.dt);
    StateEstimate est;
    est.mean.resize(2);
    const double nr = gauss(rng);
    const double nv = gauss(rng);
    est.mean << r + std::sqrt(cfg.p0_range) * nr, v + std::sqrt(cfg.p0_rate) * nv;
    est.cov = Eigen::Vector2d(cfg.p0_range, cfg.p0_rate).asDiagonal();
    out.push_back(est);
  }
  return out;
}

std::vector<int> batch_offsets(int steps, int N, int A) {
  if (N < 2 || A < 1 || A >= N) throw ConfigError("batch sliding needs N >= 2 and 1 <= A < N");
  std::vector<int> out;
  int offset = 0;
  while (true) {
    out.push_back(offset);
    if (offset + N >= steps) break;
    offset += N - A;
  }
  return out;
}

std::vector<BatchCarry> run_batch(std::vector<Track>& tracks, const std::vector<Scan>& scans, int offset,
                                  int length, const BatchConfig& cfg, double sigma2,
                                  const std::vector<BatchCarry>& carry, bool refilter) {
  cfg.validate();
  const std::size_t M = tracks.size();
  if (carry.size() != M) throw ConfigError("carry size differs from track count");
  if (length < 2 || length > cfg.N) throw ConfigError("batch length must lie in [2, N]");
  if (offset < 0 || static_cast<std::size_t>(offset + length) > scans.size()) {
    throw ConfigError("batch extends past the available scans");
  }
  if (!(sigma2 > 0.0)) throw ConfigError("feature-aided tracking needs sigma2 > 0");
  const double sigma_tilde2 = cfg.sigma_tilde_factor * cfg.sigma_tilde_factor * sigma2;
  const double dt = tracks.empty() ? 1.0 : tracks.front().model.dt;

  std::vector<StateEstimate> start(M);
  std::vector<Eigen::VectorXcd> prior_steps(M);  // x_bar, truncated to steps 0..A-1
  std::vector<FeatureRef> pass1_refs(M);
  for (std::size_t m = 0; m < M; ++m) {
    start[m] = carry[m].state;
    if (carry[m].x_bar.size() > 0) {
      prior_steps[m] = carry[m].x_bar.head(std::min<Eigen::Index>(carry[m].x_bar.size(), cfg.A));
      pass1_refs[m].series = &prior_steps[m];
    }
  }
  const PassResult pass1 = filter_pass(tracks, scans, offset, length - 1, start, pass1_refs, cfg, sigma_tilde2);

  std::vector<const Scan*> local_scans(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) local_scans[static_cast<std::size_t>(t)] = &scans[static_cast<std::size_t>(offset + t)];
  std::vector<FeatureFit> fits(M);
  for (std::size_t m = 0; m < M; ++m) {
    fits[m] = estimate_feature(pass1.chi[m], local_scans.data(), length, carry[m].z0, carry[m].x_bar, cfg, sigma2, dt);
  }

  const int last2 = std::min(cfg.N - cfg.A, length - 1);
  PassResult pass2;
  if (refilter) {
    std::vector<FeatureRef> refs(M);
    for (std::size_t m = 0; m < M; ++m) {
      if (fits[m].ok) refs[m].series = &fits[m].x_hat;
    }
    pass2 = filter_pass(tracks, scans, offset, last2, start, refs, cfg, sigma_tilde2);
  }

  for (std::size_t m = 0; m < M; ++m) {
    Track& tr = tracks[m];
    for (int t = 0; t < length; ++t) {
      const auto g = static_cast<std::size_t>(offset + t);
      if (t > 0) {
        const bool second = refilter && t <= last2;
        tr.states[g] = second ? pass2.states[m][static_cast<std::size_t>(t)] : pass1.states[m][static_cast<std::size_t>(t)];
        tr.chi[g] = second ? pass2.chi[m][static_cast<std::size_t>(t)] : pass1.chi[m][static_cast<std::size_t>(t)];
      }
      if (fits[m].ok) {
        tr.feature_estimate(static_cast<Eigen::Index>(g)) = fits[m].x_hat(t);
        tr.fvib[g] = fits[m].fvib;
      }
    }
    if (fits[m].ok) tr.recovered = fits[m].spectrum;
  }

  std::vector<BatchCarry> next(M);
  const int handoff = cfg.N - cfg.A;
  if (handoff < length) {
    for (std::size_t m = 0; m < M; ++m) {
      const auto g = static_cast<std::size_t>(offset + handoff);
      next[m].state = tracks[m].states[g];
      if (fits[m].ok) next[m].x_bar = fits[m].x_hat.segment(handoff, length - handoff);
      const int r = tracks[m].chi[g];
      if (r != kUnassigned) next[m].z0 = scans[g].entries[static_cast<std::size_t>(r)].z_f;
    }
  }
  return next;
}

std::vector<BatchCarry> run_first_batch(std::vector<Track>& tracks, const std::vector<Scan>& scans,
                                        int length, const BatchConfig& cfg, double sigma2,
                                        const std::vector<StateEstimate>& init, bool refilter) {
  if (init.size() != tracks.size()) throw ConfigError("initial state count differs from track count");
  std::vector<BatchCarry> carry(tracks.size());
  for (std::size_t m = 0; m < tracks.size(); ++m) {
    carry[m].state = init[m];
    tracks[m].states[0] = init[m];
  }
  return run_batch(tracks, scans, 0, length, cfg, sigma2, carry, refilter);
}

std::vector<Track> run_baseline(const Realization& real, const ScenarioConfig& scenario,
                                const BatchConfig& cfg, const std::vector<StateEstimate>& init) {
  const int T = static_cast<int>(real.scans.size());
  std::vector<Track> tracks = make_tracks(scenario, T);
  if (init.size() != tracks.size()) throw ConfigError("initial state count differs from track count");
  const std::vector<FeatureRef> none(tracks.size());
  const PassResult pass = filter_pass(tracks, real.scans, 0, T - 1, init, none, cfg, 1.0);
  for (std::size_t m = 0; m < tracks.size(); ++m) {
    for (int t = 0; t < T; ++t) {
      tracks[m].states[static_cast<std::size_t>(t)] = pass.states[m][static_cast<std::size_t>(t)];
      tracks[m].chi[static_cast<std::size_t>(t)] = pass.chi[m][static_cast<std::size_t>(t)];
    }
  }
  return tracks;
}

std::vector<Track> run_feature_aided(const Realization& real, const ScenarioConfig& scenario,
                                     const BatchConfig& cfg, const std::vector<StateEstimate>& init) {
  cfg.validate();
  const int T = static_cast<int>(real.scans.size());
  std::vector<Track> tracks = make_tracks(scenario, T);
  const std::vector<int> offsets = batch_offsets(T, cfg.N, cfg.A);
  std::vector<BatchCarry> carry;
  for (std::size_t b = 0; b < offsets.size(); ++b) {
    const int length = std::min(cfg.N, T - offsets[b]);
    carry = b == 0 ? run_first_batch(tracks, real.scans, length, cfg, scenario.sigma2, init)
                   : run_batch(tracks, real.scans, offsets[b], length, cfg, scenario.sigma2, carry);
  }
  return tracks;
}

std::vector<Track> run_augmented(const Realization& real, const ScenarioConfig& scenario,
                                 const BatchConfig& cfg, const std::vector<StateEstimate>& init) {
  const int T = static_cast<int>(real.scans.size());
  std::vector<Track> tracks = make_tracks(scenario, T);
  if (init.size() != tracks.size()) throw ConfigError("initial state count differs from track count");
  const std::size_t M = tracks.size();
  std::vector<LinearModel> models(M);
  std::vector<StateEstimate> est(M);
  for (std::size_t m = 0; m < M; ++m) {
    const TruthTarget& tgt = real.truths[m];
    const double a_max = max_feature_acceleration(tgt, T, scenario.dt);
    models[m] = augmented_model(tracks[m].model, a_max * a_max / 3.0, scenario.sigma2);
    // d/dtau x_F = i (4 pi / xi) r'(0) x_F(0)
    const cplx x0 = radar_return(tgt, 0, scenario.dt);
    const cplx dx0 = cplx(0.0, 4.0 * std::numbers::pi / tgt.xi * truth_state(tgt, 0, scenario.dt).second) * x0;
    est[m].mean.resize(6);
    est[m].mean << init[m].mean(0), init[m].mean(1), x0.real(), dx0.real(), x0.imag(), dx0.imag();
    est[m].cov = Eigen::MatrixXd::Identity(6, 6) * scenario.p0_range;
    est[m].cov.block<2, 2>(0, 0) = init[m].cov;
  }
  auto record = [&](std::size_t m, int t, int r) {
    tracks[m].states[static_cast<std::size_t>(t)] = {est[m].mean.head(2), est[m].cov.topLeftCorner(2, 2)};
    tracks[m].chi[static_cast<std::size_t>(t)] = r;
    tracks[m].feature_estimate(t) = cplx(est[m].mean(2), est[m].mean(4));
  };
  for (std::size_t m = 0; m < M; ++m) record(m, 0, kUnassigned);

  std::vector<Prediction> preds(M);
  for (int t = 1; t < T; ++t) {
    const Scan& scan = real.scans[static_cast<std::size_t>(t)];
    LikelihoodTable C(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(scan.entries.size()));
    std::vector<double> feature_peak_inv(M);
    for (std::size_t m = 0; m < M; ++m) {
      preds[m] = predict(est[m], models[m]);
      feature_peak_inv[m] = 2.0 * std::numbers::pi * std::sqrt(preds[m].S.bottomRightCorner(2, 2).determinant());
      for (std::size_t r = 0; r < scan.entries.size(); ++r) {
        const auto& e = scan.entries[r];
        const Eigen::Vector3d z(e.z_k, e.z_f.real(), e.z_f.imag());
        // Feature block scaled to unit peak so that B keeps its kinematic meaning.
        C(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(r)) =
            kinematic_likelihood(z - preds[m].z_pred, preds[m].S) * feature_peak_inv[m];
      }
    }
    const Assignment a = nn_jpdaf_assign(C, cfg.assoc);
    for (std::size_t m = 0; m < M; ++m) {
      const int r = a.chi[m];
      if (r == kUnassigned) {
        est[m] = coast(preds[m]);
      } else {
        const auto& e = scan.entries[static_cast<std::size_t>(r)];
        est[m] = update(preds[m], Eigen::Vector3d(e.z_k, e.z_f.real(), e.z_f.imag()), models[m]);
      }
      record(m, t, r);
    }
  }
  return tracks;
}

double nees(const StateEstimate& est, const Eigen::VectorXd& truth) {
  const Eigen::Index d = truth.size();
  if (est.mean.size() < d || est.cov.rows() < d) throw ConfigError("truth dimension exceeds the estimate");
  const Eigen::VectorXd err = est.mean.head(d) - truth;
  Eigen::LLT<Eigen::MatrixXd> llt(est.cov.topLeftCorner(d, d));
  if (llt.info() != Eigen::Success) throw NumericalError("covariance is not positive definite");
  return err.dot(llt.solve(err));
}

bool track_loss_check(Track& track, const TruthTarget& truth, double dt, double sigma_m) {
  if (track.lost) return true;
  for (std::size_t t = 0; t < track.states.size(); ++t) {
    const auto& s = track.states[t];
    if (s.mean.size() == 0) continue;
    const auto [r, v] = truth_state(truth, static_cast<int>(t), dt);
    const double pos_err = std::abs(s.mean(0) - r);
    if (pos_err > 10.0 * sigma_m || nees(s, Eigen::Vector2d(r, v)) > 20.0) {
      track.lost = true;
      track.lost_at = static_cast<int>(t);
      return true;
    }
  }
  return false;
}

MetricsAccumulator::MetricsAccumulator(int steps) : steps_(static_cast<std::size_t>(steps)) {}

void MetricsAccumulator::add(const std::vector<Track>& tracks, const Realization& real,
                             const ScenarioConfig& scenario) {
  const double sigma_m = std::sqrt(scenario.R);
  for (std::size_t m = 0; m < tracks.size(); ++m) {
    Track tr = tracks[m];
    const TruthTarget& truth = real.truths[m];
    track_loss_check(tr, truth, scenario.dt, sigma_m);
    ++tracks_;
    const int horizon = tr.lost ? tr.lost_at : static_cast<int>(steps_.size());
    for (int t = 0; t < horizon; ++t) {
      Step& s = steps_[static_cast<std::size_t>(t)];
      const auto [r, v] = truth_state(truth, t, scenario.dt);
      const StateEstimate& est = tr.states[static_cast<std::size_t>(t)];
      ++s.alive;
      s.pos_sq += std::pow(est.mean(0) - r, 2);
      s.nees += nees(est, Eigen::Vector2d(r, v));
      const cplx f = tr.feature_estimate(t);
      if (!std::isnan(f.real())) {
        ++s.feat_n;
        s.feat_sq += std::norm(f - radar_return(truth, t, scenario.dt));
      }
      if (!std::isnan(tr.fvib[static_cast<std::size_t>(t)])) {
        ++s.fvib_n;
        s.fvib_sq += std::pow(tr.fvib[static_cast<std::size_t>(t)] - truth.f_vib, 2);
      }
    }
  }
}

void MetricsAccumulator::merge(const MetricsAccumulator& other) {
  if (other.steps_.size() != steps_.size()) throw ConfigError("cannot merge metrics of different lengths");
  tracks_ += other.tracks_;
  for (std::size_t t = 0; t < steps_.size(); ++t) {
    Step& s = steps_[t];
    const Step& o = other.steps_[t];
    s.alive += o.alive;
    s.pos_sq += o.pos_sq;
    s.nees += o.nees;
    s.feat_n += o.feat_n;
    s.feat_sq += o.feat_sq;
    s.fvib_n += o.fvib_n;
    s.fvib_sq += o.fvib_sq;
  }
}

RunMetrics MetricsAccumulator::finish(Algorithm algorithm) const {
  RunMetrics out;
  out.algorithm = algorithm;
  out.track_count = tracks_;
  Step total;
  for (const auto& s : steps_) {
    StepMetrics sm;
    sm.continuity_pct = tracks_ > 0 ? 100.0 * static_cast<double>(s.alive) / static_cast<double>(tracks_) : 0.0;
    sm.rmse = s.alive > 0 ? std::sqrt(s.pos_sq / static_cast<double>(s.alive)) : kNaN;
    sm.nees_mean = s.alive > 0 ? s.nees / static_cast<double>(s.alive) : kNaN;
    sm.feat_rmse = s.feat_n > 0 ? std::sqrt(s.feat_sq / static_cast<double>(s.feat_n)) : kNaN;
    sm.fvib_rmse = s.fvib_n > 0 ? std::sqrt(s.fvib_sq / static_cast<double>(s.fvib_n)) : kNaN;
    out.steps.push_back(sm);
    total.alive += s.alive;
    total.pos_sq += s.pos_sq;
    total.feat_n += s.feat_n;
    total.feat_sq += s.feat_sq;
    total.fvib_n += s.fvib_n;
    total.fvib_sq += s.fvib_sq;
  }
  out.final_continuity_pct = out.steps.empty() ? 0.0 : out.steps.back().continuity_pct;
  out.rmse = total.alive > 0 ? std::sqrt(total.pos_sq / static_cast<double>(total.alive)) : kNaN;
  out.feat_rmse = total.feat_n > 0 ? std::sqrt(total.feat_sq / static_cast<double>(total.feat_n)) : kNaN;
  out.fvib_rmse = total.fvib_n > 0 ? std::sqrt(total.fvib_sq / static_cast<double>(total.fvib_n)) : kNaN;
  return out;
}

std::uint64_t run_seed(std::uint64_t seed, std::uint64_t run) { return splitmix64(splitmix64(seed) ^ run); }

std::vector<RunMetrics> monte_carlo(const ScenarioConfig& scenario, const BatchConfig& batch, int runs,
                                    const std::vector<Algorithm>& algorithms, std::uint64_t seed, int jobs) {
  scenario.validate();
  batch.validate();
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (algorithms.empty()) throw ConfigError("no algorithms requested");
  jobs = std::max(1, jobs);

  const std::size_t A = algorithms.size();
  // One accumulator per (run, algorithm) so that merging happens in run order.
  std::vector<std::vector<MetricsAccumulator>> per_run(static_cast<std::size_t>(runs));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&]() {
    while (true) {
      const int r = next.fetch_add(1);
      if (r >= runs) return;
      try {
        Rng rng(run_seed(seed, static_cast<std::uint64_t>(r)));
        const Realization real = generate_realization(scenario, rng);
        const std::vector<StateEstimate> init = init_tracks(real.truths, scenario, rng);
        auto& accs = per_run[static_cast<std::size_t>(r)];
        for (std::size_t a = 0; a < A; ++a) {
          std::vector<Track> tracks;
          switch (algorithms[a]) {
            case Algorithm::kBaseline:
              tracks = run_baseline(real, scenario, batch, init);
              break;
            case Algorithm::kFeatureAided:
              tracks = run_feature_aided(real, scenario, batch, init);
              break;
            case Algorithm::kAugmented:
              tracks = run_augmented(real, scenario, batch, init);
              break;
          }
          MetricsAccumulator acc(scenario.steps);
          acc.add(tracks, real, scenario);
          accs.push_back(std::move(acc));
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(runs);
        return;
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<RunMetrics> out;
  for (std::size_t a = 0; a < A; ++a) {
    MetricsAccumulator total(scenario.steps);
    for (const auto& accs : per_run) total.merge(accs[a]);
    out.push_back(total.finish(algorithms[a]));
  }
  return out;
}

double linear_gaussian_nees(int runs, int steps, std::uint64_t seed, double dt, double kappa, double R) {
  if (runs < 1 || steps < 1) throw ConfigError("runs and steps must be >= 1");
  const LinearModel model = LinearModel::constant_velocity(dt, kappa, R);
  const Eigen::LLT<Eigen::MatrixXd> q_chol(model.Q);
  const Eigen::Matrix2d P0 = Eigen::Vector2d(10.0, 10.0).asDiagonal();
  const Eigen::Matrix2d p0_chol = P0.llt().matrixL();
  const Eigen::MatrixXd q_l = q_chol.matrixL();
  double total = 0.0;
  long count = 0;
  for (int r = 0; r < runs; ++r) {
    Rng rng(run_seed(seed, static_cast<std::uint64_t>(r)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Vector2d x(-1000.0, 2.0);
    StateEstimate est;
    const double n0 = gauss(rng);
    const double n1 = gauss(rng);
    est.mean = x + p0_chol * Eigen::Vector2d(n0, n1);
    est.cov = P0;
    for (int t = 1; t <= steps; ++t) {
      const double w0 = gauss(rng);
      const double w1 = gauss(rng);
      x = model.F * x + q_l * Eigen::Vector2d(w0, w1);
      const double z = x(0) + std::sqrt(R) * gauss(rng);
      est = update(predict(est, model), Eigen::VectorXd::Constant(1, z), model);
      total += nees(est, x);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace fatrack
