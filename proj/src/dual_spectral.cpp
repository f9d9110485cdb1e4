#include "fatrack/dual_spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fatrack/errors.hpp"

namespace fatrack {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double modulus_at(const Eigen::VectorXcd& q, double f) { return std::abs(dual_polynomial(q, f)); }

// Maximize |Y| on [a, b] (b - a < 1, may extend outside [0,1)).
double golden_max(const Eigen::VectorXcd& q, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = modulus_at(q, c);
  double fd = modulus_at(q, d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = modulus_at(q, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = modulus_at(q, d);
    }
  }
  return 0.5 * (a + b);
}

double circular_gap(double a, double b) {
  const double d = std::abs(wrap_unit(a) - wrap_unit(b));
  return std::min(d, 1.0 - d);
}

}  // namespace

void LocateOptions::validate() const {
  if (grid_size < 8) throw ConfigError("frequency grid must have at least 8 points");
  if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("peak tolerance must lie in (0,1)");
  if (!(refine_tol > 0.0)) throw ConfigError("refinement tolerance must be positive");
}

cplx dual_polynomial(const Eigen::VectorXcd& q, double f) {
  cplx y = 0.0;
  const cplx step = std::polar(1.0, -kTwoPi * f);
  cplx w = 1.0;
  for (Eigen::Index t = 0; t < q.size(); ++t) {
    // Recompute every 64 terms to bound drift of the running phasor.
    if ((t & 63) == 0) w = std::polar(1.0, -kTwoPi * f * static_cast<double>(t));
    y += q(t) * w;
    w *= step;
  }
  return y;
}

Eigen::VectorXcd dual_polynomial_grid(const Eigen::VectorXcd& q, int grid_size) {
  if (grid_size < 1) throw ConfigError("grid size must be positive");
  Eigen::VectorXcd y(grid_size);
  for (int k = 0; k < grid_size; ++k) y(k) = dual_polynomial(q, static_cast<double>(k) / grid_size);
  return y;
}

RecoveredSpectrum locate_frequencies(const DualCertificate& cert, const LocateOptions& opts) {
  opts.validate();
  RecoveredSpectrum spec;
  const int n = static_cast<int>(cert.q.size());
  if (n == 0) return spec;
  const int g = opts.grid_size;
  const Eigen::VectorXcd y = dual_polynomial_grid(cert.q, g);
  const Eigen::VectorXd mag = y.cwiseAbs();
  const double floor = (1.0 - opts.tol) * cert.gamma;

  struct Peak {
    double f;
    double value;
  };
  std::vector<Peak> peaks;
  for (int k = 0; k < g; ++k) {
    const double left = mag((k + g - 1) % g);
    const double right = mag((k + 1) % g);
    if (mag(k) < floor || mag(k) < left || mag(k) < right) continue;
    if (mag(k) == left && k > 0) continue;  // plateau: keep the first grid point only
    const double h = 1.0 / g;
    const double f = wrap_unit(golden_max(cert.q, k * h - h, k * h + h, opts.refine_tol));
    peaks.push_back({f, modulus_at(cert.q, f)});
  }

  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.value > b.value; });
  std::vector<Peak> kept;
  const double min_gap = 1.0 / (4.0 * n);
  for (const auto& p : peaks) {
    const bool close = std::any_of(kept.begin(), kept.end(),
                                   [&](const Peak& k) { return circular_gap(k.f, p.f) <= min_gap; });
    if (!close) kept.push_back(p);
  }
  std::sort(kept.begin(), kept.end(), [](const Peak& a, const Peak& b) { return a.f < b.f; });
  for (const auto& p : kept) {
    RecoveredLine line;
    line.f = p.f;
    double ph = std::arg(dual_polynomial(cert.q, p.f));
    if (ph < 0.0) ph += kTwoPi;
    line.phase = ph;
    spec.lines.push_back(line);
  }
  return spec;
}

void fit_amplitudes(RecoveredSpectrum& spec, const Eigen::VectorXcd& x) {
  fit_amplitudes(spec, x, ObservationPattern::full(static_cast<int>(x.size())));
}

void fit_amplitudes(RecoveredSpectrum& spec, const Eigen::VectorXcd& x_omega,
                    const ObservationPattern& pattern) {
  if (spec.lines.empty()) return;
  if (static_cast<std::size_t>(x_omega.size()) != pattern.alpha()) {
    throw ConfigError("fit_amplitudes: data length differs from |omega|");
  }
  const auto k = static_cast<Eigen::Index>(spec.lines.size());
  Eigen::MatrixXcd basis(x_omega.size(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    basis.col(c) = restrict(atom(spec.lines[static_cast<std::size_t>(c)].f, 0.0, pattern.n), pattern);
  }
  const Eigen::VectorXcd coef = basis.completeOrthogonalDecomposition().solve(x_omega);
  for (Eigen::Index c = 0; c < k; ++c) {
    auto& line = spec.lines[static_cast<std::size_t>(c)];
    line.coefficient = coef(c);
    line.amplitude = std::abs(coef(c));
  }
}

Eigen::VectorXcd resynthesize(const RecoveredSpectrum& spec, int n) {
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
  for (const auto& l : spec.lines) x += l.coefficient * atom(l.f, 0.0, n);
  return x;
}

std::vector<int> detect_misassociations(const DualCertificate& cert, const ObservationPattern& pattern,
                                        double tol) {
  pattern.validate();
  if (cert.q.size() != pattern.n) throw ConfigError("certificate length differs from pattern length");
  std::vector<int> out;
  const double floor = (1.0 - tol) * cert.lambda;
  for (std::size_t j = 0; j < pattern.alpha(); ++j) {
    if (std::abs(cert.q(pattern.omega[j])) >= floor) out.push_back(static_cast<int>(j));
  }
  return out;
}

double vibration_frequency(const RecoveredSpectrum& spec, double dt) {
  if (spec.lines.size() < 2) throw EstimationError("vibration frequency needs at least two spectral lines");
  if (!(dt > 0.0)) throw ConfigError("sampling interval must be positive");
  std::vector<RecoveredLine> lines = spec.lines;
  std::partial_sort(lines.begin(), lines.begin() + 2, lines.end(),
                    [](const RecoveredLine& a, const RecoveredLine& b) { return a.amplitude > b.amplitude; });
  return circular_gap(lines[0].f, lines[1].f) / dt;
}

}  // namespace fatrack
