#include "fatrack/feature_signal.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fatrack/errors.hpp"

namespace fatrack {

void SpectralLine::validate() const {
  if (!(c > 0.0)) throw ConfigError("spectral line magnitude must be positive");
  if (!(f >= 0.0 && f < 1.0)) throw ConfigError("spectral line frequency must lie in [0,1)");
  if (!(phi >= 0.0 && phi < 2.0 * std::numbers::pi)) {
    throw ConfigError("spectral line phase must lie in [0,2pi)");
  }
}

void ObservationPattern::validate() const {
  if (n < 1) throw ConfigError("observation pattern length must be >= 1");
  int prev = -1;
  for (int idx : omega) {
    if (idx < 0 || idx >= n) {
      throw ConfigError("observation index " + std::to_string(idx) + " outside [0," +
                        std::to_string(n) + ")");
    }
    if (idx <= prev) throw ConfigError("observation indices must be strictly increasing");
    prev = idx;
  }
}

std::vector<int> ObservationPattern::complement() const {
  std::vector<int> out;
  std::size_t k = 0;
  for (int t = 0; t < n; ++t) {
    if (k < omega.size() && omega[k] == t) {
      ++k;
    } else {
      out.push_back(t);
    }
  }
  return out;
}

ObservationPattern ObservationPattern::full(int n) {
  ObservationPattern p;
  p.n = n;
  p.omega.resize(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) p.omega[static_cast<std::size_t>(t)] = t;
  return p;
}

Eigen::VectorXcd atom(double f, double phi, int n) {
  if (n < 1) throw ConfigError("atom length must be >= 1");
  Eigen::VectorXcd a(n);
  for (int t = 0; t < n; ++t) {
    a(t) = std::polar(1.0, 2.0 * std::numbers::pi * f * t + phi);
  }
  return a;
}

Eigen::VectorXcd synthesize(const std::vector<SpectralLine>& lines, int n) {
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
  for (const auto& l : lines) x += l.c * atom(l.f, l.phi, n);
  return x;
}

Eigen::VectorXcd restrict(const Eigen::VectorXcd& x, const ObservationPattern& pattern) {
  if (pattern.n != x.size()) throw ConfigError("pattern length differs from signal length");
  pattern.validate();
  Eigen::VectorXcd out(static_cast<Eigen::Index>(pattern.alpha()));
  for (std::size_t j = 0; j < pattern.alpha(); ++j) {
    out(static_cast<Eigen::Index>(j)) = x(pattern.omega[j]);
  }
  return out;
}

Eigen::VectorXcd scatter(const Eigen::VectorXcd& v, const ObservationPattern& pattern) {
  if (static_cast<std::size_t>(v.size()) != pattern.alpha()) {
    throw ConfigError("scatter input length differs from |omega|");
  }
  pattern.validate();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(pattern.n);
  for (std::size_t j = 0; j < pattern.alpha(); ++j) {
    out(pattern.omega[j]) = v(static_cast<Eigen::Index>(j));
  }
  return out;
}

double wrap_unit(double f) {
  double w = f - std::floor(f);
  return w >= 1.0 ? 0.0 : w;
}

}  // namespace fatrack
