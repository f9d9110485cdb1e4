#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace fatrack {

using cplx = std::complex<double>;

/// One sinusoid c * exp(i(2 pi f t + phi)), f normalized to [0,1).
struct SpectralLine {
  double c = 1.0;
  double f = 0.0;
  double phi = 0.0;

  void validate() const;
};

/// Observed time indices of a batch of length n.
struct ObservationPattern {
  std::vector<int> omega;  // strictly increasing
  int n = 0;

  std::size_t alpha() const { return omega.size(); }

  /// Throws ConfigError if omega is not strictly increasing within [0, n).
  void validate() const;

  /// Indices in [0, n) not in omega.
  std::vector<int> complement() const;

  static ObservationPattern full(int n);
};

/// a(f, phi)_t = exp(i(2 pi f t + phi)), t = 0..n-1.
Eigen::VectorXcd atom(double f, double phi, int n);

/// Sum of c_k a(f_k, phi_k); zero vector when lines is empty.
Eigen::VectorXcd synthesize(const std::vector<SpectralLine>& lines, int n);

/// x(omega)
Eigen::VectorXcd restrict(const Eigen::VectorXcd& x, const ObservationPattern& pattern);

/// Inverse of restrict: places v at omega, zeros elsewhere.
Eigen::VectorXcd scatter(const Eigen::VectorXcd& v, const ObservationPattern& pattern);

/// Wrap a real value into [0,1).
double wrap_unit(double f);

}  // namespace fatrack
