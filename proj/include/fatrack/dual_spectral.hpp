#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fatrack/feature_signal.hpp"

namespace fatrack {

struct DualCertificate {
  Eigen::VectorXcd q;
  double gamma = 1.0;
  double lambda = 1.0;
};

struct RecoveredLine {
  double f = 0.0;          // normalized, [0,1)
  double amplitude = 0.0;  // |coefficient|, zero until fit_amplitudes
  double phase = 0.0;      // arg Y(f), in [0, 2pi)
  cplx coefficient{0.0, 0.0};
};

struct RecoveredSpectrum {
  std::vector<RecoveredLine> lines;  // ascending f
  std::string source;
};

struct LocateOptions {
  int grid_size = 4096;
  double tol = 1e-2;         // peaks must reach (1 - tol) * gamma
  double refine_tol = 1e-6;  // golden-section bracket width in f
  void validate() const;
};

/// Y(f) = sum_t q_t exp(-i 2 pi f t)
cplx dual_polynomial(const Eigen::VectorXcd& q, double f);

/// Y on the grid f_k = k / grid_size.
Eigen::VectorXcd dual_polynomial_grid(const Eigen::VectorXcd& q, int grid_size);

/// Frequencies where |Y| touches gamma: grid local maxima above
/// (1 - tol) gamma, refined by golden-section ascent, merged when closer
/// than 1/(4N). Amplitudes are left at zero; see fit_amplitudes.
RecoveredSpectrum locate_frequencies(const DualCertificate& cert, const LocateOptions& opts = {});

/// Least-squares coefficients of the atoms a(f_k, 0) against x (restricted
/// to pattern when given) fill amplitude and coefficient.
void fit_amplitudes(RecoveredSpectrum& spec, const Eigen::VectorXcd& x);
void fit_amplitudes(RecoveredSpectrum& spec, const Eigen::VectorXcd& x_omega,
                    const ObservationPattern& pattern);

/// sum_k coefficient_k a(f_k, 0)
Eigen::VectorXcd resynthesize(const RecoveredSpectrum& spec, int n);

/// Slots j (positions in omega) with |q(omega(j))| >= (1 - tol) lambda.
std::vector<int> detect_misassociations(const DualCertificate& cert, const ObservationPattern& pattern,
                                        double tol = 5e-2);

/// Circular distance between the two strongest lines, in Hz.
/// Throws EstimationError with fewer than two lines.
double vibration_frequency(const RecoveredSpectrum& spec, double dt);

}  // namespace fatrack
