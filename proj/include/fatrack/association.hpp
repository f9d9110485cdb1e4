#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace fatrack {

/// Tracks x measurements table of nonnegative likelihoods for one scan.
using LikelihoodTable = Eigen::MatrixXd;

struct AssocConfig {
  double B = 0.0;     // nonunity-detection / clutter constant in the denominator
  double eta = 0.15;  // stop when every remaining probability is below eta
  // Recompute the probabilities on the reduced table after each pairing,
  // as the NN-JPDAF procedure prescribes. When false, the probabilities of
  // the full table are reused for every round.
  bool recompute = true;

  void validate() const;
};

/// Marker for a track that received no measurement.
inline constexpr int kUnassigned = -1;

struct Assignment {
  std::vector<int> chi;             // per track: measurement index or kUnassigned
  std::vector<double> beta_chosen;  // per track: probability of the chosen pair (0 if none)

  /// Number of tracks with a measurement.
  std::size_t assigned_count() const;
};

/// Gaussian density N(v; 0, S) of an innovation. Throws NumericalError when
/// S is not positive definite.
double kinematic_likelihood(const Eigen::VectorXd& innovation, const Eigen::MatrixXd& S);

/// (2 pi sigma2)^(-1/2) exp(-|z_f - x_f|^2 / (2 sigma2)).
/// The real-Gaussian normalizer is kept for the complex residual.
double feature_likelihood(std::complex<double> z_f, std::complex<double> x_f, double sigma2);

inline double joint_likelihood(double c_k, double c_f) { return c_k * c_f; }

/// beta(m,r) = C(m,r) / (D_m + E_r - C(m,r) + B), with D, E the row and
/// column sums. A zero denominator gives a zero probability.
Eigen::MatrixXd association_probabilities(const LikelihoodTable& C, const AssocConfig& cfg);

/// Greedy one-to-one assignment on a fixed probability table: repeatedly
/// take the largest entry >= eta, then strike its row and column. Ties go to
/// the lowest track index, then the lowest measurement index.
Assignment greedy_assign(const Eigen::MatrixXd& beta, double eta);

/// Full NN-JPDAF assignment from likelihoods. With cfg.recompute the
/// probabilities are recomputed over the remaining tracks and measurements
/// after each pairing; otherwise this is greedy_assign on the initial table.
Assignment nn_jpdaf_assign(const LikelihoodTable& C, const AssocConfig& cfg);

}  // namespace fatrack
