#pragma once

#include <Eigen/Dense>

namespace fatrack {

/// Filtered kinematic estimate: mean (range, range-rate) and covariance.
struct StateEstimate {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Linear-Gaussian state-space model x' = F x + v, z = H x + w.
struct LinearModel {
  Eigen::MatrixXd F;
  Eigen::MatrixXd H;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  double dt = 1.0;

  /// Throws ConfigError on inconsistent dimensions or non-symmetric Q/R.
  void validate() const;

  std::size_t state_dim() const { return static_cast<std::size_t>(F.rows()); }
  std::size_t measurement_dim() const { return static_cast<std::size_t>(H.rows()); }

  /// Range / range-rate constant-velocity model with white-acceleration
  /// process noise of standard deviation `accel_std` and scalar range
  /// measurement variance `range_var`.
  static LinearModel constant_velocity(double dt, double accel_std, double range_var);
};

struct Prediction {
  Eigen::VectorXd x_pred;
  Eigen::VectorXd z_pred;
  Eigen::MatrixXd P_pred;
  Eigen::MatrixXd S;  // innovation covariance
};

Prediction predict(const StateEstimate& est, const LinearModel& model);

/// Kalman update in the subtractive form P - W S W^T, re-symmetrized.
StateEstimate update(const Prediction& pred, const Eigen::VectorXd& z, const LinearModel& model);

/// Joseph-form update (I - W H) P (I - W H)^T + W R W^T. Same result in
/// exact arithmetic; kept for cross-checking the subtractive form.
StateEstimate update_joseph(const Prediction& pred, const Eigen::VectorXd& z, const LinearModel& model);

/// No measurement: the prediction becomes the estimate.
StateEstimate coast(const Prediction& pred);

/// (M + M^T) / 2
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m);

}  // namespace fatrack
