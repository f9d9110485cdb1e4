#include "fatrack/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fatrack/errors.hpp"

namespace fatrack {
namespace {

void require_square(const Eigen::MatrixXd& m, Eigen::Index n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    throw ConfigError(std::string(name) + " must be " + std::to_string(n) + "x" + std::to_string(n));
  }
}

void require_symmetric(const Eigen::MatrixXd& m, const char* name) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    throw ConfigError(std::string(name) + " must be symmetric");
  }
}

Eigen::MatrixXd gain(const Prediction& pred, const LinearModel& model) {
  // W = P H^T S^-1  computed as (S^-1 H P)^T via a Cholesky solve.
  Eigen::LLT<Eigen::MatrixXd> llt(pred.S);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("innovation covariance is not positive definite");
  }
  const Eigen::MatrixXd PHt = pred.P_pred * model.H.transpose();
  return llt.solve(PHt.transpose()).transpose();
}

void check_update_dims(const Prediction& pred, const Eigen::VectorXd& z) {
  if (z.size() != pred.z_pred.size()) {
    throw ConfigError("measurement dimension " + std::to_string(z.size()) + " does not match model " +
                      std::to_string(pred.z_pred.size()));
  }
}

}  // namespace

void LinearModel::validate() const {
  const Eigen::Index n = F.rows();
  if (n == 0) throw ConfigError("F is empty");
  require_square(F, n, "F");
  require_square(Q, n, "Q");
  if (H.cols() != n || H.rows() == 0) throw ConfigError("H must have as many columns as F");
  require_square(R, H.rows(), "R");
  require_symmetric(Q, "Q");
  require_symmetric(R, "R");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
}

LinearModel LinearModel::constant_velocity(double dt, double accel_std, double range_var) {
  LinearModel m;
  m.dt = dt;
  m.F.resize(2, 2);
  m.F << 1.0, dt, 0.0, 1.0;
  m.H.resize(1, 2);
  m.H << 1.0, 0.0;
  const double k2 = accel_std * accel_std;
  m.Q.resize(2, 2);
  m.Q << std::pow(dt, 4) / 4.0, std::pow(dt, 3) / 2.0, std::pow(dt, 3) / 2.0, dt * dt;
  m.Q *= k2;
  m.R = Eigen::MatrixXd::Constant(1, 1, range_var);
  return m;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

Prediction predict(const StateEstimate& est, const LinearModel& model) {
  const Eigen::Index n = model.F.rows();
  if (est.mean.size() != n || est.cov.rows() != n || est.cov.cols() != n) {
    throw ConfigError("state estimate dimension does not match the model");
  }
  if (model.H.cols() != n || model.Q.rows() != n || model.R.rows() != model.H.rows()) {
    throw ConfigError("inconsistent model dimensions");
  }
  Prediction p;
  p.x_pred = model.F * est.mean;
  p.z_pred = model.H * p.x_pred;
  p.P_pred = symmetrize(model.F * est.cov * model.F.transpose() + model.Q);
  p.S = symmetrize(model.H * p.P_pred * model.H.transpose() + model.R);
  return p;
}

StateEstimate update(const Prediction& pred, const Eigen::VectorXd& z, const LinearModel& model) {
  check_update_dims(pred, z);
  const Eigen::MatrixXd W = gain(pred, model);
  StateEstimate out;
  out.mean = pred.x_pred + W * (z - pred.z_pred);
  out.cov = symmetrize(pred.P_pred - W * pred.S * W.transpose());
  return out;
}

StateEstimate update_joseph(const Prediction& pred, const Eigen::VectorXd& z, const LinearModel& model) {
  check_update_dims(pred, z);
  const Eigen::MatrixXd W = gain(pred, model);
  const Eigen::Index n = pred.x_pred.size();
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - W * model.H;
  StateEstimate out;
  out.mean = pred.x_pred + W * (z - pred.z_pred);
  out.cov = symmetrize(A * pred.P_pred * A.transpose() + W * model.R * W.transpose());
  return out;
}

StateEstimate coast(const Prediction& pred) { return {pred.x_pred, pred.P_pred}; }

}  // namespace fatrack
