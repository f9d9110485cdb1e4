#include <gtest/gtest.h>

#include <random>

#include "fatrack/errors.hpp"
#include "fatrack/kinematics.hpp"

using namespace fatrack;

namespace {

LinearModel paper_model() { return LinearModel::constant_velocity(0.5, 0.2, 25.0); }

StateEstimate est(Eigen::Vector2d m, Eigen::Matrix2d P) { return {m, P}; }

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double floor) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return a * a.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST(Predict, IdentityTransitionIsPassThrough) {
  LinearModel m;
  m.F = Eigen::Matrix2d::Identity();
  m.H = Eigen::Matrix2d::Identity();
  m.Q = Eigen::Matrix2d::Zero();
  m.R = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d P;
  P << 3, 1, 1, 2;
  const auto p = predict(est({4, -2}, P), m);
  EXPECT_TRUE(p.x_pred.isApprox(Eigen::Vector2d(4, -2)));
  EXPECT_TRUE(p.P_pred.isApprox(P));
}

TEST(Predict, PaperInitialStateAdvances) {
  const auto p = predict(est({-1020, 3.2}, Eigen::Matrix2d::Identity() * 10), paper_model());
  EXPECT_NEAR(p.x_pred(0), -1018.4, 1e-12);
  EXPECT_NEAR(p.x_pred(1), 3.2, 1e-12);
}

TEST(Predict, CovarianceByHand) {
  // F P F^T with P = 10 I, F = [1 .5; 0 1]: [[12.5, 5], [5, 10]].
  // Q = 0.04 [[.015625, .0625], [.0625, .25]].
  const auto p = predict(est({0, 0}, Eigen::Matrix2d::Identity() * 10), paper_model());
  EXPECT_NEAR(p.P_pred(0, 0), 12.5 + 0.000625, 1e-12);
  EXPECT_NEAR(p.P_pred(0, 1), 5.0 + 0.0025, 1e-12);
  EXPECT_NEAR(p.P_pred(1, 0), 5.0 + 0.0025, 1e-12);
  EXPECT_NEAR(p.P_pred(1, 1), 10.0 + 0.01, 1e-12);
  EXPECT_NEAR(p.S(0, 0), 12.500625 + 25.0, 1e-12);
}

TEST(Update, ZeroInnovationKeepsMean) {
  const auto m = paper_model();
  const auto p = predict(est({-1000, 2}, Eigen::Matrix2d::Identity() * 10), m);
  const auto u = update(p, p.z_pred, m);
  EXPECT_TRUE(u.mean.isApprox(p.x_pred));
}

TEST(Update, ScalarGainByHand) {
  LinearModel m = paper_model();
  Prediction p;
  p.x_pred = Eigen::Vector2d(100, 1);
  p.P_pred = Eigen::Matrix2d::Identity() * 10;
  p.z_pred = Eigen::VectorXd::Constant(1, 100);
  p.S = Eigen::MatrixXd::Constant(1, 1, 35);
  const auto u = update(p, Eigen::VectorXd::Constant(1, 105), m);
  EXPECT_NEAR(u.mean(0), 100 + 5.0 * 10.0 / 35.0, 1e-12);
  EXPECT_NEAR(u.mean(1), 1.0, 1e-12);
  EXPECT_NEAR(u.cov(0, 0), 10 - 100.0 / 35.0, 1e-12);
  EXPECT_NEAR(u.cov(1, 1), 10, 1e-12);
}

TEST(Update, PosteriorCovarianceNotLarger) {
  std::mt19937_64 rng(4);
  const auto m = paper_model();
  for (int k = 0; k < 50; ++k) {
    const Eigen::MatrixXd P = random_spd(rng, 2, 0.1);
    const auto p = predict(est({0, 0}, P), m);
    const auto u = update(p, Eigen::VectorXd::Constant(1, 3.0), m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p.P_pred - u.cov);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(Update, JosephMatchesSubtractiveForm) {
  std::mt19937_64 rng(5);
  const auto m = paper_model();
  for (int k = 0; k < 20; ++k) {
    const auto p = predict(est({1, 2}, random_spd(rng, 2, 0.5)), m);
    const Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 7.0);
    const auto a = update(p, z, m);
    const auto b = update_joseph(p, z, m);
    EXPECT_TRUE(a.mean.isApprox(b.mean, 1e-12));
    EXPECT_TRUE(a.cov.isApprox(b.cov, 1e-10));
  }
}

TEST(Coast, PassesPredictionThrough) {
  const auto p = predict(est({-900, 0.2}, Eigen::Matrix2d::Identity() * 10), paper_model());
  const auto c = coast(p);
  EXPECT_EQ(c.mean, p.x_pred);
  EXPECT_EQ(c.cov, p.P_pred);
}

TEST(Coast, TwoStepsAccumulateProcessNoise) {
  const auto m = paper_model();
  Eigen::Matrix2d P;
  P << 4, 1, 1, 3;
  const auto two = coast(predict(coast(predict(est({10, 2}, P), m)), m));
  const Eigen::Matrix2d F2 = m.F * m.F;
  const Eigen::Matrix2d Q2 = m.F * m.Q * m.F.transpose() + m.Q;
  EXPECT_TRUE(two.mean.isApprox(F2 * Eigen::Vector2d(10, 2)));
  EXPECT_TRUE(two.cov.isApprox(F2 * P * F2.transpose() + Q2, 1e-12));
  EXPECT_NEAR(F2(0, 1), 1.0, 1e-15);  // F(2 dt)
}

TEST(Coast, TraceGrowsWithProcessNoise) {
  const auto m = paper_model();
  StateEstimate s = est({0, 0}, Eigen::Matrix2d::Identity());
  for (int k = 0; k < 10; ++k) {
    const auto next = coast(predict(s, m));
    EXPECT_GT(next.cov.trace(), s.cov.trace());
    s = next;
  }
}

TEST(Model, ValidateRejectsMismatchedShapes) {
  LinearModel m = paper_model();
  m.H = Eigen::MatrixXd::Ones(1, 3);
  EXPECT_THROW(m.validate(), ConfigError);
}
