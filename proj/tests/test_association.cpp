#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fatrack/association.hpp"
#include "fatrack/errors.hpp"

using namespace fatrack;

TEST(KinematicLikelihood, ZeroInnovation) {
  const double c = kinematic_likelihood(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 25));
  EXPECT_NEAR(c, 1.0 / std::sqrt(50 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(c, 0.0797885, 1e-7);
}

TEST(KinematicLikelihood, FiveMetreInnovation) {
  const double c = kinematic_likelihood(Eigen::VectorXd::Constant(1, 5), Eigen::MatrixXd::Constant(1, 1, 25));
  EXPECT_NEAR(c, std::exp(-0.5) / std::sqrt(50 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(c, 0.048394, 1e-6);
}

TEST(KinematicLikelihood, PeakAtZero) {
  const Eigen::MatrixXd S = Eigen::MatrixXd::Constant(1, 1, 25);
  const double peak = kinematic_likelihood(Eigen::VectorXd::Zero(1), S);
  for (double v = -20; v <= 20; v += 0.25) {
    if (v != 0.0) {
      EXPECT_LT(kinematic_likelihood(Eigen::VectorXd::Constant(1, v), S), peak);
    }
  }
}

TEST(KinematicLikelihood, RejectsIndefiniteCovariance) {
  EXPECT_THROW(kinematic_likelihood(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, -1)),
               NumericalError);
}

TEST(FeatureLikelihood, ZeroResidual) {
  EXPECT_NEAR(feature_likelihood({0.3, 0.4}, {0.3, 0.4}, 0.02), 1.0 / std::sqrt(2 * std::numbers::pi * 0.02),
              1e-12);
}

TEST(FeatureLikelihood, ResidualOfPointTwo) {
  const double c = feature_likelihood({1.2, 0.0}, {1.0, 0.0}, 0.02);
  EXPECT_NEAR(c, std::exp(-1.0) / std::sqrt(2 * std::numbers::pi * 0.02), 1e-12);
  EXPECT_NEAR(c, 1.0378, 1e-4);
}

TEST(FeatureLikelihood, PhaseRotationInvariant) {
  const std::complex<double> z{0.7, -0.2}, x{0.5, 0.1};
  const auto r = std::polar(1.0, 1.234);
  EXPECT_NEAR(feature_likelihood(z, x, 0.1), feature_likelihood(r * z, r * x, 0.1), 1e-14);
}

TEST(JointLikelihood, Product) {
  EXPECT_DOUBLE_EQ(joint_likelihood(0.7, 1.0), 0.7);
  EXPECT_NEAR(joint_likelihood(0.05, 0.9), 0.045, 1e-15);
  EXPECT_EQ(joint_likelihood(0.0, 3.0), 0.0);
  EXPECT_EQ(joint_likelihood(3.0, 0.0), 0.0);
}

TEST(AssociationProbabilities, LonePair) {
  const Eigen::MatrixXd beta = association_probabilities(Eigen::MatrixXd::Constant(1, 1, 0.37), {});
  EXPECT_DOUBLE_EQ(beta(0, 0), 1.0);
}

TEST(AssociationProbabilities, HandTable) {
  Eigen::MatrixXd C(2, 2);
  C << 2, 1, 1, 2;
  const Eigen::MatrixXd beta = association_probabilities(C, {});
  EXPECT_NEAR(beta(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(beta(0, 1), 0.2, 1e-12);
  EXPECT_NEAR(beta(1, 0), 0.2, 1e-12);
  EXPECT_NEAR(beta(1, 1), 0.5, 1e-12);
}

TEST(AssociationProbabilities, HandTableWithB) {
  Eigen::MatrixXd C(2, 3);
  C << 4, 1, 0, 0, 2, 2;
  AssocConfig cfg;
  cfg.B = 1.0;
  const Eigen::MatrixXd beta = association_probabilities(C, cfg);
  // D = [5, 4], E = [4, 3, 2]
  EXPECT_NEAR(beta(0, 0), 4.0 / (5 + 4 - 4 + 1), 1e-12);
  EXPECT_NEAR(beta(0, 1), 1.0 / (5 + 3 - 1 + 1), 1e-12);
  EXPECT_NEAR(beta(1, 1), 2.0 / (4 + 3 - 2 + 1), 1e-12);
  EXPECT_NEAR(beta(1, 2), 2.0 / (4 + 2 - 2 + 1), 1e-12);
  EXPECT_EQ(beta(0, 2), 0.0);
}

TEST(AssociationProbabilities, ScaleInvariantWithoutB) {
  Eigen::MatrixXd C(3, 2);
  C << 0.3, 0.01, 0.2, 0.5, 0.0, 0.07;
  const Eigen::MatrixXd a = association_probabilities(C, {});
  const Eigen::MatrixXd b = association_probabilities(C * 123.0, {});
  EXPECT_TRUE(a.isApprox(b, 1e-14));
}

TEST(AssociationProbabilities, ZeroTableGivesZero) {
  const Eigen::MatrixXd beta = association_probabilities(Eigen::MatrixXd::Zero(2, 2), {});
  EXPECT_TRUE(beta.isZero());
}

TEST(GreedyAssign, AllBelowThreshold) {
  const Assignment a = greedy_assign(Eigen::MatrixXd::Constant(2, 3, 0.1), 0.15);
  EXPECT_EQ(a.chi, (std::vector<int>{kUnassigned, kUnassigned}));
  EXPECT_EQ(a.assigned_count(), 0u);
}

TEST(GreedyAssign, HandExample) {
  Eigen::MatrixXd beta(2, 2);
  beta << 0.9, 0.4, 0.8, 0.3;
  const Assignment a = greedy_assign(beta, 0.15);
  EXPECT_EQ(a.chi, (std::vector<int>{0, 1}));
  EXPECT_DOUBLE_EQ(a.beta_chosen[0], 0.9);
  EXPECT_DOUBLE_EQ(a.beta_chosen[1], 0.3);
}

TEST(GreedyAssign, TieBreak) {
  const Assignment a = greedy_assign(Eigen::MatrixXd::Constant(2, 2, 0.5), 0.15);
  EXPECT_EQ(a.chi, (std::vector<int>{0, 1}));
}

TEST(NnJpdafAssign, RecomputesOnReducedTable) {
  // Full-table beta for track 1 is 1/(1+9-1) < eta, but after track 0 takes
  // measurement 0 the reduced table leaves a lone pair with beta = 1.
  Eigen::MatrixXd C(2, 2);
  C << 9, 0, 8, 1;
  AssocConfig cfg;
  const Assignment fresh = nn_jpdaf_assign(C, cfg);
  EXPECT_EQ(fresh.chi, (std::vector<int>{0, 1}));
  EXPECT_DOUBLE_EQ(fresh.beta_chosen[1], 1.0);
  cfg.recompute = false;
  const Assignment fixed = nn_jpdaf_assign(C, cfg);
  EXPECT_EQ(fixed.chi, (std::vector<int>{0, kUnassigned}));
}

TEST(NnJpdafAssign, EmptyScan) {
  const Assignment a = nn_jpdaf_assign(Eigen::MatrixXd::Zero(3, 0), {});
  EXPECT_EQ(a.chi, (std::vector<int>(3, kUnassigned)));
}

TEST(AssocConfig, RejectsNegativeB) {
  AssocConfig cfg;
  cfg.B = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
