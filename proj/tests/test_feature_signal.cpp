#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "fatrack/errors.hpp"
#include "fatrack/feature_signal.hpp"

using namespace fatrack;

TEST(Atom, DcIsAllOnes) {
  const Eigen::VectorXcd a = atom(0.0, 0.0, 4);
  EXPECT_TRUE(a.isApprox(Eigen::VectorXcd::Ones(4)));
}

TEST(Atom, QuarterFrequency) {
  const Eigen::VectorXcd a = atom(0.25, 0.0, 4);
  const cplx expect[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int t = 0; t < 4; ++t) EXPECT_NEAR(std::abs(a(t) - expect[t]), 0.0, 1e-15);
}

TEST(Atom, UnitModulus) {
  const Eigen::VectorXcd a = atom(0.3137, 1.1, 64);
  for (int t = 0; t < 64; ++t) EXPECT_NEAR(std::abs(a(t)), 1.0, 1e-14);
}

TEST(Synthesize, SingleDcLine) {
  EXPECT_TRUE(synthesize({{1.0, 0.0, 0.0}}, 5).isApprox(Eigen::VectorXcd::Ones(5)));
}

TEST(Synthesize, Linear) {
  const std::vector<SpectralLine> a{{0.5, 0.1, 0.2}}, b{{1.5, 0.7, -1.0}, {0.25, 0.33, 2.0}};
  std::vector<SpectralLine> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  EXPECT_TRUE((synthesize(a, 16) + synthesize(b, 16)).isApprox(synthesize(ab, 16), 1e-14));
}

TEST(Synthesize, MatchesInverseDft) {
  const int n = 8;
  const Eigen::VectorXcd x = synthesize({{1.0, 1.0 / 8, 0.0}, {1.0, 3.0 / 8, 0.0}}, n);
  std::vector<cplx> spectrum(n, 0.0);
  spectrum[1] = n;
  spectrum[3] = n;
  for (int t = 0; t < n; ++t) {
    cplx acc = 0.0;
    for (int k = 0; k < n; ++k) acc += spectrum[k] * std::polar(1.0, 2 * std::numbers::pi * k * t / n);
    EXPECT_NEAR(std::abs(x(t) - acc / static_cast<double>(n)), 0.0, 1e-13);
  }
}

TEST(Restrict, FullPatternIsIdentity) {
  const Eigen::VectorXcd x = Eigen::VectorXcd::Random(6);
  EXPECT_EQ(restrict(x, ObservationPattern::full(6)), x);
}

TEST(Restrict, Singleton) {
  Eigen::VectorXcd x(3);
  x << cplx(1, 2), cplx(3, 4), cplx(5, 6);
  const Eigen::VectorXcd r = restrict(x, {{0}, 3});
  ASSERT_EQ(r.size(), 1);
  EXPECT_EQ(r(0), cplx(1, 2));
}

TEST(Restrict, ScatterGatherRoundTrip) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    ObservationPattern p;
    p.n = 24;
    for (int t = 0; t < p.n; ++t) {
      if (std::bernoulli_distribution(0.6)(rng)) p.omega.push_back(t);
    }
    if (p.omega.empty()) continue;
    const Eigen::VectorXcd v = Eigen::VectorXcd::Random(static_cast<Eigen::Index>(p.alpha()));
    const Eigen::VectorXcd full = scatter(v, p);
    EXPECT_EQ(restrict(full, p), v);
    for (int t : p.complement()) EXPECT_EQ(full(t), cplx(0, 0));
  }
}

TEST(ObservationPattern, ValidateRejectsUnsorted) {
  EXPECT_THROW((ObservationPattern{{2, 1}, 4}.validate()), ConfigError);
  EXPECT_THROW((ObservationPattern{{0, 4}, 4}.validate()), ConfigError);
  EXPECT_NO_THROW((ObservationPattern{{0, 3}, 4}.validate()));
}

TEST(ObservationPattern, Complement) {
  const ObservationPattern p{{0, 2, 3}, 6};
  EXPECT_EQ(p.complement(), (std::vector<int>{1, 4, 5}));
  EXPECT_DOUBLE_EQ(static_cast<double>(p.alpha()), 3.0);
}

TEST(WrapUnit, Range) {
  EXPECT_DOUBLE_EQ(wrap_unit(1.25), 0.25);
  EXPECT_DOUBLE_EQ(wrap_unit(-0.25), 0.75);
  EXPECT_DOUBLE_EQ(wrap_unit(0.0), 0.0);
}
