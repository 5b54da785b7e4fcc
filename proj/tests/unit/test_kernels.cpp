#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include <wspec/error.hpp>
#include <wspec/kernels.hpp>

#include "oracles.hpp"

using namespace wspec;

TEST(Kernels, ExactValues) {
  EXPECT_NEAR(r1(0.3, 0.3), 1.0 / 720.0, 1e-12);
  EXPECT_NEAR(b4(0.0), -1.0 / 30.0, 1e-12);
  EXPECT_NEAR(b2(0.0), 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(r1(0.0, 0.5), -oracle::bernoulli4(0.5) / 24.0, 1e-15);
}

TEST(Kernels, BernoulliPolynomialsMatchMonomialForm) {
  for (double u = 0.0; u <= 1.0; u += 0.03125) {
    EXPECT_NEAR(b2(u), oracle::bernoulli2(u), 1e-14);
    EXPECT_NEAR(b4(u), oracle::bernoulli4(u), 1e-14);
  }
}

TEST(Kernels, R1MatchesFourierSeries) {
  for (double a : {0.0, 0.1, 0.37, 0.5, 0.99}) {
    for (double b : {0.0, 0.25, 0.6, 1.0}) {
      EXPECT_NEAR(r1(a, b), oracle::r1_series(a, b), 1e-13) << a << "," << b;
    }
  }
}

TEST(Kernels, PeriodicityAndSymmetry) {
  EXPECT_NEAR(r1(0.0, 0.2), r1(1.0, 0.2), 1e-15);
  EXPECT_NEAR(r2(0.2, 0.7), r2(0.7, 0.2), 1e-15);
  EXPECT_NEAR(r1(0.1, 0.4), r1(0.4, 0.1), 1e-15);
}

TEST(Kernels, R2Components) {
  const double u1 = 0.2, u2 = 0.9;
  const double expected = oracle::bernoulli2(u1) * oracle::bernoulli2(u2) / 4.0 -
                          oracle::bernoulli4(u1 - u2 + 1.0) / 24.0;
  EXPECT_NEAR(r2(u1, u2), expected, 1e-14);
}

TEST(Kernels, ThetaWeightedSum) {
  const GridPoint a{0.2, 0.3}, b{0.7, 0.8};
  const Theta t{2.0, 3.0, 5.0, 7.0};
  const double expected = 2.0 * r1(0.2, 0.7) + 3.0 * r2(0.3, 0.8) +
                          5.0 * r1(0.2, 0.7) * (0.3 - 0.5) * (0.8 - 0.5) + 7.0 * r1(0.2, 0.7) * r2(0.3, 0.8);
  EXPECT_NEAR(rk_theta(a, b, t), expected, 1e-15);
  EXPECT_NEAR(r3(a, b), r1(0.2, 0.7) * (-0.2) * 0.3, 1e-15);
  EXPECT_NEAR(r4(a, b), r1(0.2, 0.7) * r2(0.3, 0.8), 1e-15);
}

TEST(Kernels, GramMatricesArePositiveSemidefinite) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> w(30);
    for (auto& v : w) v = unif(rng);
    const auto g = gram_matrix(w);
    EXPECT_EQ(g.kind, GramKind::kStationary);
    EXPECT_GE(min_eigenvalue(g.entries), -1e-8 * g.entries.norm());
    std::vector<GridPoint> pts(40);
    for (auto& p : pts) p = {unif(rng), unif(rng)};
    const auto h = gram_matrix(pts, Theta{unif(rng), unif(rng), unif(rng), unif(rng)});
    EXPECT_EQ(h.kind, GramKind::kSsanova);
    EXPECT_GE(min_eigenvalue(h.entries), -1e-8 * h.entries.norm());
  }
}

TEST(Kernels, CrossKernelsMatchPointwise) {
  const std::vector<double> a{0.1, 0.5}, b{0.2, 0.3, 0.9};
  const auto x1 = cross_r1(a, b);
  const auto x2 = cross_r2(a, b);
  ASSERT_EQ(x1.rows(), 2);
  ASSERT_EQ(x1.cols(), 3);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_DOUBLE_EQ(x1(i, j), r1(a[i], b[j]));
      EXPECT_DOUBLE_EQ(x2(i, j), r2(a[i], b[j]));
    }
  }
}

TEST(Kernels, DomainAndSizeChecks) {
  EXPECT_THROW(r1(-0.1, 0.2), InvalidInput);
  EXPECT_THROW(r2(0.5, 1.5), InvalidInput);
  EXPECT_THROW(b4(2.0), InvalidInput);
  std::vector<double> many(20, 0.5);
  EXPECT_THROW(gram_matrix(many, 10), InvalidInput);
}
