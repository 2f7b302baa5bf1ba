/*
 * Copyright 2026 The nrto Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nrto/uncertainty.hpp"
#include "../support/oracles.hpp"

namespace nrto {
namespace {

using testing::random_spd;

Mat random_mat(int r, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1, 1);
  Mat M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = U(rng);
  return M;
}

Vec random_vec(int n, std::mt19937_64& rng) { return random_mat(n, 1, rng); }

TEST(UncertaintySet, RejectsBadInputs) {
  EXPECT_THROW(UncertaintySet(Mat::Ones(4, 2), Mat::Identity(2, 2), -0.1), std::invalid_argument);
  Mat S(2, 2);
  S << 1, 2, 2, 1;  // indefinite
  EXPECT_THROW(UncertaintySet(Mat::Ones(4, 2), S, 1.0), std::invalid_argument);
  EXPECT_THROW(UncertaintySet(Mat::Ones(4, 3), Mat::Identity(2, 2), 1.0), std::invalid_argument);
}

TEST(UncertaintySet, SupportAtZero) {
  std::mt19937_64 rng(1);
  UncertaintySet set(random_mat(6, 3, rng), random_spd(3, rng), 0.3);
  EXPECT_EQ(set.support(Vec::Zero(6)), 0.0);
}

TEST(UncertaintySet, SupportIdentity) {
  UncertaintySet set(Mat::Identity(3, 3), Mat::Identity(3, 3), 4.0);
  EXPECT_DOUBLE_EQ(set.support(Vec::Unit(3, 0)), 2.0);
}

TEST(UncertaintySet, SupportMatchesSamplingOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat G = random_mat(9, 3, rng);
    const Mat S = random_spd(3, rng);
    const double tau = 0.1 + trial;
    const Vec c = random_vec(9, rng);
    UncertaintySet set(G, S, tau);
    const double analytic = set.support(c);
    const double sampled = testing::sampled_support(G, S, tau, c, 100000, rng);
    EXPECT_GE(analytic, sampled - 1e-12);
    EXPECT_LT(analytic - sampled, 0.01 * analytic);
  }
}

TEST(UncertaintySet, SupportHomogeneity) {
  std::mt19937_64 rng(8);
  const Mat G = random_mat(8, 4, rng);
  const Mat S = random_spd(4, rng);
  UncertaintySet set(G, S, 0.7);
  const Vec c = random_vec(8, rng);
  EXPECT_NEAR(set.support(3.5 * c), 3.5 * set.support(c), 1e-12 * set.support(c) * 3.5);
  // Scaling tau by s^2 scales the support by s.
  EXPECT_NEAR(set.with_tau(0.7 * 9).support(c), 3 * set.support(c), 1e-12 * set.support(c) * 3);
}

TEST(UncertaintySet, ResponseBasisReproducesSupport) {
  std::mt19937_64 rng(9);
  UncertaintySet set(random_mat(8, 4, rng), random_spd(4, rng), 0.4);
  const Vec c = random_vec(8, rng);
  EXPECT_NEAR((set.response_basis().transpose() * c).norm(), set.support(c), 1e-12);
}

TEST(UncertaintySet, ZeroTauSamplesAreZero) {
  std::mt19937_64 rng(2);
  UncertaintySet set(random_mat(6, 2, rng), Mat::Identity(2, 2), 0.0);
  for (const auto& z : set.sample(rng, 50, false)) EXPECT_EQ(z.norm(), 0.0);
  for (const auto& z : set.sample(rng, 50, true)) EXPECT_EQ(z.norm(), 0.0);
}

TEST(UncertaintySet, BoundarySamplesOnSurface) {
  std::mt19937_64 rng(3);
  const Mat S = random_spd(4, rng);
  UncertaintySet set(random_mat(6, 4, rng), S, 0.3);
  for (int i = 0; i < 1000; ++i) {
    const Vec z = set.sample_z(rng, true);
    EXPECT_LT(std::abs(z.dot(S * z) - 0.3), 1e-12 * 0.3);
  }
}

TEST(UncertaintySet, InteriorSamplesUniformInVolume) {
  std::mt19937_64 rng(4);
  UncertaintySet set(Mat::Identity(2, 2), Mat::Identity(2, 2), 1.0);
  int inside = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) inside += set.sample_z(rng, false).norm() <= 0.5;
  EXPECT_NEAR(static_cast<double>(inside) / n, 0.25, 0.01);
}

TEST(UncertaintySet, SamplesNeverExceedSupport) {
  std::mt19937_64 rng(5);
  UncertaintySet set(random_mat(6, 3, rng), random_spd(3, rng), 0.5);
  const auto samples = set.sample(rng, 10000, false);
  const auto boundary = set.sample(rng, 2000, true);
  for (int k = 0; k < 100; ++k) {
    const Vec c = random_vec(6, rng);
    const double s = set.support(c);
    for (const auto& z : samples) ASSERT_LE(c.dot(z), s + 1e-12);
    for (const auto& z : boundary) ASSERT_LE(c.dot(z), s + 1e-12);
  }
}

TEST(UncertaintySet, RandomGammaIsSeededUniform) {
  const UncertaintySet a = UncertaintySet::random_gamma(30, 4, 0.1, 42);
  const UncertaintySet b = UncertaintySet::random_gamma(30, 4, 0.1, 42);
  const UncertaintySet c = UncertaintySet::random_gamma(30, 4, 0.1, 43);
  EXPECT_EQ(a.gamma(), b.gamma());
  EXPECT_NE(a.gamma(), c.gamma());
  EXPECT_LE(a.gamma().cwiseAbs().maxCoeff(), 1.0);
  EXPECT_TRUE(a.shape().isIdentity());
  EXPECT_EQ(a.zeta_dim(), 30);
  EXPECT_EQ(a.n_z(), 4);
}

TEST(ErrorEllipsoids, DegenerateCloud) {
  const Vec v = (Vec(2) << 0.3, -0.2).finished();
  const auto sets = fit_error_ellipsoids({std::vector<Vec>(5, v)}, 1.1);
  ASSERT_EQ(sets.size(), 1u);
  EXPECT_TRUE(sets[0].center.isApprox(v));
  EXPECT_EQ(sets[0].level, 0.0);
  EXPECT_LE(sets[0].membership(v), sets[0].level);
}

TEST(ErrorEllipsoids, CircleSamplesOnBoundary) {
  std::vector<Vec> pts;
  for (int i = 0; i < 64; ++i) {
    const double a = 2 * M_PI * i / 64;
    pts.push_back((Vec(2) << std::cos(a), std::sin(a)).finished());
  }
  const auto sets = fit_error_ellipsoids({pts}, 1.0);
  for (const auto& p : pts) EXPECT_NEAR(sets[0].membership(p), sets[0].level, 1e-9 * sets[0].level);
}

TEST(ErrorEllipsoids, InflationScalesLevel) {
  std::mt19937_64 rng(6);
  std::vector<std::vector<Vec>> samples(3);
  for (auto& s : samples)
    for (int i = 0; i < 40; ++i) s.push_back(random_vec(3, rng));
  const auto sets = fit_error_ellipsoids(samples, 1.1);
  for (std::size_t k = 0; k < sets.size(); ++k) {
    for (const auto& p : samples[k]) EXPECT_LE(sets[k].membership(p), sets[k].level / 1.1 * (1 + 1e-12));
  }
}

TEST(ErrorEllipsoids, TooFewSamplesNamesTimestep) {
  std::vector<std::vector<Vec>> samples = {std::vector<Vec>(4, Vec::Zero(3)), std::vector<Vec>(2, Vec::Zero(3))};
  try {
    fit_error_ellipsoids(samples, 1.1);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("timestep 1"), std::string::npos);
  }
}

TEST(ErrorSupport, ZeroSetsGiveZero) {
  const auto sets = zero_error_sets(4, 3);
  std::mt19937_64 rng(1);
  std::vector<Vec> g;
  for (int k = 0; k < 4; ++k) g.push_back(random_vec(3, rng));
  EXPECT_EQ(error_support(sets, g), 0.0);
}

TEST(ErrorSupport, SingleUnitBall) {
  ErrorEllipsoid e{Vec::Zero(2), Mat::Identity(2, 2), 9.0};
  EXPECT_DOUBLE_EQ(error_support({e}, {Vec::Unit(2, 0)}), 3.0);
}

TEST(ErrorSupport, MatchesPerStepSamplingOracle) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> N(0, 1);
  std::vector<ErrorEllipsoid> sets;
  std::vector<Vec> g;
  double sampled = 0.0;
  for (int k = 0; k < 3; ++k) {
    ErrorEllipsoid e{random_vec(2, rng), random_spd(2, rng), 0.5 + k};
    g.push_back(random_vec(2, rng));
    // Boundary points center + sqrt(level) L^{-T} u for shape = L L^T.
    Eigen::LLT<Mat> llt(e.shape);
    double best = -1e300;
    for (int s = 0; s < 100000; ++s) {
      Vec u(2);
      u << N(rng), N(rng);
      u.normalize();
      const Vec x = e.center + std::sqrt(e.level) * Mat(llt.matrixU()).triangularView<Eigen::Upper>().solve(u);
      best = std::max(best, g.back().dot(x));
    }
    sampled += best;
    sets.push_back(e);
  }
  const double analytic = error_support(sets, g);
  EXPECT_GE(analytic, sampled - 1e-12);
  EXPECT_LT(analytic - sampled, 0.01 * std::abs(analytic));
}

}  // namespace
}  // namespace nrto
