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

#include <random>

#include <gtest/gtest.h>

#include "nrto/lintraj.hpp"
#include "../support/oracles.hpp"

namespace nrto {
namespace {

using testing::RandomSystem;
using testing::random_system;
using testing::recursion;

Vec random_vec(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1, 1);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = U(rng);
  return v;
}

TEST(Transition, Conventions) {
  std::mt19937_64 rng(1);
  const RandomSystem s = random_system(rng);
  EXPECT_TRUE(transition(s.A, 0, 0).isIdentity());
  EXPECT_EQ(transition(s.A, 1, 0), s.A[0]);
  EXPECT_THROW(transition(s.A, 0, 1), std::invalid_argument);
}

TEST(Transition, IdentityJacobians) {
  MatSeq A(6, Mat::Identity(3, 3));
  for (int k1 = 0; k1 <= 6; ++k1)
    for (int k2 = 0; k2 <= k1; ++k2) EXPECT_TRUE(transition(A, k1, k2).isIdentity());
}

TEST(Transition, MatchesNaiveProduct) {
  std::mt19937_64 rng(2);
  MatSeq A;
  for (int k = 0; k < 5; ++k) A.push_back(Mat::Random(2, 2));
  for (int k1 = 0; k1 <= 5; ++k1) {
    for (int k2 = 0; k2 <= k1; ++k2) {
      Mat P = Mat::Identity(2, 2);
      for (int j = k1 - 1; j >= k2; --j) P = P * A[j];  // A_{k1-1} ... A_{k2}
      EXPECT_LT((transition(A, k1, k2) - P).norm(), 1e-13);
    }
  }
}

TEST(BuildBlocks, SingleStep) {
  Mat A0(2, 2), B0(2, 1);
  A0 << 1, 2, 3, 4;
  B0 << 5, 6;
  const StackedBlocks b = build_blocks({A0}, {B0});
  EXPECT_TRUE(b.Fu.topRows(2).isZero());
  EXPECT_EQ(Mat(b.Fu.bottomRows(2)), B0);
  EXPECT_TRUE(b.Fd_tilde.topRows(2).isZero());
  EXPECT_TRUE(Mat(b.Fd_tilde.bottomRows(2)).isIdentity());
  EXPECT_TRUE(Mat(b.F0.topRows(2)).isIdentity());
  EXPECT_EQ(Mat(b.F0.bottomRows(2)), A0);
}

TEST(BuildBlocks, IdentityCumulativePattern) {
  const StackedBlocks b = build_blocks(MatSeq(3, Mat::Identity(1, 1)), MatSeq(3, Mat::Identity(1, 1)));
  Mat expect(4, 3);
  expect << 0, 0, 0, 1, 0, 0, 1, 1, 0, 1, 1, 1;
  EXPECT_EQ(b.Fu, expect);
}

TEST(BuildBlocks, StructuralInvariants) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomSystem s = random_system(rng);
    const StackedBlocks b = build_blocks(s.A, s.B);
    const int n = s.n_x, m = s.n_u;
    EXPECT_EQ(Mat(b.Fzeta.leftCols(n)), b.F0);
    EXPECT_EQ(Mat(b.Fzeta.rightCols(s.T * n)), b.Fd_tilde);
    for (int i = 0; i <= s.T; ++i) {
      EXPECT_LT((b.F0.middleRows(i * n, n) - transition(s.A, i, 0)).norm(), 1e-13);
      for (int j = 0; j < s.T; ++j) {
        if (j >= i) {
          EXPECT_TRUE(b.Fu.block(i * n, j * m, n, m).isZero());
          EXPECT_TRUE(b.Fd_tilde.block(i * n, j * n, n, n).isZero());
        }
        if (i == j + 1) {
          EXPECT_TRUE(Mat(b.Fd_tilde.block(i * n, j * n, n, n)).isIdentity());
        }
      }
    }
  }
}

TEST(BuildBlocks, RejectsMismatch) {
  EXPECT_THROW(build_blocks(MatSeq(2, Mat::Identity(2, 2)), MatSeq(3, Mat::Ones(2, 1))), std::invalid_argument);
  EXPECT_THROW(build_blocks({}, {}), std::invalid_argument);
}

TEST(PolicyMatrix, AssembledLayout) {
  std::mt19937_64 rng(4);
  MatSeq K;
  for (int k = 0; k < 4; ++k) K.push_back(Mat::Random(2, 3));
  const PolicyMatrix P(K);
  const Mat M = P.assembled();
  ASSERT_EQ(M.rows(), 8);
  ASSERT_EQ(M.cols(), 15);
  EXPECT_TRUE(M.rightCols(3).isZero());
  const Vec zeta = random_vec(15, rng);
  const Vec out = P.apply(zeta);
  EXPECT_LT((out - M * zeta).norm(), 1e-14);
  for (int k = 0; k < 4; ++k) EXPECT_LT((out.segment(2 * k, 2) - K[k] * zeta.segment(3 * k, 3)).norm(), 1e-14);
  Vec z2 = zeta;
  z2.tail(3).setRandom();
  EXPECT_EQ(P.apply(z2), out);
  const Vec v = random_vec(8, rng);
  EXPECT_LT((P.apply_transpose(v) - M.transpose() * v).norm(), 1e-14);
}

TEST(StackedResponse, Origin) {
  std::mt19937_64 rng(5);
  const RandomSystem s = random_system(rng);
  const StackedBlocks b = build_blocks(s.A, s.B);
  const PolicyMatrix K = PolicyMatrix::zeros(s.T, s.n_u, s.n_x);
  EXPECT_TRUE(stacked_response(b, K, Vec::Zero(s.T * s.n_u), Vec::Zero((s.T + 1) * s.n_x)).isZero());
  const Vec du = random_vec(s.T * s.n_u, rng);
  EXPECT_LT((stacked_response(b, K, du, Vec::Zero((s.T + 1) * s.n_x)) - b.Fu * du).norm(), 1e-14);
}

TEST(StackedResponse, MatchesRecursion) {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const RandomSystem s = random_system(rng);
    const StackedBlocks b = build_blocks(s.A, s.B);
    MatSeq K;
    for (int k = 0; k < s.T; ++k) K.push_back(Mat::Random(s.n_u, s.n_x));
    const Vec du = random_vec(s.T * s.n_u, rng);
    const Vec zeta = random_vec((s.T + 1) * s.n_x, rng);
    const Vec compact = stacked_response(b, PolicyMatrix(K), du, zeta);
    worst = std::max(worst, (compact - recursion(s, K, du, zeta)).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(ClosedLoopTranspose, MatchesDense) {
  std::mt19937_64 rng(7);
  const RandomSystem s = random_system(rng);
  const StackedBlocks b = build_blocks(s.A, s.B);
  MatSeq K;
  for (int k = 0; k < s.T; ++k) K.push_back(Mat::Random(s.n_u, s.n_x));
  const PolicyMatrix P(K);
  const Vec c = random_vec((s.T + 1) * s.n_x, rng);
  const Mat M = b.Fu * P.assembled() + b.Fzeta;
  EXPECT_LT((closed_loop_transpose(b, P, c) - M.transpose() * c).norm(), 1e-12);
}

}  // namespace
}  // namespace nrto
