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

#include "../support/oracles.hpp"
#include "nrto/inner_admm.hpp"
#include "nrto/models.hpp"

namespace nrto {
namespace {

// Double integrator pushed into a terminal box under a small ellipsoid.
struct Toy {
  int T = 5;
  std::shared_ptr<LinearModel> model = LinearModel::double_integrator(0.1);
  ConstraintSet cs{5, 4};
  NominalTrajectory nominal;
  StackedBlocks blocks;
  LinearizedConstraintData lin;
  UncertaintySet set = UncertaintySet::random_gamma(24, 3, 1e-3, 4);
  InnerContext ctx;

  explicit Toy(double r_trust = 10.0, double r_k = 1.0) {
    cs.add_terminal_box({0, 1}, (Vec(2) << 0.2, -0.1).finished(), (Vec(2) << 0.4, 0.1).finished());
    nominal = rollout(*model, Vec::Zero(4), VecSeq(T, Vec::Zero(2)));
    MatSeq A, B;
    linearize_along(*model, nominal, A, B);
    blocks = build_blocks(A, B);
    lin = linearize(cs, nominal, blocks);
    ctx.blocks = &blocks;
    ctx.lin = &lin;
    ctx.set = &set;
    ctx.u_hat = Vec::Zero(T * 2);
    ctx.R_u = MatSeq(T, Mat::Identity(2, 2));
    ctx.R_K = MatSeq(T, r_k * Mat::Identity(2, 2));
    ctx.r_trust = r_trust;
    prepare(ctx, nullptr);
  }
};

TEST(AdmmState, ZerosAndValidation) {
  AdmmState s = AdmmState::zeros(3, 2.0);
  EXPECT_EQ(s.lambda.size(), 3);
  EXPECT_EQ(s.residual(), 0.0);
  EXPECT_NO_THROW(s.validate());
  s.rho = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.rho = 1.0;
  s.p_tilde = Vec::Zero(2);
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(AdmmState, DualUpdateAddsScaledResidual) {
  AdmmState s = AdmmState::zeros(2, 3.0);
  s.lambda << 1.0, -1.0;
  s.p << 0.5, 2.0;
  s.p_tilde << 0.0, 1.0;
  dual_update(s);
  EXPECT_DOUBLE_EQ(s.lambda(0), 1.0 + 3.0 * 0.5);
  EXPECT_DOUBLE_EQ(s.lambda(1), -1.0 + 3.0 * 1.0);
  ASSERT_EQ(s.residual_history.size(), 1u);
  EXPECT_DOUBLE_EQ(s.residual_history[0], std::sqrt(1.25));
}

TEST(AdmmLoop, DisjointIntervalsReachMinimalDistance) {
  AdmmState s = AdmmState::zeros(1, 1.0);
  const int sweeps = run_admm_loop(s, testing::interval_split(2.0, 3.0, 0.0, 1.0), 500, 1e-6);
  EXPECT_EQ(sweeps, 500);
  EXPECT_NEAR(s.residual_history.back(), 1.0, 1e-2);
  EXPECT_NEAR(s.p(0), 1.0, 1e-9);
  EXPECT_NEAR(s.p_tilde(0), 2.0, 1e-9);
  // The multiplier drifts without bound.
  EXPECT_LT(s.lambda(0), -400.0);
}

TEST(AdmmLoop, OverlappingIntervalsReachConsensus) {
  AdmmState s = AdmmState::zeros(1, 1.0);
  s.p(0) = -5.0;
  const int sweeps = run_admm_loop(s, testing::interval_split(1.0, 3.0, 0.0, 2.0), 500, 1e-9);
  EXPECT_LT(sweeps, 500);
  EXPECT_LE(s.residual(), 1e-9);
  EXPECT_GE(s.p(0), 1.0 - 1e-9);
  EXPECT_LE(s.p(0), 2.0 + 1e-9);
}

TEST(AdmmLoop, RejectsZeroIterations) {
  AdmmState s = AdmmState::zeros(1, 1.0);
  EXPECT_THROW(run_admm_loop(s, testing::interval_split(0, 1, 0, 1), 0, 1e-6), std::invalid_argument);
}

TEST(InnerContext, PrepareChecksDimensions) {
  Toy toy;
  InnerContext bad = toy.ctx;
  const UncertaintySet small = UncertaintySet::random_gamma(8, 2, 1.0, 1);
  bad.set = &small;
  EXPECT_THROW(prepare(bad, nullptr), std::invalid_argument);
  std::vector<ErrorEllipsoid> wrong = zero_error_sets(3, 4);
  EXPECT_THROW(prepare(toy.ctx, &wrong), std::invalid_argument);
  InnerContext unprepared;
  unprepared.blocks = &toy.blocks;
  unprepared.lin = &toy.lin;
  unprepared.set = &toy.set;
  EXPECT_THROW(build_direct(unprepared), std::invalid_argument);
}

TEST(InnerContext, TrustFactorPreservesNorm) {
  Toy toy;
  std::mt19937_64 rng(3);
  const Vec du = testing::uniform_vec(toy.T * 2, rng);
  EXPECT_NEAR((toy.ctx.trust_factor * du).norm(), (toy.blocks.Fu * du).norm(), 1e-12);
}

TEST(DirectSolve, IsRobustlyFeasible) {
  Toy toy;
  AdmmState s = AdmmState::zeros(toy.lin.rows(), 1.0);
  const DirectResult r = direct_solve(s, toy.ctx);
  ASSERT_EQ(r.status, ConicStatus::kOptimal);
  EXPECT_EQ(s.p, s.p_tilde);
  const Vec g = toy.lin.g_hat + toy.lin.J_u * r.delta_u;
  for (int j = 0; j < toy.lin.rows(); ++j) {
    EXPECT_LE(g(j) + tractable_row(j, toy.lin, toy.set, r.K), 1e-6) << j;
  }
  // The lower x face is tight at the optimum.
  EXPECT_NEAR(g(1) + tractable_row(1, toy.lin, toy.set, r.K), 0.0, 1e-6);
}

TEST(DirectSolve, ObjectiveMatchesCosts) {
  Toy toy;
  AdmmState s = AdmmState::zeros(toy.lin.rows(), 1.0);
  const DirectResult r = direct_solve(s, toy.ctx);
  ASSERT_EQ(r.status, ConicStatus::kOptimal);
  EXPECT_NEAR(r.objective, control_cost(toy.ctx, r.delta_u) + policy_cost(toy.ctx, r.K), 1e-6);
}

TEST(DirectSolve, TrustRegionBindsWhenSmall) {
  Toy tight(0.01);
  AdmmState s = AdmmState::zeros(tight.lin.rows(), 1.0);
  // The box is out of reach: the joint problem is infeasible.
  EXPECT_EQ(direct_solve(s, tight.ctx).status, ConicStatus::kPrimalInfeasible);

  Toy loose(10.0);
  AdmmState s2 = AdmmState::zeros(loose.lin.rows(), 1.0);
  const DirectResult r = direct_solve(s2, loose.ctx);
  ASSERT_EQ(r.status, ConicStatus::kOptimal);
  EXPECT_LT((loose.blocks.Fu * r.delta_u).norm(), 10.0 - 1e-3);
}

TEST(Admm, SecondBlockRespectsTrustRegion) {
  Toy tight(0.01);
  AdmmState s = AdmmState::zeros(tight.lin.rows(), 1.0);
  block1_update(s, tight.ctx);
  const SecondBlockResult r = block2_update(s, tight.ctx);
  EXPECT_LE((tight.blocks.Fu * r.delta_u).norm(), 0.01 + 1e-7);
  // p absorbs what du cannot reach.
  const Vec lhs = tight.lin.g_hat + tight.lin.J_u * r.delta_u + r.p;
  EXPECT_LE(lhs.maxCoeff(), 1e-7);
}

TEST(Admm, FirstBlockBoundsWorstCaseResponse) {
  Toy toy;
  AdmmState s = AdmmState::zeros(toy.lin.rows(), 1.0);
  s.p.setConstant(0.05);
  const FirstBlockResult r = block1_update(s, toy.ctx);
  for (int j = 0; j < toy.lin.rows(); ++j) EXPECT_GE(r.p_tilde(j), tractable_row(j, toy.lin, toy.set, r.K) - 1e-7);
  EXPECT_EQ(s.p_tilde, r.p_tilde);
}

TEST(Admm, AgreesWithDirectSolve) {
  Toy toy;
  AdmmState d = AdmmState::zeros(toy.lin.rows(), 1.0);
  const DirectResult direct = direct_solve(d, toy.ctx);
  ASSERT_EQ(direct.status, ConicStatus::kOptimal);

  // Convergence is slow at small penalties; a large one gets there.
  AdmmState s = AdmmState::zeros(toy.lin.rows(), 1000.0);
  const AdmmResult a = run_admm(s, toy.ctx, 3000, 1e-6);
  EXPECT_TRUE(a.converged);
  EXPECT_LT((a.delta_u - direct.delta_u).norm(), 1e-3 * (1.0 + direct.delta_u.norm()));
  EXPECT_NEAR(control_cost(toy.ctx, a.delta_u) + policy_cost(toy.ctx, a.K), direct.objective,
              1e-3 * (1.0 + direct.objective));
}

TEST(Admm, ResidualHistoryIsRecorded) {
  Toy toy;
  AdmmState s = AdmmState::zeros(toy.lin.rows(), 1.0);
  const AdmmResult a = run_admm(s, toy.ctx, 5, 0.0);
  EXPECT_EQ(a.iterations, 5);
  EXPECT_EQ(s.residual_history.size(), 5u);
  EXPECT_FALSE(a.converged);
}

TEST(DirectSolve, HeavierGainWeightShrinksGains) {
  double previous = std::numeric_limits<double>::infinity();
  for (double w : {0.1, 1.0, 10.0, 100.0}) {
    Toy toy(10.0, w);
    AdmmState s = AdmmState::zeros(toy.lin.rows(), 1.0);
    const DirectResult r = direct_solve(s, toy.ctx);
    ASSERT_EQ(r.status, ConicStatus::kOptimal);
    double gains = 0.0;
    for (const auto& K : r.K.blocks()) gains += K.squaredNorm();
    EXPECT_LE(gains, previous * (1.0 + 1e-6) + 1e-12) << w;
    previous = gains;
  }
}

TEST(DirectSolve, ErrorSetsTightenRows) {
  Toy toy;
  AdmmState s = AdmmState::zeros(toy.lin.rows(), 1.0);
  const DirectResult plain = direct_solve(s, toy.ctx);

  std::vector<ErrorEllipsoid> err = zero_error_sets(toy.T + 1, 4);
  err.back().level = 1e-4;
  prepare(toy.ctx, &err);
  EXPECT_GT(toy.ctx.g_err.maxCoeff(), 0.0);
  AdmmState s2 = AdmmState::zeros(toy.lin.rows(), 1.0);
  const DirectResult tighter = direct_solve(s2, toy.ctx);
  ASSERT_EQ(tighter.status, ConicStatus::kOptimal);
  const Vec g = toy.lin.g_hat + toy.lin.J_u * tighter.delta_u;
  for (int j = 0; j < toy.lin.rows(); ++j)
    EXPECT_LE(g(j) + robust_margin_le(j, toy.lin, toy.set, tighter.K, &err), 1e-6);
  EXPECT_GT(tighter.objective, plain.objective);
}

}  // namespace
}  // namespace nrto
