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
#ifndef NRTO_MONTE_HPP
#define NRTO_MONTE_HPP

#include <cstdint>
#include <limits>
#include <random>

#include "nrto/constraints.hpp"
#include "nrto/lintraj.hpp"
#include "nrto/models.hpp"
#include "nrto/uncertainty.hpp"

namespace nrto {

/**
 * @brief Affine policy u_k = u_bar_k + K_k d_{k-1} with d_{-1} = d0_bar,
 * together with its disturbance-free trajectory.
 */
struct Policy {
  VecSeq u_bar;
  MatSeq gains;
  NominalTrajectory nominal;

  int horizon() const { return static_cast<int>(u_bar.size()); }
  PolicyMatrix gain_matrix() const { return PolicyMatrix(gains); }

  /// Builds the policy and its nominal rollout from x0.
  static Policy make(const DynamicsModel& model, const Vec& x0, VecSeq u_bar, MatSeq gains);
};

struct RolloutRecord {
  VecSeq states;         // T+1
  VecSeq controls;       // T
  Vec zeta;              // injected [d0_bar; d_0; ...; d_{T-1}]
  VecSeq reconstructed;  // what the controller recovered, same blocks as zeta
  Vec constraint_values; // g_j on the realized trajectory (empty until evaluated)
  VecSeq lin_errors;     // x^e_k (empty unless requested)
};

/**
 * Runs the policy on the nonlinear model: x_0 = x0_bar + d0_bar,
 * u_k = u_bar_k + K_k d_{k-1}, x_{k+1} = f(x_k, u_k) + d_k. The controller
 * uses disturbances reconstructed from the observed states.
 */
RolloutRecord simulate_closed_loop(const DynamicsModel& model, const Policy& policy, const Vec& zeta,
                                   const Vec& x_bar0);

/// x^e_k = x_k - x_bar_k - [Fu K zeta + Fzeta zeta]_k for one rollout.
VecSeq linearization_errors(const RolloutRecord& record, const Policy& policy, const StackedBlocks& blocks);

/// Per-timestep collections (T+1 of them) of linearization-error samples.
std::vector<std::vector<Vec>> collect_linearization_errors(const DynamicsModel& model, const Policy& policy,
                                                           const StackedBlocks& blocks,
                                                           const std::vector<Vec>& zetas);

struct SatisfactionReport {
  int samples = 0;
  int satisfied = 0;
  double fraction = 0.0;
  std::vector<int> row_violations;   // per constraint row
  std::vector<double> row_worst;     // max g_j over the samples
  double worst_violation = 0.0;      // max over rows and samples of g_j
  int worst_sample = -1;
};

/// A rollout satisfies the constraints when every g_j <= 0.
SatisfactionReport evaluate_satisfaction(const std::vector<RolloutRecord>& records, const ConstraintSet& cs);

enum class SampleStream : std::uint32_t { kValidation = 0, kFit = 1 };

/// Independent generator for (master seed, stream, sample index).
std::mt19937_64 substream(std::uint64_t master, SampleStream stream, std::uint64_t index);

/// count disturbance vectors, sample i drawn from its own substream.
std::vector<Vec> draw_disturbances(const UncertaintySet& set, int count, std::uint64_t seed, SampleStream stream,
                                   bool boundary);

struct MonteCarloResult {
  std::vector<RolloutRecord> records;
  SatisfactionReport report;
};

MonteCarloResult run_monte_carlo(const DynamicsModel& model, const Policy& policy, const ConstraintSet& cs,
                                 const std::vector<Vec>& zetas);

/// Linear prediction of the rows: g(x_bar) + grad g(x_bar) (Fu K + Fzeta) zeta.
struct LinearizedRowCheck {
  int samples = 0;
  int satisfied = 0;
  double worst = -std::numeric_limits<double>::infinity();
};

LinearizedRowCheck check_linearized_rows(const Policy& policy, const StackedBlocks& blocks,
                                         const LinearizedConstraintData& lin, const std::vector<Vec>& zetas,
                                         double tolerance);

}  // namespace nrto

#endif  // NRTO_MONTE_HPP
