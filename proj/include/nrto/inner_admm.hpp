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
#ifndef NRTO_INNER_ADMM_HPP
#define NRTO_INNER_ADMM_HPP

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "nrto/conic.hpp"
#include "nrto/constraints.hpp"
#include "nrto/lintraj.hpp"
#include "nrto/uncertainty.hpp"

namespace nrto {

/// A block or direct solve ended without an optimal conic status.
class InnerSolverError : public std::runtime_error {
 public:
  InnerSolverError(const std::string& block, ConicStatus status, int iteration);
  const std::string& block() const { return block_; }
  ConicStatus status() const { return status_; }
  int iteration() const { return iteration_; }

 private:
  std::string block_;
  ConicStatus status_;
  int iteration_;
};

/**
 * @brief Multiplier, split variables and penalty of the two-block splitting.
 *
 * p enters the linearized rows g_hat + J_u du + p <= 0, p_tilde bounds the
 * worst-case disturbance response of each row. Consensus p = p_tilde
 * recovers the robust rows.
 */
struct AdmmState {
  Vec lambda;
  Vec p;
  Vec p_tilde;
  double rho = 1.0;
  std::vector<double> residual_history;

  // Previous block solutions, reused as warm starts.
  std::optional<WarmStart> warm_first;
  std::optional<WarmStart> warm_second;
  std::optional<WarmStart> warm_direct;

  static AdmmState zeros(int n_g, double rho);
  double residual() const { return (p - p_tilde).norm(); }
  /// Throws std::invalid_argument unless rho > 0 and the sizes agree.
  void validate() const;
};

/// Everything the subproblems of one outer iteration need.
struct InnerContext {
  const StackedBlocks* blocks = nullptr;
  const LinearizedConstraintData* lin = nullptr;
  const UncertaintySet* set = nullptr;
  std::optional<ControlBounds> control_bounds;
  Vec u_hat;    // stacked, T n_u
  MatSeq R_u;   // T blocks, n_u x n_u, symmetric PSD
  MatSeq R_K;   // T blocks, n_u x n_u
  double r_trust = 1.0;
  ConicSettings conic;

  // Derived by prepare().
  Vec g_err;          // linearization-error support per row (zero without error sets)
  Mat basis;          // sqrt(tau) Gamma L^{-T}
  Mat trust_factor;   // R of a QR factorization of Fu

  std::ostream* log = nullptr;
  std::function<void(const std::string&, const ConicProgram&)> dump;
};

/// Fills the derived fields. error_sets may be null.
void prepare(InnerContext& ctx, const std::vector<ErrorEllipsoid>* error_sets);

/// sum_k ||R_K^k K_k||_F^2
double policy_cost(const InnerContext& ctx, const PolicyMatrix& K);
/// sum_k (u_hat_k + du_k)^T R_u^k (u_hat_k + du_k)
double control_cost(const InnerContext& ctx, const Vec& delta_u);

struct FirstBlockResult {
  PolicyMatrix K;
  Vec p_tilde;
  double objective = 0.0;
};

struct SecondBlockResult {
  Vec delta_u;
  Vec p;
  double objective = 0.0;
};

ConicProgram build_first_block(const AdmmState& state, const InnerContext& ctx);
ConicProgram build_second_block(const AdmmState& state, const InnerContext& ctx);
ConicProgram build_direct(const InnerContext& ctx);

/// argmin over (K, p_tilde); stores p_tilde in state.
FirstBlockResult block1_update(AdmmState& state, const InnerContext& ctx, int iteration = 0);
/// argmin over (du, p); stores p in state.
SecondBlockResult block2_update(AdmmState& state, const InnerContext& ctx, int iteration = 0);
/// lambda += rho (p - p_tilde); appends ||p - p_tilde|| to the history.
void dual_update(AdmmState& state);

/// Two callables sharing one state; used by run_admm and by small test splits.
struct AdmmBlocks {
  std::function<void(AdmmState&, int)> first;
  std::function<void(AdmmState&, int)> second;
};

/// Sweeps first -> second -> dual update until ||p - p_tilde|| <= eps_p or
/// max_iterations sweeps; returns the number of sweeps.
int run_admm_loop(AdmmState& state, const AdmmBlocks& blocks, int max_iterations, double eps_p);

struct AdmmResult {
  Vec delta_u;
  PolicyMatrix K;
  int iterations = 0;
  bool converged = false;
};

AdmmResult run_admm(AdmmState& state, const InnerContext& ctx, int L_max_in, double eps_p);

struct DirectResult {
  ConicStatus status = ConicStatus::kIterationLimit;
  Vec delta_u;
  PolicyMatrix K;
  Vec p;
  double objective = 0.0;
};

/**
 * Solves the joint problem over (du, K, p). On success p and p_tilde in
 * state are both set to the solution. A primal-infeasible program is
 * reported through the status; other failures throw InnerSolverError.
 */
DirectResult direct_solve(AdmmState& state, const InnerContext& ctx);

}  // namespace nrto

#endif  // NRTO_INNER_ADMM_HPP
