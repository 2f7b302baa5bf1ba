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
#ifndef NRTO_SCO_HPP
#define NRTO_SCO_HPP

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "nrto/conic.hpp"
#include "nrto/constraints.hpp"
#include "nrto/inner_admm.hpp"
#include "nrto/models.hpp"
#include "nrto/monte.hpp"
#include "nrto/uncertainty.hpp"

namespace nrto {

enum class Mode { kNto, kNrto, kNrtoLe };

std::string to_string(Mode mode);
/// "nto", "nrto" or "nrto-le"; throws std::invalid_argument otherwise.
Mode mode_from_string(const std::string& s);

/// Trust-region / penalty schedule of the outer loop. r_trust and rho hold
/// the starting values and are updated in a working copy during a solve.
struct OuterParams {
  double r_trust = 5.0;
  double rho = 1.0;
  double alpha = 0.7;
  double beta = 5.0;
  double eta1 = 10.0;
  double eta2 = 0.1;
  double r_min = 1e-3;
  double rho_max = 1e6;
  double eps_p = 1e-5;
  double eps_u = 1e-4;
  int max_outer = 100;
  int L_max_in = 50;
  bool literal_updates = false;
  Mode mode = Mode::kNrto;

  /// Throws std::invalid_argument unless alpha in [0.5, 1), beta > 1 and
  /// the remaining scalars are positive.
  void validate() const;
};

/// Shrinks the radius when ||du|| >= eta1 ||p - p_tilde||: max(alpha r, r_min),
/// or min(alpha r, r_min) with literal_updates.
OuterParams update_trust_region(OuterParams params, double delta_u_norm, double residual);

/// Grows the penalty when ||du|| <= eta2 ||p - p_tilde||: min(beta rho, rho_max),
/// or max(beta rho, rho_max) with literal_updates.
OuterParams update_penalty(OuterParams params, double delta_u_norm, double residual);

struct IterationRecord {
  int iteration = 0;
  double delta_u_norm = 0.0;
  double residual = 0.0;
  double r_trust = 0.0;
  double rho = 0.0;
  int inner_iterations = 0;
  std::string path;  // "direct", "admm", or "direct-infeasible+admm"
  double objective = 0.0;
};

struct SolveLog {
  std::vector<IterationRecord> records;
  std::string status;  // "converged" or "max-outer"
  int selected_iteration = 0;
};

/// An inner solve failed; carries the log up to the failure.
class OptimizeError : public std::runtime_error {
 public:
  OptimizeError(const std::string& what, SolveLog log) : std::runtime_error(what), log_(std::move(log)) {}
  const SolveLog& log() const { return log_; }

 private:
  SolveLog log_;
};

/// Everything one trajectory optimization needs.
struct Problem {
  Problem(ModelPtr model, Vec x0, ConstraintSet constraints, UncertaintySet uncertainty)
      : model(std::move(model)),
        x0(std::move(x0)),
        constraints(std::move(constraints)),
        uncertainty(std::move(uncertainty)) {}

  ModelPtr model;
  Vec x0;
  ConstraintSet constraints;
  UncertaintySet uncertainty;  // the level used for solving is 0 in nto mode
  MatSeq R_u;                  // T blocks
  MatSeq R_K;                  // T blocks
  VecSeq u_init;               // empty: zeros
  std::vector<ErrorEllipsoid> error_sets;  // used in nrto-le mode
  OuterParams params;
  ConicSettings conic;
  std::ostream* log = nullptr;
  std::function<void(const std::string&, const ConicProgram&)> dump;

  int horizon() const { return constraints.horizon(); }
};

struct OptimizeResult {
  Policy policy;
  SolveLog log;
  bool converged = false;
};

/// Trust-region successive convexification with the ADMM / direct inner solve.
OptimizeResult optimize(const Problem& problem);

/// Straight-line steering guess for planar models: constant speed towards
/// `goal` (x, y), zero turn rate. Other controls are zero.
VecSeq steer_initialization(const DynamicsModel& model, const Vec& x0, const Eigen::Vector2d& goal, int horizon);

}  // namespace nrto

#endif  // NRTO_SCO_HPP
