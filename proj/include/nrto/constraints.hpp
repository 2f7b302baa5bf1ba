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
#ifndef NRTO_CONSTRAINTS_HPP
#define NRTO_CONSTRAINTS_HPP

#include <optional>
#include <string>

#include "nrto/lintraj.hpp"
#include "nrto/models.hpp"
#include "nrto/uncertainty.hpp"

namespace nrto {

enum class RowKind { kCircularObstacle, kTerminalBoxFace, kLinearState };

std::string to_string(RowKind kind);

/**
 * One scalar state constraint g_j(x_t) <= 0 acting on a single timestep.
 *
 *   obstacle:   g = r^2 - ||(x_t[px], x_t[py]) - c||^2   (concave)
 *   box face /
 *   linear:     g = a^T x_t - b
 */
struct ConstraintRow {
  RowKind kind = RowKind::kLinearState;
  int timestep = 0;
  int group = 0;  // obstacle index, or the linear row's own id
  std::string label;

  // obstacle
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
  int px = 0;
  int py = 1;

  // linear / box face
  Vec coeff;
  double bound = 0.0;

  double value(const Vec& x_t) const;
  Vec gradient(const Vec& x_t) const;
};

/// Per-step box on the controls, applied directly to u_hat + du.
struct ControlBounds {
  Vec lower;
  Vec upper;
};

struct Obstacle {
  Eigen::Vector2d center;
  double radius;
};

class ConstraintSet {
 public:
  ConstraintSet(int horizon, int n_x);

  int horizon() const { return horizon_; }
  int n_x() const { return n_x_; }
  int size() const { return static_cast<int>(rows_.size()); }
  const std::vector<ConstraintRow>& rows() const { return rows_; }
  const ConstraintRow& row(int j) const { return rows_.at(j); }

  /// One row per timestep 0..T.
  void add_obstacle(const Eigen::Vector2d& center, double radius, int px = 0, int py = 1);

  /// Two faces per listed state index at the terminal step.
  void add_terminal_box(const std::vector<int>& indices, const Vec& lower, const Vec& upper);

  void add_linear(int timestep, const Vec& coeff, double bound, std::string label = {});

  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  /// Rows that are not obstacle rows, in insertion order.
  std::vector<int> linear_rows() const;

  const std::optional<ControlBounds>& control_bounds() const { return control_bounds_; }
  void set_control_bounds(ControlBounds bounds) { control_bounds_ = std::move(bounds); }

  /// Exact nonlinear values for a stacked state of (T+1) n_x entries.
  Vec evaluate(const Vec& x) const;

  /// Dense n_g x (T+1) n_x Jacobian.
  Mat gradient(const Vec& x) const;

 private:
  int horizon_;
  int n_x_;
  std::vector<ConstraintRow> rows_;
  std::vector<Obstacle> obstacles_;
  int next_linear_group_ = 0;
  std::optional<ControlBounds> control_bounds_;
};

/// Constraint data linearized at one nominal trajectory.
struct LinearizedConstraintData {
  Vec g_hat;                   // g(x_hat)
  Mat grad;                    // dg/dx at x_hat, n_g x (T+1) n_x
  Mat J_u;                     // grad * Fu
  Mat J_zeta;                  // grad * Fzeta
  std::vector<int> timesteps;  // row -> timestep it touches
  int n_x = 0;

  int rows() const { return static_cast<int>(g_hat.size()); }

  /// Per-timestep slices of row j's gradient (T+1 entries).
  std::vector<Vec> grad_slices(int j) const;
};

LinearizedConstraintData linearize(const ConstraintSet& cs, const NominalTrajectory& nominal,
                                   const StackedBlocks& blocks);

/// Worst case of grad_j^T (Fu K + Fzeta) zeta over the uncertainty set.
double tractable_row(int j, const LinearizedConstraintData& data, const UncertaintySet& set, const PolicyMatrix& K);

/// tractable_row plus the linearization-error support when error sets are given.
double robust_margin_le(int j, const LinearizedConstraintData& data, const UncertaintySet& set, const PolicyMatrix& K,
                        const std::vector<ErrorEllipsoid>* error_sets);

}  // namespace nrto

#endif  // NRTO_CONSTRAINTS_HPP
