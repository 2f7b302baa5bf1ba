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

#include "nrto/constraints.hpp"

#include <stdexcept>

namespace nrto {

std::string to_string(RowKind kind) {
  switch (kind) {
    case RowKind::kCircularObstacle:
      return "circular-obstacle";
    case RowKind::kTerminalBoxFace:
      return "terminal-box-face";
    case RowKind::kLinearState:
      return "linear-state";
  }
  return "linear-state";
}

double ConstraintRow::value(const Vec& x_t) const {
  if (kind == RowKind::kCircularObstacle) {
    const double dx = x_t(px) - center(0);
    const double dy = x_t(py) - center(1);
    return radius * radius - (dx * dx + dy * dy);
  }
  return coeff.dot(x_t) - bound;
}

Vec ConstraintRow::gradient(const Vec& x_t) const {
  if (kind == RowKind::kCircularObstacle) {
    Vec g = Vec::Zero(x_t.size());
    g(px) = -2.0 * (x_t(px) - center(0));
    g(py) = -2.0 * (x_t(py) - center(1));
    return g;
  }
  return coeff;
}

ConstraintSet::ConstraintSet(int horizon, int n_x) : horizon_(horizon), n_x_(n_x) {
  if (horizon < 1 || n_x < 1) throw std::invalid_argument("ConstraintSet: horizon and n_x must be positive");
}

void ConstraintSet::add_obstacle(const Eigen::Vector2d& center, double radius, int px, int py) {
  if (!(radius > 0.0)) throw std::invalid_argument("obstacle radius must be positive");
  if (px < 0 || py < 0 || px >= n_x_ || py >= n_x_ || px == py) {
    throw std::invalid_argument("obstacle position indices out of range");
  }
  const int id = static_cast<int>(obstacles_.size());
  obstacles_.push_back({center, radius});
  for (int t = 0; t <= horizon_; ++t) {
    ConstraintRow r;
    r.kind = RowKind::kCircularObstacle;
    r.timestep = t;
    r.group = id;
    r.label = "obs" + std::to_string(id);
    r.center = center;
    r.radius = radius;
    r.px = px;
    r.py = py;
    rows_.push_back(std::move(r));
  }
}

void ConstraintSet::add_terminal_box(const std::vector<int>& indices, const Vec& lower, const Vec& upper) {
  const auto n = static_cast<Eigen::Index>(indices.size());
  if (lower.size() != n || upper.size() != n) throw std::invalid_argument("terminal box: bounds/indices size mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    const int idx = indices[i];
    if (idx < 0 || idx >= n_x_) throw std::invalid_argument("terminal box: state index out of range");
    if (!(lower(i) <= upper(i))) throw std::invalid_argument("terminal box: lower bound exceeds upper bound");
    for (int side = 0; side < 2; ++side) {
      ConstraintRow r;
      r.kind = RowKind::kTerminalBoxFace;
      r.timestep = horizon_;
      r.group = next_linear_group_++;
      r.coeff = Vec::Zero(n_x_);
      r.coeff(idx) = side == 0 ? 1.0 : -1.0;
      r.bound = side == 0 ? upper(i) : -lower(i);
      r.label = "box_x" + std::to_string(idx) + (side == 0 ? "_hi" : "_lo");
      rows_.push_back(std::move(r));
    }
  }
}

void ConstraintSet::add_linear(int timestep, const Vec& coeff, double bound, std::string label) {
  if (timestep < 0 || timestep > horizon_) throw std::invalid_argument("linear row: timestep out of range");
  if (coeff.size() != n_x_) throw std::invalid_argument("linear row: coefficient has wrong dimension");
  ConstraintRow r;
  r.kind = RowKind::kLinearState;
  r.timestep = timestep;
  r.group = next_linear_group_++;
  r.coeff = coeff;
  r.bound = bound;
  r.label = label.empty() ? "lin" + std::to_string(r.group) : std::move(label);
  rows_.push_back(std::move(r));
}

std::vector<int> ConstraintSet::linear_rows() const {
  std::vector<int> out;
  for (int j = 0; j < size(); ++j)
    if (rows_[j].kind != RowKind::kCircularObstacle) out.push_back(j);
  return out;
}

Vec ConstraintSet::evaluate(const Vec& x) const {
  if (x.size() != (horizon_ + 1) * n_x_) throw std::invalid_argument("ConstraintSet::evaluate: wrong state dimension");
  Vec g(size());
  for (int j = 0; j < size(); ++j) {
    const auto& r = rows_[j];
    g(j) = r.value(x.segment(r.timestep * n_x_, n_x_));
  }
  return g;
}

Mat ConstraintSet::gradient(const Vec& x) const {
  if (x.size() != (horizon_ + 1) * n_x_) throw std::invalid_argument("ConstraintSet::gradient: wrong state dimension");
  Mat G = Mat::Zero(size(), x.size());
  for (int j = 0; j < size(); ++j) {
    const auto& r = rows_[j];
    G.row(j).segment(r.timestep * n_x_, n_x_) = r.gradient(x.segment(r.timestep * n_x_, n_x_)).transpose();
  }
  return G;
}

std::vector<Vec> LinearizedConstraintData::grad_slices(int j) const {
  const int count = static_cast<int>(grad.cols()) / n_x;
  std::vector<Vec> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) out.push_back(grad.row(j).segment(k * n_x, n_x).transpose());
  return out;
}

LinearizedConstraintData linearize(const ConstraintSet& cs, const NominalTrajectory& nominal,
                                   const StackedBlocks& blocks) {
  if (nominal.horizon() != cs.horizon() || blocks.horizon != cs.horizon()) {
    throw std::invalid_argument("linearize: horizon mismatch between constraints, nominal and blocks");
  }
  const Vec x = nominal.stacked_states();
  LinearizedConstraintData d;
  d.n_x = cs.n_x();
  d.g_hat = cs.evaluate(x);
  d.grad = cs.gradient(x);
  d.J_u = d.grad * blocks.Fu;
  d.J_zeta = d.grad * blocks.Fzeta;
  d.timesteps.reserve(cs.size());
  for (const auto& r : cs.rows()) d.timesteps.push_back(r.timestep);
  return d;
}

double tractable_row(int j, const LinearizedConstraintData& data, const UncertaintySet& set, const PolicyMatrix& K) {
  // (Fu K + Fzeta)^T grad_j = K^T (grad_j Fu)^T + (grad_j Fzeta)^T
  const Vec c = K.apply_transpose(data.J_u.row(j).transpose()) + data.J_zeta.row(j).transpose();
  return set.support(c);
}

double robust_margin_le(int j, const LinearizedConstraintData& data, const UncertaintySet& set, const PolicyMatrix& K,
                        const std::vector<ErrorEllipsoid>* error_sets) {
  double margin = tractable_row(j, data, set, K);
  if (error_sets != nullptr) margin += error_support(*error_sets, data.grad_slices(j));
  return margin;
}

}  // namespace nrto
