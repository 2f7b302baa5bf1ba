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
#ifndef NRTO_CONIC_HPP
#define NRTO_CONIC_HPP

#include <Eigen/Sparse>

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>

#include "nrto/types.hpp"

namespace nrto {

using SpMat = Eigen::SparseMatrix<double>;

struct VariableGroup {
  std::string name;
  int offset = 0;
  int size = 0;
};

/// Named index ranges into the primal vector of a conic program.
class VariableLayout {
 public:
  /// Appends a group and returns its offset; names must be unique.
  int add(const std::string& name, int size);
  bool has(const std::string& name) const;
  const VariableGroup& find(const std::string& name) const;
  int size() const { return size_; }
  const std::vector<VariableGroup>& groups() const { return groups_; }
  Vec slice(const Vec& x, const std::string& name) const;

 private:
  std::vector<VariableGroup> groups_;
  int size_ = 0;
};

/**
 * @brief Quadratic program over linear equalities and a product of cones.
 *
 *   minimize    0.5 x^T P x + q^T x
 *   subject to  A x = b
 *               G x + s = h,   s in R_+^{n_orthant} x Q^{soc_dims[0]} x ...
 *
 * Q^d = { (t, v) in R x R^{d-1} : t >= ||v|| }. Orthant rows come first in G.
 */
struct ConicProgram {
  SpMat P;  // full symmetric storage
  Vec q;
  SpMat A;
  Vec b;
  SpMat G;
  Vec h;
  int n_orthant = 0;
  std::vector<int> soc_dims;
  VariableLayout layout;
  double objective_offset = 0.0;

  int num_variables() const { return static_cast<int>(q.size()); }
  int num_equalities() const { return static_cast<int>(b.size()); }
  int num_cone_rows() const { return static_cast<int>(h.size()); }
  /// Row offset of SOC block k inside G.
  int soc_offset(int k) const;
  /// Barrier degree: orthant rows plus one per SOC block.
  int degree() const { return n_orthant + static_cast<int>(soc_dims.size()); }

  /// Throws std::invalid_argument on inconsistent dimensions, SOC blocks of
  /// arity below 2, or a P that is not symmetric PSD.
  void validate() const;
};

/// Linear expression sum_k coeff_k * x[index_k].
using LinearExpr = std::vector<std::pair<int, double>>;

/// Incremental assembly of a ConicProgram; rows may be added in any order.
class ConicBuilder {
 public:
  int add_variables(const std::string& name, int count);
  int num_variables() const { return layout_.size(); }
  const VariableLayout& layout() const { return layout_; }

  /// objective += value * x_i * x_j
  void add_quadratic(int i, int j, double value);
  /// objective += value * x_i
  void add_linear_cost(int i, double value);
  void add_constant_cost(double value) { offset_ += value; }

  /// a^T x = rhs; returns the equality index.
  int add_equality(const LinearExpr& a, double rhs);
  /// a^T x <= rhs; returns the orthant row index in the built program.
  int add_inequality(const LinearExpr& a, double rhs);
  /// || (v_i^T x + v0_i)_i || <= t^T x + t0; returns the SOC block index.
  int add_second_order_cone(const LinearExpr& t, double t0, const std::vector<LinearExpr>& v, const Vec& v0);

  ConicProgram build() const;

 private:
  void check_expr(const LinearExpr& e) const;

  VariableLayout layout_;
  std::vector<Eigen::Triplet<double>> p_;
  std::vector<std::pair<int, double>> q_;
  double offset_ = 0.0;
  std::vector<LinearExpr> eq_rows_;
  std::vector<double> eq_rhs_;
  std::vector<LinearExpr> ineq_rows_;
  std::vector<double> ineq_rhs_;
  struct SocBlock {
    LinearExpr t;
    double t0;
    std::vector<LinearExpr> v;
    Vec v0;
  };
  std::vector<SocBlock> socs_;
};

enum class ConicStatus { kOptimal, kPrimalInfeasible, kDualInfeasible, kIterationLimit };

std::string to_string(ConicStatus status);

struct ConicSettings {
  double tol_target = 1e-9;  // stop as soon as every residual is below this
  double tol_accept = 1e-7;  // residuals an optimal answer must meet
  double tol_infeasible = 1e-8;
  int max_iterations = 100;
  double static_regularization = 1e-8;
  int refinement_steps = 4;
  int equilibration_passes = 15;
  bool epigraph_fallback = true;
  bool force_epigraph = false;
};

/// Primal/dual point from an earlier solve of a program with the same shape.
struct WarmStart {
  Vec x;
  Vec y;
  Vec z;
  Vec s;
};

struct ConicSolution {
  ConicStatus status = ConicStatus::kIterationLimit;
  Vec x;  // primal
  Vec y;  // equality duals
  Vec z;  // cone duals (orthant rows, then SOC blocks)
  Vec s;  // cone slacks
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double objective = 0.0;  // includes objective_offset
  bool used_epigraph = false;  // residuals then refer to epigraph_form(prog)
  bool warm_start_accepted = false;

  bool optimal() const { return status == ConicStatus::kOptimal; }
  WarmStart as_warm_start() const { return {x, y, z, s}; }
};

struct KktResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double primal_cost = 0.0;
  double dual_cost = 0.0;
};

/**
 * Relative KKT residuals of a candidate point:
 *   primal = max(|Ax-b|, |Gx+s-h|)_inf / (1 + max(|b|,|h|,|x|,|s|)_inf)
 *   dual   = |Px+q+A^T y+G^T z|_inf / (1 + max(|q|,|Px|,|A^T y|,|G^T z|)_inf)
 *   gap    = |pcost - dcost| / (1 + min(|pcost|, |dcost|))
 */
KktResiduals kkt_residuals(const ConicProgram& prog, const Vec& x, const Vec& y, const Vec& z, const Vec& s);

/// True when (s, z) lie in the cone of prog with margin -tol.
bool in_cone(const ConicProgram& prog, const Vec& v, double tol);

/// Primal-dual interior-point solve. Never throws on numerical trouble; a
/// breakdown is reported as kIterationLimit.
ConicSolution solve(const ConicProgram& prog, const ConicSettings& settings = {},
                    const WarmStart* warm_start = nullptr);

/// Same program with 0.5 x^T P x moved into an SOC epigraph variable appended
/// after the original variables.
ConicProgram epigraph_form(const ConicProgram& prog);

/// Smallest eigenvalue test on P (dense per connected component).
bool is_positive_semidefinite(const SpMat& P, double tol = -1e-10);

/// Plain-text dump: dimensions, nonzero counts, cone layout and triplets.
void dump_program(const ConicProgram& prog, std::ostream& os);

}  // namespace nrto

#endif  // NRTO_CONIC_HPP
