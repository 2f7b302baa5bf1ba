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

#include "nrto/conic.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace nrto {

int VariableLayout::add(const std::string& name, int size) {
  if (size < 0) throw std::invalid_argument("variable group '" + name + "' has negative size");
  if (has(name)) throw std::invalid_argument("duplicate variable group '" + name + "'");
  groups_.push_back({name, size_, size});
  size_ += size;
  return groups_.back().offset;
}

bool VariableLayout::has(const std::string& name) const {
  return std::any_of(groups_.begin(), groups_.end(), [&](const VariableGroup& g) { return g.name == name; });
}

const VariableGroup& VariableLayout::find(const std::string& name) const {
  for (const auto& g : groups_)
    if (g.name == name) return g;
  throw std::out_of_range("unknown variable group '" + name + "'");
}

Vec VariableLayout::slice(const Vec& x, const std::string& name) const {
  const auto& g = find(name);
  if (x.size() < g.offset + g.size) throw std::invalid_argument("VariableLayout::slice: vector too short");
  return x.segment(g.offset, g.size);
}

int ConicProgram::soc_offset(int k) const {
  if (k < 0 || k >= static_cast<int>(soc_dims.size())) throw std::out_of_range("SOC block index out of range");
  return n_orthant + std::accumulate(soc_dims.begin(), soc_dims.begin() + k, 0);
}

void ConicProgram::validate() const {
  const auto n = q.size();
  if (P.rows() != n || P.cols() != n) throw std::invalid_argument("ConicProgram: P must be n x n");
  if (A.cols() != n || A.rows() != b.size()) throw std::invalid_argument("ConicProgram: A/b dimensions inconsistent");
  if (G.cols() != n || G.rows() != h.size()) throw std::invalid_argument("ConicProgram: G/h dimensions inconsistent");
  if (n_orthant < 0) throw std::invalid_argument("ConicProgram: negative orthant size");
  int rows = n_orthant;
  for (int d : soc_dims) {
    if (d < 2) throw std::invalid_argument("ConicProgram: second-order cone blocks need arity >= 2");
    rows += d;
  }
  if (rows != h.size()) throw std::invalid_argument("ConicProgram: cone layout does not cover the rows of G");
  if (layout.size() != 0 && layout.size() != n) {
    throw std::invalid_argument("ConicProgram: variable layout does not match the number of variables");
  }
  const SpMat Pt = P.transpose();
  const double asym = (P - Pt).norm();
  if (asym > 1e-12 * std::max(1.0, P.norm())) throw std::invalid_argument("ConicProgram: P is not symmetric");
  if (!is_positive_semidefinite(P)) throw std::invalid_argument("ConicProgram: P is not positive semidefinite");
}

int ConicBuilder::add_variables(const std::string& name, int count) { return layout_.add(name, count); }

void ConicBuilder::check_expr(const LinearExpr& e) const {
  for (const auto& [i, v] : e) {
    if (i < 0 || i >= layout_.size()) throw std::invalid_argument("ConicBuilder: variable index out of range");
    if (!std::isfinite(v)) throw std::invalid_argument("ConicBuilder: non-finite coefficient");
  }
}

void ConicBuilder::add_quadratic(int i, int j, double value) {
  check_expr({{i, value}, {j, value}});
  if (i == j) {
    p_.emplace_back(i, i, 2.0 * value);
  } else {
    p_.emplace_back(i, j, value);
    p_.emplace_back(j, i, value);
  }
}

void ConicBuilder::add_linear_cost(int i, double value) {
  check_expr({{i, value}});
  q_.emplace_back(i, value);
}

int ConicBuilder::add_equality(const LinearExpr& a, double rhs) {
  check_expr(a);
  eq_rows_.push_back(a);
  eq_rhs_.push_back(rhs);
  return static_cast<int>(eq_rows_.size()) - 1;
}

int ConicBuilder::add_inequality(const LinearExpr& a, double rhs) {
  check_expr(a);
  ineq_rows_.push_back(a);
  ineq_rhs_.push_back(rhs);
  return static_cast<int>(ineq_rows_.size()) - 1;
}

int ConicBuilder::add_second_order_cone(const LinearExpr& t, double t0, const std::vector<LinearExpr>& v,
                                        const Vec& v0) {
  if (v.empty()) throw std::invalid_argument("ConicBuilder: second-order cone needs at least one norm entry");
  if (v0.size() != static_cast<Eigen::Index>(v.size())) {
    throw std::invalid_argument("ConicBuilder: cone offset has the wrong length");
  }
  check_expr(t);
  for (const auto& e : v) check_expr(e);
  socs_.push_back({t, t0, v, v0});
  return static_cast<int>(socs_.size()) - 1;
}

ConicProgram ConicBuilder::build() const {
  const int n = layout_.size();
  ConicProgram prog;
  prog.layout = layout_;
  prog.objective_offset = offset_;
  prog.P.resize(n, n);
  prog.P.setFromTriplets(p_.begin(), p_.end());
  prog.q = Vec::Zero(n);
  for (const auto& [i, v] : q_) prog.q(i) += v;

  std::vector<Eigen::Triplet<double>> trip;
  for (int r = 0; r < static_cast<int>(eq_rows_.size()); ++r)
    for (const auto& [i, v] : eq_rows_[r]) trip.emplace_back(r, i, v);
  prog.A.resize(static_cast<Eigen::Index>(eq_rows_.size()), n);
  prog.A.setFromTriplets(trip.begin(), trip.end());
  prog.b = Eigen::Map<const Vec>(eq_rhs_.data(), static_cast<Eigen::Index>(eq_rhs_.size()));

  trip.clear();
  std::vector<double> h;
  int row = 0;
  for (int r = 0; r < static_cast<int>(ineq_rows_.size()); ++r, ++row) {
    for (const auto& [i, v] : ineq_rows_[r]) trip.emplace_back(row, i, v);
    h.push_back(ineq_rhs_[r]);
  }
  prog.n_orthant = row;
  // s = h - G x, so the cone entries t^T x + t0 and v^T x + v0 enter with G = -coeff.
  for (const auto& c : socs_) {
    for (const auto& [i, v] : c.t) trip.emplace_back(row, i, -v);
    h.push_back(c.t0);
    ++row;
    for (std::size_t k = 0; k < c.v.size(); ++k, ++row) {
      for (const auto& [i, v] : c.v[k]) trip.emplace_back(row, i, -v);
      h.push_back(c.v0(static_cast<Eigen::Index>(k)));
    }
    prog.soc_dims.push_back(static_cast<int>(c.v.size()) + 1);
  }
  prog.G.resize(row, n);
  prog.G.setFromTriplets(trip.begin(), trip.end());
  prog.h = Eigen::Map<const Vec>(h.data(), static_cast<Eigen::Index>(h.size()));
  prog.P.makeCompressed();
  prog.A.makeCompressed();
  prog.G.makeCompressed();
  return prog;
}

std::string to_string(ConicStatus status) {
  switch (status) {
    case ConicStatus::kOptimal:
      return "optimal";
    case ConicStatus::kPrimalInfeasible:
      return "primal-infeasible";
    case ConicStatus::kDualInfeasible:
      return "dual-infeasible";
    case ConicStatus::kIterationLimit:
      return "iteration-limit";
  }
  return "iteration-limit";
}

namespace {

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

}  // namespace

KktResiduals kkt_residuals(const ConicProgram& prog, const Vec& x, const Vec& y, const Vec& z, const Vec& s) {
  KktResiduals r;
  const Vec Px = prog.P * x;
  const Vec Aty = prog.A.transpose() * y;
  const Vec Gtz = prog.G.transpose() * z;
  const Vec rp_eq = prog.A * x - prog.b;
  const Vec rp_in = prog.G * x + s - prog.h;
  const double p_scale =
      1.0 + std::max({inf_norm(prog.b), inf_norm(prog.h), inf_norm(x), inf_norm(s)});
  r.primal = std::max(inf_norm(rp_eq), inf_norm(rp_in)) / p_scale;
  const Vec rd = Px + prog.q + Aty + Gtz;
  const double d_scale = 1.0 + std::max({inf_norm(prog.q), inf_norm(Px), inf_norm(Aty), inf_norm(Gtz)});
  r.dual = inf_norm(rd) / d_scale;
  const double xPx = x.dot(Px);
  r.primal_cost = 0.5 * xPx + prog.q.dot(x);
  r.dual_cost = -0.5 * xPx - prog.b.dot(y) - prog.h.dot(z);
  r.gap = std::abs(r.primal_cost - r.dual_cost) / (1.0 + std::min(std::abs(r.primal_cost), std::abs(r.dual_cost)));
  return r;
}

bool in_cone(const ConicProgram& prog, const Vec& v, double tol) {
  if (v.size() != prog.num_cone_rows()) return false;
  for (int i = 0; i < prog.n_orthant; ++i)
    if (v(i) < -tol) return false;
  int off = prog.n_orthant;
  for (int d : prog.soc_dims) {
    if (v(off) - v.segment(off + 1, d - 1).norm() < -tol) return false;
    off += d;
  }
  return true;
}

ConicProgram epigraph_form(const ConicProgram& prog) {
  const int n = prog.num_variables();
  const Mat Pd = Mat(prog.P);
  Eigen::SelfAdjointEigenSolver<Mat> eig(Pd);
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<Eigen::Triplet<double>> frows;
  int nf = 0;
  for (int k = 0; k < n; ++k) {
    const double lam = eig.eigenvalues()(k);
    if (lam <= 1e-14 * scale) continue;
    const double sl = std::sqrt(lam);
    for (int j = 0; j < n; ++j) {
      const double v = sl * eig.eigenvectors()(j, k);
      if (v != 0.0) frows.emplace_back(nf, j, v);
    }
    ++nf;
  }

  ConicProgram out;
  out.layout = prog.layout;
  out.layout.add("__epigraph", 1);
  if (prog.layout.size() == 0) out.layout = VariableLayout{};
  const int t = n;
  out.P.resize(n + 1, n + 1);
  out.q = Vec::Zero(n + 1);
  out.q.head(n) = prog.q;
  out.q(t) = 1.0;
  out.objective_offset = prog.objective_offset;
  out.A = SpMat(prog.A.rows(), n + 1);
  {
    std::vector<Eigen::Triplet<double>> trip;
    for (int c = 0; c < prog.A.outerSize(); ++c)
      for (SpMat::InnerIterator it(prog.A, c); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    out.A.setFromTriplets(trip.begin(), trip.end());
  }
  out.b = prog.b;

  // Existing rows, then || (F x, t - 1/2) || <= t + 1/2.
  const int m = prog.num_cone_rows();
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < prog.G.outerSize(); ++c)
    for (SpMat::InnerIterator it(prog.G, c); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  const int base = m;
  trip.emplace_back(base, t, -1.0);
  for (const auto& f : frows) trip.emplace_back(base + 1 + f.row(), f.col(), -f.value());
  trip.emplace_back(base + 1 + nf, t, -1.0);
  out.G.resize(m + nf + 2, n + 1);
  out.G.setFromTriplets(trip.begin(), trip.end());
  out.h = Vec::Zero(m + nf + 2);
  out.h.head(m) = prog.h;
  out.h(base) = 0.5;
  out.h(base + 1 + nf) = -0.5;
  out.n_orthant = prog.n_orthant;
  out.soc_dims = prog.soc_dims;
  out.soc_dims.push_back(nf + 2);
  out.P.makeCompressed();
  out.A.makeCompressed();
  out.G.makeCompressed();
  return out;
}

bool is_positive_semidefinite(const SpMat& P, double tol) {
  const int n = static_cast<int>(P.rows());
  if (n == 0) return true;
  // Connected components of the sparsity graph; each is checked densely.
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = ncomp;
    stack.push_back(s);
    while (!stack.empty()) {
      const int c = stack.back();
      stack.pop_back();
      for (SpMat::InnerIterator it(P, c); it; ++it) {
        const int r = static_cast<int>(it.row());
        if (comp[r] < 0) {
          comp[r] = ncomp;
          stack.push_back(r);
        }
      }
    }
    ++ncomp;
  }
  std::vector<std::vector<int>> members(ncomp);
  for (int i = 0; i < n; ++i) members[comp[i]].push_back(i);
  std::vector<int> local(n, 0);
  for (const auto& mem : members) {
    const int k = static_cast<int>(mem.size());
    for (int i = 0; i < k; ++i) local[mem[i]] = i;
    Mat block = Mat::Zero(k, k);
    for (int i : mem)
      for (SpMat::InnerIterator it(P, i); it; ++it) block(local[it.row()], local[i]) = it.value();
    if (k == 1) {
      if (block(0, 0) < tol) return false;
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(block, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < tol) return false;
  }
  return true;
}

void dump_program(const ConicProgram& prog, std::ostream& os) {
  os << "# conic program\n";
  os << "variables " << prog.num_variables() << "\n";
  os << "equalities " << prog.num_equalities() << "\n";
  os << "cone_rows " << prog.num_cone_rows() << "\n";
  os << "nnz P " << prog.P.nonZeros() << " A " << prog.A.nonZeros() << " G " << prog.G.nonZeros() << "\n";
  os << "orthant " << prog.n_orthant << "\n";
  os << "soc_blocks " << prog.soc_dims.size() << "\n";
  for (std::size_t k = 0; k < prog.soc_dims.size(); ++k) os << "soc " << k << " dim " << prog.soc_dims[k] << "\n";
  for (const auto& g : prog.layout.groups()) os << "group " << g.name << " offset " << g.offset << " size " << g.size << "\n";
  os.precision(17);
  auto triplets = [&](const char* name, const SpMat& M) {
    for (int c = 0; c < M.outerSize(); ++c)
      for (SpMat::InnerIterator it(M, c); it; ++it)
        os << name << " " << it.row() << " " << it.col() << " " << it.value() << "\n";
  };
  triplets("P", prog.P);
  triplets("A", prog.A);
  triplets("G", prog.G);
  for (int i = 0; i < prog.q.size(); ++i)
    if (prog.q(i) != 0.0) os << "q " << i << " " << prog.q(i) << "\n";
  for (int i = 0; i < prog.b.size(); ++i) os << "b " << i << " " << prog.b(i) << "\n";
  for (int i = 0; i < prog.h.size(); ++i) os << "h " << i << " " << prog.h(i) << "\n";
}

}  // namespace nrto
