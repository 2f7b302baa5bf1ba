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

#include "nrto/inner_admm.hpp"

#include <cmath>
#include <ostream>

namespace nrto {

InnerSolverError::InnerSolverError(const std::string& block, ConicStatus status, int iteration)
    : std::runtime_error(block + " subproblem ended with status " + to_string(status) + " at inner iteration " +
                         std::to_string(iteration)),
      block_(block),
      status_(status),
      iteration_(iteration) {}

AdmmState AdmmState::zeros(int n_g, double rho) {
  AdmmState s;
  s.lambda = Vec::Zero(n_g);
  s.p = Vec::Zero(n_g);
  s.p_tilde = Vec::Zero(n_g);
  s.rho = rho;
  s.validate();
  return s;
}

void AdmmState::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("AdmmState: rho must be positive");
  if (p.size() != lambda.size() || p_tilde.size() != lambda.size()) {
    throw std::invalid_argument("AdmmState: lambda, p and p_tilde must have equal length");
  }
}

namespace {

struct Dims {
  int T, n_x, n_u, n_z, n_g;
};

Dims dims_of(const InnerContext& ctx) {
  if (ctx.blocks == nullptr || ctx.lin == nullptr || ctx.set == nullptr) {
    throw std::invalid_argument("InnerContext: blocks, linearization and uncertainty set are required");
  }
  const auto& b = *ctx.blocks;
  Dims d{b.horizon, b.n_x, b.n_u, static_cast<int>(ctx.basis.cols()), ctx.lin->rows()};
  if (ctx.basis.rows() != (d.T + 1) * d.n_x || ctx.trust_factor.cols() != d.T * d.n_u || ctx.g_err.size() != d.n_g) {
    throw std::invalid_argument("InnerContext: call prepare() before building subproblems");
  }
  if (ctx.u_hat.size() != d.T * d.n_u) throw std::invalid_argument("InnerContext: u_hat has the wrong length");
  if (static_cast<int>(ctx.R_u.size()) != d.T || static_cast<int>(ctx.R_K.size()) != d.T) {
    throw std::invalid_argument("InnerContext: one R_u and one R_K block per step are required");
  }
  if (!(ctx.r_trust > 0.0)) throw std::invalid_argument("InnerContext: trust radius must be positive");
  return d;
}

struct PolicyVars {
  int k_off = 0;
  int r_off = 0;
  Dims d{};
  int k_index(int k, int b, int c) const { return k_off + k * d.n_u * d.n_x + c * d.n_u + b; }
  // R_t for t >= 1 is a variable; R_0 is the constant response of d0_bar.
  int r_index(int t, int a, int z) const { return r_off + (t - 1) * d.n_x * d.n_z + z * d.n_x + a; }
};

// K blocks, response variables R_1..R_T, their recursion, and Q_K.
//   R_0 = basis_0,  R_{k+1} = A_k R_k + B_k K_k basis_k + basis_{k+1}
PolicyVars add_policy_variables(ConicBuilder& b, const InnerContext& ctx, const Dims& d) {
  PolicyVars pv;
  pv.d = d;
  pv.k_off = b.add_variables("K", d.T * d.n_u * d.n_x);
  pv.r_off = b.add_variables("R", d.T * d.n_x * d.n_z);
  const auto& blk = *ctx.blocks;

  for (int k = 0; k < d.T; ++k) {
    const Mat M = ctx.R_K[k].transpose() * ctx.R_K[k];
    for (int c = 0; c < d.n_x; ++c)
      for (int a = 0; a < d.n_u; ++a)
        for (int bb = a; bb < d.n_u; ++bb) {
          const double v = a == bb ? M(a, a) : 2.0 * M(a, bb);
          if (v != 0.0) b.add_quadratic(pv.k_index(k, a, c), pv.k_index(k, bb, c), v);
        }
  }

  for (int k = 0; k < d.T; ++k) {
    const Mat& A = blk.A[k];
    const Mat& B = blk.B[k];
    const auto Gk = ctx.basis.middleRows(k * d.n_x, d.n_x);
    const auto Gk1 = ctx.basis.middleRows((k + 1) * d.n_x, d.n_x);
    Mat rhs = Gk1;
    if (k == 0) rhs += A * Gk;
    for (int z = 0; z < d.n_z; ++z) {
      for (int a = 0; a < d.n_x; ++a) {
        LinearExpr e;
        e.emplace_back(pv.r_index(k + 1, a, z), 1.0);
        if (k > 0)
          for (int bb = 0; bb < d.n_x; ++bb)
            if (A(a, bb) != 0.0) e.emplace_back(pv.r_index(k, bb, z), -A(a, bb));
        for (int bb = 0; bb < d.n_u; ++bb) {
          if (B(a, bb) == 0.0) continue;
          for (int c = 0; c < d.n_x; ++c) {
            const double v = B(a, bb) * Gk(c, z);
            if (v != 0.0) e.emplace_back(pv.k_index(k, bb, c), -v);
          }
        }
        b.add_equality(e, rhs(a, z));
      }
    }
  }
  return pv;
}

// || sum_t R_t^T grad_t g_j || <= x[bound_off + j] - g_err_j
void add_robust_rows(ConicBuilder& b, const InnerContext& ctx, const PolicyVars& pv, int bound_off) {
  const auto& d = pv.d;
  const auto& grad = ctx.lin->grad;
  const auto G0 = ctx.basis.topRows(d.n_x);
  for (int j = 0; j < d.n_g; ++j) {
    std::vector<LinearExpr> v(d.n_z);
    Vec v0 = Vec::Zero(d.n_z);
    for (int t = 0; t <= d.T; ++t) {
      for (int a = 0; a < d.n_x; ++a) {
        const double g = grad(j, t * d.n_x + a);
        if (g == 0.0) continue;
        if (t == 0) {
          v0 += g * G0.row(a).transpose();
        } else {
          for (int z = 0; z < d.n_z; ++z) v[z].emplace_back(pv.r_index(t, a, z), g);
        }
      }
    }
    b.add_second_order_cone({{bound_off + j, 1.0}}, -ctx.g_err(j), v, v0);
  }
}

// du with Q_u, the trust cone and the control bounds.
int add_control_variables(ConicBuilder& b, const InnerContext& ctx, const Dims& d) {
  const int off = b.add_variables("du", d.T * d.n_u);
  double constant = 0.0;
  for (int k = 0; k < d.T; ++k) {
    const Mat& R = ctx.R_u[k];
    const Vec uk = ctx.u_hat.segment(k * d.n_u, d.n_u);
    const Vec lin = 2.0 * R * uk;
    constant += uk.dot(R * uk);
    for (int a = 0; a < d.n_u; ++a) {
      const int ia = off + k * d.n_u + a;
      for (int bb = a; bb < d.n_u; ++bb) {
        const double v = a == bb ? R(a, a) : R(a, bb) + R(bb, a);
        if (v != 0.0) b.add_quadratic(ia, off + k * d.n_u + bb, v);
      }
      if (lin(a) != 0.0) b.add_linear_cost(ia, lin(a));
    }
  }
  b.add_constant_cost(constant);

  const Mat& F = ctx.trust_factor;
  std::vector<LinearExpr> v(F.rows());
  for (int r = 0; r < F.rows(); ++r)
    for (int c = 0; c < F.cols(); ++c)
      if (F(r, c) != 0.0) v[r].emplace_back(off + c, F(r, c));
  b.add_second_order_cone({}, ctx.r_trust, v, Vec::Zero(F.rows()));

  if (ctx.control_bounds) {
    const auto& cb = *ctx.control_bounds;
    for (int k = 0; k < d.T; ++k)
      for (int a = 0; a < d.n_u; ++a) {
        const int i = off + k * d.n_u + a;
        const double u = ctx.u_hat(k * d.n_u + a);
        if (std::isfinite(cb.upper(a))) b.add_inequality({{i, 1.0}}, cb.upper(a) - u);
        if (std::isfinite(cb.lower(a))) b.add_inequality({{i, -1.0}}, u - cb.lower(a));
      }
  }
  return off;
}

// g_hat + J_u du + p <= 0
void add_linearized_rows(ConicBuilder& b, const InnerContext& ctx, const Dims& d, int du_off, int p_off) {
  const auto& J = ctx.lin->J_u;
  for (int j = 0; j < d.n_g; ++j) {
    LinearExpr e;
    for (int c = 0; c < J.cols(); ++c)
      if (J(j, c) != 0.0) e.emplace_back(du_off + c, J(j, c));
    e.emplace_back(p_off + j, 1.0);
    b.add_inequality(e, -ctx.lin->g_hat(j));
  }
}

PolicyMatrix extract_policy(const Vec& x, const PolicyVars& pv) {
  const auto& d = pv.d;
  MatSeq K(d.T, Mat::Zero(d.n_u, d.n_x));
  for (int k = 0; k < d.T; ++k)
    for (int c = 0; c < d.n_x; ++c)
      for (int a = 0; a < d.n_u; ++a) K[k](a, c) = x(pv.k_index(k, a, c));
  return PolicyMatrix(std::move(K));
}

ConicSolution solve_checked(const std::string& name, const ConicProgram& prog, const InnerContext& ctx,
                            std::optional<WarmStart>& warm, int iteration, bool allow_infeasible) {
  if (ctx.dump) ctx.dump(name, prog);
  const ConicSolution sol = solve(prog, ctx.conic, warm ? &*warm : nullptr);
  if (sol.optimal()) {
    warm = sol.as_warm_start();
    return sol;
  }
  if (allow_infeasible && sol.status == ConicStatus::kPrimalInfeasible) return sol;
  throw InnerSolverError(name, sol.status, iteration);
}

}  // namespace

void prepare(InnerContext& ctx, const std::vector<ErrorEllipsoid>* error_sets) {
  if (ctx.blocks == nullptr || ctx.lin == nullptr || ctx.set == nullptr) {
    throw std::invalid_argument("prepare: blocks, linearization and uncertainty set are required");
  }
  const auto& blk = *ctx.blocks;
  if (ctx.set->zeta_dim() != (blk.horizon + 1) * blk.n_x) {
    throw std::invalid_argument("prepare: uncertainty set dimension does not match the horizon");
  }
  const int n_g = ctx.lin->rows();
  ctx.g_err = Vec::Zero(n_g);
  if (error_sets != nullptr) {
    if (static_cast<int>(error_sets->size()) != blk.horizon + 1) {
      throw std::invalid_argument("prepare: one error ellipsoid per timestep 0..T is required");
    }
    for (int j = 0; j < n_g; ++j) ctx.g_err(j) = error_support(*error_sets, ctx.lin->grad_slices(j));
  }
  ctx.basis = ctx.set->response_basis();
  const Mat& Fu = blk.Fu;
  if (Fu.rows() >= Fu.cols()) {
    Eigen::HouseholderQR<Mat> qr(Fu);
    ctx.trust_factor = qr.matrixQR().topRows(Fu.cols()).triangularView<Eigen::Upper>();
  } else {
    ctx.trust_factor = Fu;
  }
}

double policy_cost(const InnerContext& ctx, const PolicyMatrix& K) {
  double c = 0.0;
  for (int k = 0; k < K.horizon(); ++k) c += (ctx.R_K.at(k) * K.block(k)).squaredNorm();
  return c;
}

double control_cost(const InnerContext& ctx, const Vec& delta_u) {
  const int T = static_cast<int>(ctx.R_u.size());
  const int n_u = T > 0 ? static_cast<int>(ctx.u_hat.size()) / T : 0;
  double c = 0.0;
  for (int k = 0; k < T; ++k) {
    const Vec u = ctx.u_hat.segment(k * n_u, n_u) + delta_u.segment(k * n_u, n_u);
    c += u.dot(ctx.R_u[k] * u);
  }
  return c;
}

ConicProgram build_first_block(const AdmmState& state, const InnerContext& ctx) {
  const Dims d = dims_of(ctx);
  state.validate();
  if (state.p.size() != d.n_g) throw std::invalid_argument("AdmmState size does not match the constraint rows");
  ConicBuilder b;
  const PolicyVars pv = add_policy_variables(b, ctx, d);
  const int pt = b.add_variables("p_tilde", d.n_g);
  // lambda^T (p - pt) + rho/2 ||p - pt||^2
  for (int j = 0; j < d.n_g; ++j) {
    b.add_quadratic(pt + j, pt + j, 0.5 * state.rho);
    b.add_linear_cost(pt + j, -(state.lambda(j) + state.rho * state.p(j)));
  }
  b.add_constant_cost(state.lambda.dot(state.p) + 0.5 * state.rho * state.p.squaredNorm());
  add_robust_rows(b, ctx, pv, pt);
  return b.build();
}

ConicProgram build_second_block(const AdmmState& state, const InnerContext& ctx) {
  const Dims d = dims_of(ctx);
  state.validate();
  if (state.p.size() != d.n_g) throw std::invalid_argument("AdmmState size does not match the constraint rows");
  ConicBuilder b;
  const int du = add_control_variables(b, ctx, d);
  const int p = b.add_variables("p", d.n_g);
  for (int j = 0; j < d.n_g; ++j) {
    b.add_quadratic(p + j, p + j, 0.5 * state.rho);
    b.add_linear_cost(p + j, state.lambda(j) - state.rho * state.p_tilde(j));
  }
  b.add_constant_cost(-state.lambda.dot(state.p_tilde) + 0.5 * state.rho * state.p_tilde.squaredNorm());
  add_linearized_rows(b, ctx, d, du, p);
  return b.build();
}

ConicProgram build_direct(const InnerContext& ctx) {
  const Dims d = dims_of(ctx);
  ConicBuilder b;
  const int du = add_control_variables(b, ctx, d);
  const PolicyVars pv = add_policy_variables(b, ctx, d);
  const int p = b.add_variables("p", d.n_g);
  add_linearized_rows(b, ctx, d, du, p);
  add_robust_rows(b, ctx, pv, p);
  return b.build();
}

FirstBlockResult block1_update(AdmmState& state, const InnerContext& ctx, int iteration) {
  const ConicProgram prog = build_first_block(state, ctx);
  const ConicSolution sol = solve_checked("first-block", prog, ctx, state.warm_first, iteration, false);
  const Dims d = dims_of(ctx);
  PolicyVars pv;
  pv.d = d;
  pv.k_off = prog.layout.find("K").offset;
  pv.r_off = prog.layout.find("R").offset;
  FirstBlockResult r;
  r.K = extract_policy(sol.x, pv);
  r.p_tilde = prog.layout.slice(sol.x, "p_tilde");
  r.objective = sol.objective;
  state.p_tilde = r.p_tilde;
  return r;
}

SecondBlockResult block2_update(AdmmState& state, const InnerContext& ctx, int iteration) {
  const ConicProgram prog = build_second_block(state, ctx);
  const ConicSolution sol = solve_checked("second-block", prog, ctx, state.warm_second, iteration, false);
  SecondBlockResult r;
  r.delta_u = prog.layout.slice(sol.x, "du");
  r.p = prog.layout.slice(sol.x, "p");
  r.objective = sol.objective;
  state.p = r.p;
  return r;
}

void dual_update(AdmmState& state) {
  state.validate();
  const Vec diff = state.p - state.p_tilde;
  state.lambda += state.rho * diff;
  state.residual_history.push_back(diff.norm());
}

int run_admm_loop(AdmmState& state, const AdmmBlocks& blocks, int max_iterations, double eps_p) {
  if (max_iterations < 1) throw std::invalid_argument("run_admm_loop: need at least one iteration");
  int it = 0;
  while (it < max_iterations) {
    blocks.first(state, it);
    blocks.second(state, it);
    dual_update(state);
    ++it;
    if (state.residual_history.back() <= eps_p) break;
  }
  return it;
}

AdmmResult run_admm(AdmmState& state, const InnerContext& ctx, int L_max_in, double eps_p) {
  AdmmResult out;
  FirstBlockResult first;
  SecondBlockResult second;
  AdmmBlocks blocks;
  blocks.first = [&](AdmmState& s, int it) { first = block1_update(s, ctx, it); };
  blocks.second = [&](AdmmState& s, int it) {
    second = block2_update(s, ctx, it);
    if (ctx.log != nullptr) {
      *ctx.log << "  admm " << it << " residual " << (s.p - s.p_tilde).norm() << " first " << first.objective
               << " second " << second.objective << "\n";
    }
  };
  out.iterations = run_admm_loop(state, blocks, L_max_in, eps_p);
  out.delta_u = second.delta_u;
  out.K = first.K;
  out.converged = state.residual_history.back() <= eps_p;
  return out;
}

DirectResult direct_solve(AdmmState& state, const InnerContext& ctx) {
  const ConicProgram prog = build_direct(ctx);
  const ConicSolution sol = solve_checked("direct", prog, ctx, state.warm_direct, 0, true);
  DirectResult r;
  r.status = sol.status;
  if (!sol.optimal()) return r;
  const Dims d = dims_of(ctx);
  PolicyVars pv;
  pv.d = d;
  pv.k_off = prog.layout.find("K").offset;
  pv.r_off = prog.layout.find("R").offset;
  r.delta_u = prog.layout.slice(sol.x, "du");
  r.K = extract_policy(sol.x, pv);
  r.p = prog.layout.slice(sol.x, "p");
  r.objective = sol.objective;
  state.p = r.p;
  state.p_tilde = r.p;
  if (ctx.log != nullptr) *ctx.log << "  direct objective " << r.objective << "\n";
  return r;
}

}  // namespace nrto
