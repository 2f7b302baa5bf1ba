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

#include "nrto/sco.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace nrto {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kNto:
      return "nto";
    case Mode::kNrto:
      return "nrto";
    case Mode::kNrtoLe:
      return "nrto-le";
  }
  return "nrto";
}

Mode mode_from_string(const std::string& s) {
  if (s == "nto") return Mode::kNto;
  if (s == "nrto") return Mode::kNrto;
  if (s == "nrto-le") return Mode::kNrtoLe;
  throw std::invalid_argument("unknown mode '" + s + "' (expected nto, nrto or nrto-le)");
}

void OuterParams::validate() const {
  if (!(alpha >= 0.5 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in [0.5, 1)");
  if (!(beta > 1.0)) throw std::invalid_argument("beta must exceed 1");
  const double positive[] = {r_trust, rho, eta1, eta2, r_min, rho_max, eps_p, eps_u};
  for (double v : positive)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("outer-loop scalars must be positive and finite");
  if (max_outer < 1 || L_max_in < 1) throw std::invalid_argument("iteration limits must be at least 1");
}

OuterParams update_trust_region(OuterParams params, double delta_u_norm, double residual) {
  if (delta_u_norm >= params.eta1 * residual) {
    params.r_trust = params.literal_updates ? std::min(params.alpha * params.r_trust, params.r_min)
                                            : std::max(params.alpha * params.r_trust, params.r_min);
  }
  return params;
}

OuterParams update_penalty(OuterParams params, double delta_u_norm, double residual) {
  if (delta_u_norm <= params.eta2 * residual) {
    params.rho = params.literal_updates ? std::max(params.beta * params.rho, params.rho_max)
                                        : std::min(params.beta * params.rho, params.rho_max);
  }
  return params;
}

namespace {

void check_problem(const Problem& pb) {
  if (!pb.model) throw std::invalid_argument("Problem: model is required");
  const int T = pb.horizon();
  const int n_x = pb.model->state_dim();
  const int n_u = pb.model->control_dim();
  if (pb.x0.size() != n_x) throw std::invalid_argument("Problem: x0 has the wrong dimension");
  if (pb.constraints.n_x() != n_x) throw std::invalid_argument("Problem: constraint set state dimension mismatch");
  if (pb.uncertainty.zeta_dim() != (T + 1) * n_x) {
    throw std::invalid_argument("Problem: uncertainty set must cover (T+1) n_x disturbance entries");
  }
  if (static_cast<int>(pb.R_u.size()) != T || static_cast<int>(pb.R_K.size()) != T) {
    throw std::invalid_argument("Problem: one R_u and one R_K block per step are required");
  }
  for (int k = 0; k < T; ++k) {
    if (pb.R_u[k].rows() != n_u || pb.R_u[k].cols() != n_u || pb.R_K[k].rows() != n_u || pb.R_K[k].cols() != n_u) {
      throw std::invalid_argument("Problem: weight blocks must be n_u x n_u");
    }
  }
  if (!pb.u_init.empty() && static_cast<int>(pb.u_init.size()) != T) {
    throw std::invalid_argument("Problem: initial controls must have T entries");
  }
  if (pb.params.mode == Mode::kNrtoLe && static_cast<int>(pb.error_sets.size()) != T + 1) {
    throw std::invalid_argument("Problem: nrto-le mode needs one error ellipsoid per timestep 0..T");
  }
  if (const auto& cb = pb.constraints.control_bounds()) {
    if (cb->lower.size() != n_u || cb->upper.size() != n_u) {
      throw std::invalid_argument("Problem: control bounds have the wrong dimension");
    }
  }
  pb.params.validate();
}

}  // namespace

OptimizeResult optimize(const Problem& pb) {
  check_problem(pb);
  const DynamicsModel& model = *pb.model;
  const int T = pb.horizon();
  const int n_u = model.control_dim();
  OuterParams params = pb.params;

  VecSeq u0 = pb.u_init.empty() ? VecSeq(T, Vec::Zero(n_u)) : pb.u_init;
  if (const auto& cb = pb.constraints.control_bounds()) {
    for (auto& u : u0) u = u.cwiseMax(cb->lower).cwiseMin(cb->upper);
  }
  Vec u_hat = stack(u0);

  const UncertaintySet solve_set = params.mode == Mode::kNto ? pb.uncertainty.with_tau(0.0) : pb.uncertainty;
  const std::vector<ErrorEllipsoid>* errors = params.mode == Mode::kNrtoLe ? &pb.error_sets : nullptr;

  AdmmState state = AdmmState::zeros(pb.constraints.size(), params.rho);
  SolveLog log;
  bool converged = false;
  PolicyMatrix K = PolicyMatrix::zeros(T, n_u, model.state_dim());

  // Best direct-path iterate, used when the iteration cap is reached.
  std::optional<std::pair<Vec, PolicyMatrix>> best;
  double best_norm = std::numeric_limits<double>::infinity();
  int best_iteration = 0;

  for (int it = 1; it <= params.max_outer; ++it) {
    const NominalTrajectory nominal = rollout(model, pb.x0, unstack(u_hat, n_u, T));
    MatSeq A, B;
    linearize_along(model, nominal, A, B);
    const StackedBlocks blocks = build_blocks(A, B);
    const LinearizedConstraintData lin = linearize(pb.constraints, nominal, blocks);

    InnerContext ctx;
    ctx.blocks = &blocks;
    ctx.lin = &lin;
    ctx.set = &solve_set;
    ctx.control_bounds = pb.constraints.control_bounds();
    ctx.u_hat = u_hat;
    ctx.R_u = pb.R_u;
    ctx.R_K = pb.R_K;
    ctx.r_trust = params.r_trust;
    ctx.conic = pb.conic;
    ctx.log = pb.log;
    ctx.dump = pb.dump;
    prepare(ctx, errors);

    IterationRecord rec;
    rec.iteration = it;
    rec.r_trust = params.r_trust;
    rec.rho = state.rho;
    Vec delta_u;
    bool direct = false;
    try {
      if (state.residual() <= params.eps_p) {
        const DirectResult dr = direct_solve(state, ctx);
        if (dr.status == ConicStatus::kOptimal) {
          delta_u = dr.delta_u;
          K = dr.K;
          rec.path = "direct";
          rec.inner_iterations = 1;
          direct = true;
        } else {
          const AdmmResult ar = run_admm(state, ctx, params.L_max_in, params.eps_p);
          delta_u = ar.delta_u;
          K = ar.K;
          rec.path = "direct-infeasible+admm";
          rec.inner_iterations = ar.iterations;
        }
      } else {
        const AdmmResult ar = run_admm(state, ctx, params.L_max_in, params.eps_p);
        delta_u = ar.delta_u;
        K = ar.K;
        rec.path = "admm";
        rec.inner_iterations = ar.iterations;
      }
    } catch (const InnerSolverError& e) {
      log.status = "inner-solver-failure";
      throw OptimizeError(std::string("outer iteration ") + std::to_string(it) + ": " + e.what(), log);
    }

    rec.objective = control_cost(ctx, delta_u) + policy_cost(ctx, K);
    u_hat += delta_u;
    rec.delta_u_norm = delta_u.norm();
    rec.residual = state.residual();
    log.records.push_back(rec);
    if (pb.log != nullptr) {
      *pb.log << "outer " << it << " path " << rec.path << " |du| " << rec.delta_u_norm << " |p-pt| " << rec.residual
              << " r " << rec.r_trust << " rho " << rec.rho << " objective " << rec.objective << "\n";
    }

    if (direct && rec.delta_u_norm < best_norm) {
      best_norm = rec.delta_u_norm;
      best = std::make_pair(u_hat, K);
      best_iteration = it;
    }
    const bool consensus = (state.p.array() == state.p_tilde.array()).all();
    if (rec.delta_u_norm <= params.eps_u && consensus) {
      converged = true;
      log.selected_iteration = it;
      break;
    }
    params = update_trust_region(params, rec.delta_u_norm, rec.residual);
    params = update_penalty(params, rec.delta_u_norm, rec.residual);
    state.rho = params.rho;
  }

  OptimizeResult out;
  out.converged = converged;
  if (converged) {
    log.status = "converged";
  } else {
    log.status = "max-outer";
    if (best) {
      u_hat = best->first;
      K = best->second;
      log.selected_iteration = best_iteration;
    } else {
      log.selected_iteration = static_cast<int>(log.records.size());
    }
  }
  out.policy = Policy::make(model, pb.x0, unstack(u_hat, n_u, T), K.blocks());
  out.log = std::move(log);
  return out;
}

VecSeq steer_initialization(const DynamicsModel& model, const Vec& x0, const Eigen::Vector2d& goal, int horizon) {
  if (horizon < 1) throw std::invalid_argument("steer_initialization: horizon must be positive");
  const int n_u = model.control_dim();
  VecSeq u(horizon, Vec::Zero(n_u));
  const double duration = horizon * model.dt();
  const Eigen::Vector2d delta = goal - x0.head<2>();
  const std::string name = model.name();
  if (name == "unicycle") {
    const double heading = std::atan2(delta.y(), delta.x());
    const double turn = std::remainder(heading - x0(2), 2.0 * M_PI);
    for (auto& v : u) {
      v(0) = delta.norm() / duration;
      v(1) = turn / duration;
    }
  } else if (name == "car") {
    const double dist = delta.norm();
    const double accel = 2.0 * (dist - x0(3) * duration) / (duration * duration);
    for (auto& v : u) v(1) = accel;
  } else if (name == "double_integrator") {
    for (int a = 0; a < 2; ++a) {
      const double accel = 2.0 * (delta(a) - x0(2 + a) * duration) / (duration * duration);
      for (auto& v : u) v(a) = accel;
    }
  }
  return u;
}

}  // namespace nrto
