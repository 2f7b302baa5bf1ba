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

// Primal-dual interior-point method on the homogeneous embedding of
//
//   min 0.5 x'Px + q'x  s.t.  Ax = b, Gx + s = h, s in K
//
// with Nesterov-Todd scaling and Mehrotra predictor-corrector steps. The
// quadratic term is handled natively; the quasidefinite KKT system is
// factored with a sparse LDL' after Ruiz equilibration.

#include <algorithm>
#include <cmath>
#include <limits>

#include "nrto/conic.hpp"
#include "sparse_ldl.hpp"

namespace nrto {
namespace {

constexpr double kCentrality = 1e-4;

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

struct Cones {
  int n_orth = 0;
  std::vector<int> soc;
  std::vector<int> off;
  int m = 0;
  int degree = 0;

  explicit Cones(const ConicProgram& p) : n_orth(p.n_orthant), soc(p.soc_dims) {
    int o = n_orth;
    for (int d : soc) {
      off.push_back(o);
      o += d;
    }
    m = o;
    degree = n_orth + static_cast<int>(soc.size());
  }

  double min_eig(const Vec& v) const {
    double mn = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_orth; ++i) mn = std::min(mn, v(i));
    for (std::size_t k = 0; k < soc.size(); ++k)
      mn = std::min(mn, v(off[k]) - v.segment(off[k] + 1, soc[k] - 1).norm());
    return mn;
  }

  void add_identity(Vec& v, double a) const {
    for (int i = 0; i < n_orth; ++i) v(i) += a;
    for (int o : off) v(o) += a;
  }

  Vec product(const Vec& u, const Vec& v) const {
    Vec out(m);
    for (int i = 0; i < n_orth; ++i) out(i) = u(i) * v(i);
    for (std::size_t k = 0; k < soc.size(); ++k) {
      const int o = off[k];
      const int d = soc[k] - 1;
      out(o) = u.segment(o, d + 1).dot(v.segment(o, d + 1));
      out.segment(o + 1, d) = u(o) * v.segment(o + 1, d) + v(o) * u.segment(o + 1, d);
    }
    return out;
  }

  // x with lam o x = v.
  Vec divide(const Vec& lam, const Vec& v) const {
    Vec out(m);
    for (int i = 0; i < n_orth; ++i) out(i) = v(i) / lam(i);
    for (std::size_t k = 0; k < soc.size(); ++k) {
      const int o = off[k];
      const int d = soc[k] - 1;
      const auto l1 = lam.segment(o + 1, d);
      const auto v1 = v.segment(o + 1, d);
      const double det = (lam(o) - l1.norm()) * (lam(o) + l1.norm());
      const double x0 = (lam(o) * v(o) - l1.dot(v1)) / det;
      out(o) = x0;
      out.segment(o + 1, d) = (v1 - x0 * l1) / lam(o);
    }
    return out;
  }

  // Smallest per-block complementarity product, or -1 when s or z has left
  // the interior. Second-order blocks use the product of the cone norms.
  double min_product(const Vec& s, const Vec& z) const {
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_orth; ++i) {
      if (!(s(i) > 0.0) || !(z(i) > 0.0)) return -1.0;
      lo = std::min(lo, s(i) * z(i));
    }
    for (std::size_t k = 0; k < soc.size(); ++k) {
      const int o = off[k];
      const int d = soc[k] - 1;
      const double sn = s.segment(o + 1, d).norm();
      const double zn = z.segment(o + 1, d).norm();
      const double sres = (s(o) - sn) * (s(o) + sn);
      const double zres = (z(o) - zn) * (z(o) + zn);
      if (!(s(o) > 0.0) || !(z(o) > 0.0) || !(sres > 0.0) || !(zres > 0.0)) return -1.0;
      lo = std::min(lo, std::sqrt(sres * zres));
    }
    return lo;
  }

  // Largest alpha with v + alpha dv in the cone (capped at a large value).
  double max_step(const Vec& v, const Vec& dv) const {
    double alpha = 1e30;
    for (int i = 0; i < n_orth; ++i)
      if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
    for (std::size_t k = 0; k < soc.size(); ++k) {
      const int o = off[k];
      const int d = soc[k] - 1;
      const auto x1 = v.segment(o + 1, d);
      const auto d1 = dv.segment(o + 1, d);
      const double x1n = x1.norm();
      const double nu2 = (v(o) - x1n) * (v(o) + x1n);
      double root = 1e30;
      if (!(nu2 > 0.0) || !(v(o) > 0.0)) {
        root = 0.0;
      } else {
        // Work in the frame where v maps to the cone axis so the boundary
        // distance is not lost to cancellation.
        const double nu = std::sqrt(nu2);
        const double xb0 = v(o) / nu;
        const Vec xb1 = x1 / nu;
        const double rho0 = (xb0 * dv(o) - xb1.dot(d1)) / nu;
        const Vec rho1 = d1 / nu - ((rho0 + dv(o) / nu) / (xb0 + 1.0)) * xb1;
        const double denom = rho1.norm() - rho0;
        if (denom > 0.0) root = 1.0 / denom;
      }
      alpha = std::min(alpha, root);
    }
    return alpha;
  }
};

// Nesterov-Todd scaling W with W z = W^{-1} s = lambda.
struct Scaling {
  Vec w;  // orthant part: sqrt(s/z)
  std::vector<double> eta;
  std::vector<Vec> wbar;

  bool update(const Cones& c, const Vec& s, const Vec& z) {
    w.resize(c.n_orth);
    for (int i = 0; i < c.n_orth; ++i) {
      if (!(s(i) > 0.0) || !(z(i) > 0.0)) return false;
      w(i) = std::sqrt(s(i) / z(i));
    }
    eta.resize(c.soc.size());
    wbar.resize(c.soc.size());
    for (std::size_t k = 0; k < c.soc.size(); ++k) {
      const int o = c.off[k];
      const int d = c.soc[k];
      const Vec sk = s.segment(o, d);
      const Vec zk = z.segment(o, d);
      const double sn = sk.tail(d - 1).norm();
      const double zn = zk.tail(d - 1).norm();
      const double sres = (sk(0) - sn) * (sk(0) + sn);
      const double zres = (zk(0) - zn) * (zk(0) + zn);
      if (!(sres > 0.0) || !(zres > 0.0) || !(sk(0) > 0.0) || !(zk(0) > 0.0)) return false;
      const Vec sb = sk / std::sqrt(sres);
      const Vec zb = zk / std::sqrt(zres);
      const double gamma = std::sqrt(std::max(0.5 * (1.0 + sb.dot(zb)), 1e-300));
      Vec wb(d);
      wb(0) = (sb(0) + zb(0)) / (2.0 * gamma);
      wb.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gamma);
      // Re-normalize onto the unit hyperboloid.
      const double w1n = wb.tail(d - 1).norm();
      wb(0) = std::sqrt(1.0 + w1n * w1n);
      wbar[k] = wb;
      eta[k] = std::pow(sres / zres, 0.25);
    }
    return true;
  }

  void identity(const Cones& c) {
    w = Vec::Ones(c.n_orth);
    eta.assign(c.soc.size(), 1.0);
    wbar.clear();
    for (int d : c.soc) {
      Vec e = Vec::Zero(d);
      e(0) = 1.0;
      wbar.push_back(e);
    }
  }

  Vec apply(const Cones& c, const Vec& v, bool inverse) const {
    Vec out(c.m);
    for (int i = 0; i < c.n_orth; ++i) out(i) = inverse ? v(i) / w(i) : v(i) * w(i);
    for (std::size_t k = 0; k < c.soc.size(); ++k) {
      const int o = c.off[k];
      const int d = c.soc[k] - 1;
      const auto& wb = wbar[k];
      const auto w1 = wb.tail(d);
      const auto v1 = v.segment(o + 1, d);
      const double a = w1.dot(v1);
      const double sign = inverse ? -1.0 : 1.0;
      const double scale = inverse ? 1.0 / eta[k] : eta[k];
      out(o) = scale * (wb(0) * v(o) + sign * a);
      out.segment(o + 1, d) = scale * (sign * v(o) * w1 + v1 + (a / (1.0 + wb(0))) * w1);
    }
    return out;
  }

  Vec apply_squared(const Cones& c, const Vec& v) const {
    Vec out(c.m);
    for (int i = 0; i < c.n_orth; ++i) out(i) = w(i) * w(i) * v(i);
    for (std::size_t k = 0; k < c.soc.size(); ++k) {
      const int o = c.off[k];
      const int d = c.soc[k];
      const auto& wb = wbar[k];
      const auto vk = v.segment(o, d);
      const double e2 = eta[k] * eta[k];
      Vec r = 2.0 * wb.dot(vk) * wb;
      r(0) -= vk(0);
      r.tail(d - 1) += vk.tail(d - 1);
      out.segment(o, d) = e2 * r;
    }
    return out;
  }
};

class InteriorPoint {
 public:
  InteriorPoint(const ConicProgram& prog, const ConicSettings& st)
      : orig_(prog),
        st_(st),
        cones_(prog),
        n_(prog.num_variables()),
        p_(prog.num_equalities()),
        m_(prog.num_cone_rows()) {}

  ConicSolution run();

 private:
  struct Iterate {
    Vec x, y, z, s;
    double tau = 1.0, kappa = 1.0;
  };
  struct Direction {
    Vec x, y, z, s;
    double tau = 0.0, kappa = 0.0;
  };

  void equilibrate();
  void build_kkt();
  void set_scaling_values();
  bool factor();
  Vec solve_kkt(const Vec& rhs) const;
  Vec kkt_multiply(const Vec& v) const;
  bool initialize(Iterate& it);
  void unscale(const Iterate& it, Vec& x, Vec& y, Vec& z, Vec& s) const;
  bool direction(const Iterate& it, const Vec& sol1, double eta, const Vec& ds, double dk, const Vec& Fx,
                 const Vec& Fy, const Vec& Fz, double Ftau, Direction& out) const;
  double step_length(const Iterate& it, const Direction& d) const;

  const ConicProgram& orig_;
  ConicSettings st_;
  Cones cones_;
  int n_, p_, m_;

  SpMat P_, A_, G_;
  Vec q_, b_, h_;
  Vec D_, Ea_, Eg_;
  double c_ = 1.0;

  SpMat K_;
  std::vector<int> zpos_;
  detail::QuasiDefiniteLdl ldl_;
  Scaling W_;
  double delta_ = 1e-8;
};

void scale_matrix(SpMat& M, const Vec& row, const Vec& col) {
  for (int c = 0; c < M.outerSize(); ++c)
    for (SpMat::InnerIterator it(M, c); it; ++it) it.valueRef() *= row(it.row()) * col(c);
}

void InteriorPoint::equilibrate() {
  P_ = orig_.P;
  A_ = orig_.A;
  G_ = orig_.G;
  D_ = Vec::Ones(n_);
  Ea_ = Vec::Ones(p_);
  Eg_ = Vec::Ones(m_);
  auto clamp = [](double v) { return std::clamp(v, 1e-4, 1e4); };
  for (int pass = 0; pass < st_.equilibration_passes; ++pass) {
    Vec col = Vec::Zero(n_);
    Vec ra = Vec::Zero(p_);
    Vec rg = Vec::Zero(m_);
    for (int c = 0; c < n_; ++c) {
      for (SpMat::InnerIterator it(P_, c); it; ++it) col(c) = std::max(col(c), std::abs(it.value()));
      for (SpMat::InnerIterator it(A_, c); it; ++it) {
        const double a = std::abs(it.value());
        col(c) = std::max(col(c), a);
        ra(it.row()) = std::max(ra(it.row()), a);
      }
      for (SpMat::InnerIterator it(G_, c); it; ++it) {
        const double a = std::abs(it.value());
        col(c) = std::max(col(c), a);
        rg(it.row()) = std::max(rg(it.row()), a);
      }
    }
    for (std::size_t k = 0; k < cones_.soc.size(); ++k) {
      const double mx = rg.segment(cones_.off[k], cones_.soc[k]).maxCoeff();
      rg.segment(cones_.off[k], cones_.soc[k]).setConstant(mx);
    }
    Vec d(n_), ea(p_), eg(m_);
    for (int i = 0; i < n_; ++i) d(i) = col(i) > 0.0 ? clamp(1.0 / std::sqrt(col(i))) : 1.0;
    for (int i = 0; i < p_; ++i) ea(i) = ra(i) > 0.0 ? clamp(1.0 / std::sqrt(ra(i))) : 1.0;
    for (int i = 0; i < m_; ++i) eg(i) = rg(i) > 0.0 ? clamp(1.0 / std::sqrt(rg(i))) : 1.0;
    scale_matrix(P_, d, d);
    scale_matrix(A_, ea, d);
    scale_matrix(G_, eg, d);
    D_ = D_.cwiseProduct(d);
    Ea_ = Ea_.cwiseProduct(ea);
    Eg_ = Eg_.cwiseProduct(eg);
  }
  q_ = D_.cwiseProduct(orig_.q);
  b_ = Ea_.cwiseProduct(orig_.b);
  h_ = Eg_.cwiseProduct(orig_.h);

  double pmean = 0.0;
  if (n_ > 0) {
    for (int c = 0; c < n_; ++c) {
      double mx = 0.0;
      for (SpMat::InnerIterator it(P_, c); it; ++it) mx = std::max(mx, std::abs(it.value()));
      pmean += mx;
    }
    pmean /= n_;
  }
  const double ref = std::max(pmean, inf_norm(q_));
  c_ = ref > 0.0 ? std::clamp(1.0 / ref, 1e-4, 1e4) : 1.0;
  P_ *= c_;
  q_ *= c_;
}

void InteriorPoint::build_kkt() {
  const int N = n_ + p_ + m_;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(P_.nonZeros() + A_.nonZeros() + G_.nonZeros() + N + m_ * 4);
  for (int c = 0; c < n_; ++c) {
    for (SpMat::InnerIterator it(P_, c); it; ++it)
      if (it.row() >= c) trip.emplace_back(it.row(), c, it.value());
    trip.emplace_back(c, c, delta_);
    for (SpMat::InnerIterator it(A_, c); it; ++it) trip.emplace_back(n_ + it.row(), c, it.value());
    for (SpMat::InnerIterator it(G_, c); it; ++it) trip.emplace_back(n_ + p_ + it.row(), c, it.value());
  }
  for (int i = 0; i < p_; ++i) trip.emplace_back(n_ + i, n_ + i, -delta_);
  std::vector<std::pair<int, int>> zentries;
  for (int i = 0; i < cones_.n_orth; ++i) zentries.emplace_back(i, i);
  for (std::size_t k = 0; k < cones_.soc.size(); ++k)
    for (int c = 0; c < cones_.soc[k]; ++c)
      for (int r = c; r < cones_.soc[k]; ++r) zentries.emplace_back(cones_.off[k] + r, cones_.off[k] + c);
  for (const auto& [r, c] : zentries) trip.emplace_back(n_ + p_ + r, n_ + p_ + c, -1.0);
  K_.resize(N, N);
  K_.setFromTriplets(trip.begin(), trip.end());
  K_.makeCompressed();
  zpos_.clear();
  zpos_.reserve(zentries.size());
  for (const auto& [r, c] : zentries) {
    const int col = n_ + p_ + c;
    const int row = n_ + p_ + r;
    const int* begin = K_.innerIndexPtr() + K_.outerIndexPtr()[col];
    const int* end = K_.innerIndexPtr() + K_.outerIndexPtr()[col + 1];
    const int* pos = std::lower_bound(begin, end, row);
    zpos_.push_back(static_cast<int>(pos - K_.innerIndexPtr()));
  }
  std::vector<int> signs(N, -1);
  std::fill(signs.begin(), signs.begin() + n_, 1);
  ldl_.analyze(K_, signs);
}

void InteriorPoint::set_scaling_values() {
  double* val = K_.valuePtr();
  std::size_t idx = 0;
  for (int i = 0; i < cones_.n_orth; ++i) val[zpos_[idx++]] = -(W_.w(i) * W_.w(i) + delta_);
  for (std::size_t k = 0; k < cones_.soc.size(); ++k) {
    const int d = cones_.soc[k];
    const Vec& wb = W_.wbar[k];
    const double e2 = W_.eta[k] * W_.eta[k];
    for (int c = 0; c < d; ++c) {
      for (int r = c; r < d; ++r) {
        double v = 2.0 * wb(r) * wb(c);
        if (r == c) v += (r == 0 ? -1.0 : 1.0);
        val[zpos_[idx++]] = -(e2 * v + (r == c ? delta_ : 0.0));
      }
    }
  }
}

bool InteriorPoint::factor() {
  ldl_.factor(K_);
  return ldl_.ok();
}

Vec InteriorPoint::kkt_multiply(const Vec& v) const {
  Vec out(n_ + p_ + m_);
  const auto vx = v.head(n_);
  const auto vy = v.segment(n_, p_);
  const Vec vz = v.tail(m_);
  out.head(n_) = P_ * vx + A_.transpose() * vy + G_.transpose() * vz;
  out.segment(n_, p_) = A_ * vx;
  out.tail(m_) = G_ * vx - W_.apply_squared(cones_, vz);
  return out;
}

Vec InteriorPoint::solve_kkt(const Vec& rhs) const {
  Vec sol = ldl_.solve(rhs);
  const double target = 1e-13 * (1.0 + inf_norm(rhs));
  for (int k = 0; k < st_.refinement_steps; ++k) {
    const Vec r = rhs - kkt_multiply(sol);
    if (inf_norm(r) <= target) break;
    sol += ldl_.solve(r);
  }
  return sol;
}

bool InteriorPoint::initialize(Iterate& it) {
  W_.identity(cones_);
  set_scaling_values();
  if (!factor()) return false;
  Vec rhs(n_ + p_ + m_);
  rhs << -q_, b_, h_;
  const Vec sol = solve_kkt(rhs);
  if (!sol.allFinite()) return false;
  it.x = sol.head(n_);
  it.y = sol.segment(n_, p_);
  it.z = sol.tail(m_);
  it.s = -it.z;
  auto shift = [&](Vec& v) {
    const double a = -cones_.min_eig(v);
    if (m_ > 0 && a >= -1e-8) cones_.add_identity(v, 1.0 + a);
  };
  shift(it.s);
  shift(it.z);
  it.tau = 1.0;
  it.kappa = 1.0;
  return true;
}

void InteriorPoint::unscale(const Iterate& it, Vec& x, Vec& y, Vec& z, Vec& s) const {
  x = D_.cwiseProduct(it.x) / it.tau;
  y = Ea_.cwiseProduct(it.y) / (c_ * it.tau);
  z = Eg_.cwiseProduct(it.z) / (c_ * it.tau);
  s = it.s.cwiseQuotient(Eg_) / it.tau;
}

bool InteriorPoint::direction(const Iterate& it, const Vec& sol1, double eta, const Vec& ds, double dk,
                              const Vec& Fx, const Vec& Fy, const Vec& Fz, double Ftau, Direction& out) const {
  const Vec lam = W_.apply(cones_, it.z, false);
  const Vec Wt = W_.apply(cones_, cones_.divide(lam, ds), false);
  Vec rhs(n_ + p_ + m_);
  rhs << -eta * Fx, -eta * Fy, -eta * Fz - Wt;
  const Vec sol2 = solve_kkt(rhs);
  const Vec Px = P_ * it.x;
  const Vec qbar = q_ + (2.0 / it.tau) * Px;
  const double xPx = it.x.dot(Px);
  const double num = -eta * Ftau - dk / it.tau - qbar.dot(sol2.head(n_)) - b_.dot(sol2.segment(n_, p_)) -
                     h_.dot(sol2.tail(m_));
  const double den = qbar.dot(sol1.head(n_)) + b_.dot(sol1.segment(n_, p_)) + h_.dot(sol1.tail(m_)) -
                     xPx / (it.tau * it.tau) - it.kappa / it.tau;
  if (!std::isfinite(num) || !std::isfinite(den) || den == 0.0) return false;
  out.tau = num / den;
  const Vec full = sol2 + out.tau * sol1;
  out.x = full.head(n_);
  out.y = full.segment(n_, p_);
  out.z = full.tail(m_);
  out.s = Wt - W_.apply_squared(cones_, out.z);
  out.kappa = (dk - it.kappa * out.tau) / it.tau;
  return out.x.allFinite() && out.z.allFinite() && std::isfinite(out.kappa);
}

double InteriorPoint::step_length(const Iterate& it, const Direction& d) const {
  double a = std::min(cones_.max_step(it.s, d.s), cones_.max_step(it.z, d.z));
  if (d.tau < 0.0) a = std::min(a, -it.tau / d.tau);
  if (d.kappa < 0.0) a = std::min(a, -it.kappa / d.kappa);
  return a;
}

ConicSolution InteriorPoint::run() {
  ConicSolution out;
  out.status = ConicStatus::kIterationLimit;
  out.x = Vec::Zero(n_);
  out.y = Vec::Zero(p_);
  out.z = Vec::Zero(m_);
  out.s = Vec::Zero(m_);

  delta_ = st_.static_regularization;
  equilibrate();
  build_kkt();
  Iterate it;
  if (!initialize(it)) return out;

  double best_metric = std::numeric_limits<double>::infinity();
  Vec bx, by, bz, bs;
  KktResiduals best_res;
  bool converged = false;
  int iter = 0;
  for (;; ++iter) {
    const Vec Px = P_ * it.x;
    const Vec Fx = Px + A_.transpose() * it.y + G_.transpose() * it.z + q_ * it.tau;
    const Vec Fy = A_ * it.x - b_ * it.tau;
    const Vec Fz = G_ * it.x + it.s - h_ * it.tau;
    const double Ftau = q_.dot(it.x) + b_.dot(it.y) + h_.dot(it.z) + it.x.dot(Px) / it.tau + it.kappa;

    Vec x, y, z, s;
    unscale(it, x, y, z, s);
    if (!x.allFinite() || !z.allFinite()) break;
    const KktResiduals res = kkt_residuals(orig_, x, y, z, s);
    const double metric = std::max({res.primal, res.dual, res.gap});
    if (metric < best_metric) {
      best_metric = metric;
      bx = x;
      by = y;
      bz = z;
      bs = s;
      best_res = res;
    }
    if (res.primal <= st_.tol_target && res.dual <= st_.tol_target && res.gap <= st_.tol_target) {
      converged = true;
      break;
    }

    if (it.tau < it.kappa) {
      const Vec yh = Ea_.cwiseProduct(it.y);
      const Vec zh = Eg_.cwiseProduct(it.z);
      const double btyz = orig_.b.dot(yh) + orig_.h.dot(zh);
      if (btyz < 0.0) {
        const Vec r = orig_.A.transpose() * yh + orig_.G.transpose() * zh;
        if (inf_norm(r) <= st_.tol_infeasible * -btyz) {
          out.status = ConicStatus::kPrimalInfeasible;
          out.x = Vec::Zero(n_);
          out.y = yh / -btyz;
          out.z = zh / -btyz;
          out.iterations = iter;
          return out;
        }
      }
      const Vec xh = D_.cwiseProduct(it.x);
      const Vec sh = it.s.cwiseQuotient(Eg_);
      const double qx = orig_.q.dot(xh);
      if (qx < 0.0) {
        const double lim = st_.tol_infeasible * -qx;
        if (inf_norm(orig_.P * xh) <= lim && inf_norm(orig_.A * xh) <= lim &&
            inf_norm(orig_.G * xh + sh) <= lim) {
          out.status = ConicStatus::kDualInfeasible;
          out.x = xh / -qx;
          out.s = sh / -qx;
          out.iterations = iter;
          return out;
        }
      }
    }
    if (iter >= st_.max_iterations) break;

    if (!W_.update(cones_, it.s, it.z)) break;
    set_scaling_values();
    if (!factor()) break;
    Vec rhs1(n_ + p_ + m_);
    rhs1 << -q_, b_, h_;
    const Vec sol1 = solve_kkt(rhs1);
    if (!sol1.allFinite()) break;

    const Vec lam = W_.apply(cones_, it.z, false);
    const Vec ll = cones_.product(lam, lam);
    Direction aff;
    if (!direction(it, sol1, 1.0, -ll, -it.tau * it.kappa, Fx, Fy, Fz, Ftau, aff)) break;
    const double a_aff = std::min(1.0, step_length(it, aff));
    const double mu = (it.s.dot(it.z) + it.tau * it.kappa) / (cones_.degree + 1);
    const double sigma = std::pow(1.0 - a_aff, 3);

    Vec ds = -ll - cones_.product(W_.apply(cones_, aff.s, true), W_.apply(cones_, aff.z, false));
    cones_.add_identity(ds, sigma * mu);
    const double dk = -it.tau * it.kappa - aff.tau * aff.kappa + sigma * mu;
    Direction dir;
    if (!direction(it, sol1, 1.0 - sigma, ds, dk, Fx, Fy, Fz, Ftau, dir)) break;
    // Backtrack until every block keeps a fixed fraction of the average
    // complementarity, which keeps the scaling well defined near the end.
    double alpha = std::min(1.0, 0.99 * step_length(it, dir));
    Vec ns, nz;
    double ntau = 0.0, nkappa = 0.0;
    bool centered = false;
    for (int bt = 0; bt < 50 && alpha > 1e-10; ++bt, alpha *= 0.8) {
      ns = it.s + alpha * dir.s;
      nz = it.z + alpha * dir.z;
      ntau = it.tau + alpha * dir.tau;
      nkappa = it.kappa + alpha * dir.kappa;
      const double nmu = (ns.dot(nz) + ntau * nkappa) / (cones_.degree + 1);
      const double lo = std::min(cones_.min_product(ns, nz), ntau * nkappa);
      if (ntau > 0.0 && nkappa > 0.0 && lo >= kCentrality * nmu) {
        centered = true;
        break;
      }
    }
    if (!centered) break;
    it.x += alpha * dir.x;
    it.y += alpha * dir.y;
    it.z = nz;
    it.s = ns;
    it.tau = ntau;
    it.kappa = nkappa;
  }

  out.iterations = iter;
  if (bx.size() == n_) {
    out.x = bx;
    out.y = by;
    out.z = bz;
    out.s = bs;
    out.primal_residual = best_res.primal;
    out.dual_residual = best_res.dual;
    out.gap = best_res.gap;
    out.objective = best_res.primal_cost + orig_.objective_offset;
    const bool accept =
        best_res.primal <= st_.tol_accept && best_res.dual <= st_.tol_accept && best_res.gap <= st_.tol_accept;
    if (converged || accept) out.status = ConicStatus::kOptimal;
  }
  return out;
}

ConicSolution solve_native(const ConicProgram& prog, const ConicSettings& settings) {
  InteriorPoint ipm(prog, settings);
  return ipm.run();
}

ConicSolution solve_epigraph(const ConicProgram& prog, const ConicSettings& settings) {
  const int n = prog.num_variables();
  const int m = prog.num_cone_rows();
  const ConicProgram epi = epigraph_form(prog);
  ConicSettings inner = settings;
  inner.epigraph_fallback = false;
  inner.force_epigraph = false;
  const ConicSolution es = solve_native(epi, inner);
  ConicSolution out;
  out.status = es.status;
  out.iterations = es.iterations;
  out.used_epigraph = true;
  out.x = es.x.size() == n + 1 ? Vec(es.x.head(n)) : Vec::Zero(n);
  out.y = es.y;
  out.z = es.z.size() >= m ? Vec(es.z.head(m)) : Vec::Zero(m);
  out.s = es.s.size() >= m ? Vec(es.s.head(m)) : Vec::Zero(m);
  // Residuals refer to the epigraph program; the duals mapped back to the
  // original are only as accurate as the epigraph cone multiplier.
  out.primal_residual = es.primal_residual;
  out.dual_residual = es.dual_residual;
  out.gap = es.gap;
  if (out.x.allFinite()) out.objective = 0.5 * out.x.dot(prog.P * out.x) + prog.q.dot(out.x) + prog.objective_offset;
  return out;
}

}  // namespace

ConicSolution solve(const ConicProgram& prog, const ConicSettings& settings, const WarmStart* warm_start) {
  prog.validate();
  const int n = prog.num_variables();
  const int p = prog.num_equalities();
  const int m = prog.num_cone_rows();

  if (warm_start != nullptr && warm_start->x.size() == n && warm_start->y.size() == p &&
      warm_start->z.size() == m && warm_start->s.size() == m && warm_start->x.allFinite() &&
      warm_start->y.allFinite() && warm_start->z.allFinite() && warm_start->s.allFinite() &&
      in_cone(prog, warm_start->s, 0.0) && in_cone(prog, warm_start->z, 0.0)) {
    const KktResiduals r = kkt_residuals(prog, warm_start->x, warm_start->y, warm_start->z, warm_start->s);
    if (r.primal <= settings.tol_target && r.dual <= settings.tol_target && r.gap <= settings.tol_target) {
      ConicSolution out;
      out.status = ConicStatus::kOptimal;
      out.x = warm_start->x;
      out.y = warm_start->y;
      out.z = warm_start->z;
      out.s = warm_start->s;
      out.primal_residual = r.primal;
      out.dual_residual = r.dual;
      out.gap = r.gap;
      out.objective = r.primal_cost + prog.objective_offset;
      out.warm_start_accepted = true;
      return out;
    }
  }

  if (settings.force_epigraph && prog.P.nonZeros() > 0) return solve_epigraph(prog, settings);
  ConicSolution sol = solve_native(prog, settings);
  if (sol.status == ConicStatus::kIterationLimit && settings.epigraph_fallback && prog.P.nonZeros() > 0) {
    ConicSolution alt = solve_epigraph(prog, settings);
    if (alt.status != ConicStatus::kIterationLimit) return alt;
  }
  return sol;
}

}  // namespace nrto
