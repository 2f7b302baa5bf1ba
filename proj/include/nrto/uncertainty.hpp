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
#ifndef NRTO_UNCERTAINTY_HPP
#define NRTO_UNCERTAINTY_HPP

#include <cstdint>
#include <random>

#include "nrto/types.hpp"

namespace nrto {

/**
 * @brief Ellipsoidal uncertainty set over the stacked disturbance.
 *
 *   U[tau] = { zeta = Gamma z : z^T S z <= tau }
 *
 * zeta stacks [d0_bar; d_0; ...; d_{T-1}] and has (T+1) n_x entries.
 * Immutable after construction; all queries are const and thread-safe.
 */
class UncertaintySet {
 public:
  /// Throws std::invalid_argument unless S is symmetric positive definite,
  /// tau >= 0 and the dimensions agree.
  UncertaintySet(Mat gamma, Mat S, double tau);

  /// Gamma entries drawn uniform(-1, 1) from a seeded stream, S = I.
  static UncertaintySet random_gamma(int zeta_dim, int n_z, double tau, std::uint64_t seed);

  const Mat& gamma() const { return gamma_; }
  const Mat& shape() const { return S_; }
  double tau() const { return tau_; }
  int zeta_dim() const { return static_cast<int>(gamma_.rows()); }
  int n_z() const { return static_cast<int>(gamma_.cols()); }

  /// Same Gamma and S, different level.
  UncertaintySet with_tau(double tau) const;

  /// max_{zeta in U} c^T zeta = sqrt(tau) * || L^{-1} Gamma^T c ||, S = L L^T.
  double support(const Vec& c) const;

  /// sqrt(tau) * Gamma * L^{-T}. Its transpose maps a functional c to the
  /// vector whose norm is the support value; used to compile the robust rows.
  const Mat& response_basis() const { return basis_; }

  /// z with z^T S z <= tau. Interior samples are uniform in volume;
  /// boundary samples satisfy z^T S z = tau.
  Vec sample_z(std::mt19937_64& rng, bool boundary) const;
  Vec sample(std::mt19937_64& rng, bool boundary) const { return gamma_ * sample_z(rng, boundary); }
  std::vector<Vec> sample(std::mt19937_64& rng, int n, bool boundary) const;

 private:
  Mat gamma_;
  Mat S_;
  double tau_;
  Eigen::LLT<Mat> chol_;
  Mat basis_;
};

/// { x : (x - center)^T shape (x - center) <= level } for one timestep's
/// linearization error.
struct ErrorEllipsoid {
  Vec center;
  Mat shape;
  double level = 0.0;

  /// Throws std::invalid_argument unless shape is SPD and level >= 0.
  void validate() const;

  /// max over the set of g^T x = g^T center + sqrt(level) ||g||_{shape^{-1}}.
  double support(const Vec& g) const;

  /// (x - center)^T shape (x - center).
  double membership(const Vec& x) const;
};

/// Zero-centred, zero-level ellipsoids (the linearization error is ignored).
std::vector<ErrorEllipsoid> zero_error_sets(int count, int n_x);

/**
 * Confidence ellipsoid per timestep: sample mean, shape = (cov + eps I)^{-1}
 * with eps = 1e-9 * max(trace(cov) / n_x, 1e-12), level = inflation * largest
 * sample residual. With inflation >= 1 every input sample is inside.
 */
std::vector<ErrorEllipsoid> fit_error_ellipsoids(const std::vector<std::vector<Vec>>& samples, double inflation = 1.1);

/// Sum over timesteps of the per-step support values (grad_slices[k] pairs with ellipsoids[k]).
double error_support(const std::vector<ErrorEllipsoid>& ellipsoids, const std::vector<Vec>& grad_slices);

}  // namespace nrto

#endif  // NRTO_UNCERTAINTY_HPP
