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

#include "nrto/uncertainty.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nrto {

namespace {

bool is_symmetric(const Mat& M) {
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

}  // namespace

UncertaintySet::UncertaintySet(Mat gamma, Mat S, double tau) : gamma_(std::move(gamma)), S_(std::move(S)), tau_(tau) {
  if (!(tau_ >= 0.0)) throw std::invalid_argument("uncertainty level tau must be nonnegative");
  if (gamma_.cols() < 1 || gamma_.rows() < 1) throw std::invalid_argument("Gamma must be nonempty");
  if (S_.rows() != gamma_.cols() || S_.cols() != gamma_.cols()) {
    throw std::invalid_argument("S must be n_z x n_z with n_z = " + std::to_string(gamma_.cols()));
  }
  if (!is_symmetric(S_)) throw std::invalid_argument("S must be symmetric");
  chol_.compute(S_);
  if (chol_.info() != Eigen::Success) throw std::invalid_argument("S must be positive definite");
  // basis = sqrt(tau) Gamma L^{-T}  <=>  basis^T = sqrt(tau) L^{-1} Gamma^T
  Mat bt = chol_.matrixL().solve(gamma_.transpose());
  basis_ = std::sqrt(tau_) * bt.transpose();
}

UncertaintySet UncertaintySet::random_gamma(int zeta_dim, int n_z, double tau, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Mat gamma(zeta_dim, n_z);
  // Row-major fill so the draw order does not depend on storage order.
  for (int i = 0; i < zeta_dim; ++i)
    for (int j = 0; j < n_z; ++j) gamma(i, j) = unif(rng);
  return UncertaintySet(std::move(gamma), Mat::Identity(n_z, n_z), tau);
}

UncertaintySet UncertaintySet::with_tau(double tau) const { return UncertaintySet(gamma_, S_, tau); }

double UncertaintySet::support(const Vec& c) const {
  if (c.size() != gamma_.rows()) throw std::invalid_argument("support: functional has wrong dimension");
  if (tau_ == 0.0) return 0.0;
  Vec w = chol_.matrixL().solve(gamma_.transpose() * c);
  return std::sqrt(tau_) * w.norm();
}

Vec UncertaintySet::sample_z(std::mt19937_64& rng, bool boundary) const {
  const int nz = n_z();
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec u(nz);
  double nrm = 0.0;
  do {
    for (int i = 0; i < nz; ++i) u(i) = normal(rng);
    nrm = u.norm();
  } while (nrm == 0.0);
  u /= nrm;
  double radius = 1.0;
  if (!boundary) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    radius = std::pow(unif(rng), 1.0 / nz);
  }
  // z = sqrt(tau) r L^{-T} u gives z^T S z = tau r^2.
  Vec z = chol_.matrixU().solve(u);
  return std::sqrt(tau_) * radius * z;
}

std::vector<Vec> UncertaintySet::sample(std::mt19937_64& rng, int n, bool boundary) const {
  if (n < 1) throw std::invalid_argument("sample: n must be at least one");
  std::vector<Vec> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(sample(rng, boundary));
  return out;
}

// ------------------------------------------------------------ error sets

void ErrorEllipsoid::validate() const {
  if (!(level >= 0.0)) throw std::invalid_argument("error ellipsoid level must be nonnegative");
  if (shape.rows() != center.size() || shape.cols() != center.size()) {
    throw std::invalid_argument("error ellipsoid shape must be n_x x n_x");
  }
  Eigen::LLT<Mat> llt(shape);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("error ellipsoid shape must be positive definite");
}

double ErrorEllipsoid::support(const Vec& g) const {
  double value = g.dot(center);
  if (level > 0.0) {
    Eigen::LLT<Mat> llt(shape);
    // ||g||_{shape^{-1}} = ||L^{-1} g|| for shape = L L^T
    Vec w = llt.matrixL().solve(g);
    value += std::sqrt(level) * w.norm();
  }
  return value;
}

double ErrorEllipsoid::membership(const Vec& x) const {
  const Vec d = x - center;
  return d.dot(shape * d);
}

std::vector<ErrorEllipsoid> zero_error_sets(int count, int n_x) {
  return std::vector<ErrorEllipsoid>(count, ErrorEllipsoid{Vec::Zero(n_x), Mat::Identity(n_x, n_x), 0.0});
}

std::vector<ErrorEllipsoid> fit_error_ellipsoids(const std::vector<std::vector<Vec>>& samples, double inflation) {
  if (!(inflation >= 1.0)) throw std::invalid_argument("fit_error_ellipsoids: inflation must be >= 1");
  std::vector<ErrorEllipsoid> out;
  out.reserve(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& pts = samples[k];
    if (pts.empty()) throw std::invalid_argument("fit_error_ellipsoids: no samples at timestep " + std::to_string(k));
    const int n = static_cast<int>(pts.front().size());
    if (static_cast<int>(pts.size()) < n + 1) {
      throw std::invalid_argument("fit_error_ellipsoids: timestep " + std::to_string(k) + " has " +
                                  std::to_string(pts.size()) + " samples, need at least " + std::to_string(n + 1));
    }
    Vec mean = Vec::Zero(n);
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    Mat cov = Mat::Zero(n, n);
    for (const auto& p : pts) {
      const Vec d = p - mean;
      cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(pts.size() - 1);
    const double eps = 1e-9 * std::max(cov.trace() / n, 1e-12);
    cov.diagonal().array() += eps;

    ErrorEllipsoid e;
    e.center = mean;
    Eigen::LLT<Mat> llt(cov);
    e.shape = llt.solve(Mat::Identity(n, n));
    e.shape = 0.5 * (e.shape + e.shape.transpose());
    double worst = 0.0;
    for (const auto& p : pts) worst = std::max(worst, e.membership(p));
    e.level = inflation * worst;
    out.push_back(std::move(e));
  }
  return out;
}

double error_support(const std::vector<ErrorEllipsoid>& ellipsoids, const std::vector<Vec>& grad_slices) {
  if (ellipsoids.size() != grad_slices.size()) throw std::invalid_argument("error_support: length mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < ellipsoids.size(); ++k) {
    if (grad_slices[k].isZero(0.0)) continue;
    total += ellipsoids[k].support(grad_slices[k]);
  }
  return total;
}

}  // namespace nrto
