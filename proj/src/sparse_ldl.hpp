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
#ifndef NRTO_SRC_SPARSE_LDL_HPP
#define NRTO_SRC_SPARSE_LDL_HPP

#include <Eigen/Sparse>

#include <vector>

namespace nrto::detail {

/**
 * @brief Sparse LDL' for quasidefinite matrices with signed dynamic
 * regularization.
 *
 * The pattern is fixed at analyze() time (AMD ordering, elimination tree).
 * factor() may be called repeatedly with new values on the same pattern.
 * Pivots whose sign disagrees with the expected sign, or whose magnitude is
 * below `eps`, are replaced by sign * delta.
 */
class QuasiDefiniteLdl {
 public:
  using SpMat = Eigen::SparseMatrix<double>;

  /// `lower` holds the lower triangle including every diagonal entry;
  /// `signs` gives the expected pivot sign (+1 / -1) of each row.
  void analyze(const SpMat& lower, const std::vector<int>& signs);

  /// Reads values from a matrix with exactly the analyzed pattern.
  void factor(const SpMat& lower, double eps = 1e-13, double delta = 2e-7);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  int regularized_pivots() const { return regularized_; }
  bool ok() const { return ok_; }

 private:
  int n_ = 0;
  std::vector<int> perm_;  // perm_[new] = old
  std::vector<int> pinv_;  // pinv_[old] = new
  // Permuted upper triangle (CSC) and the map from its slots to the source values.
  std::vector<int> Ap_, Ai_;
  std::vector<int> src_;
  std::vector<double> Ax_;
  std::vector<int> sign_;
  // Factor.
  std::vector<int> etree_, Lnz_, Lp_, Li_;
  std::vector<double> Lx_, D_, Dinv_;
  int regularized_ = 0;
  bool ok_ = false;
};

}  // namespace nrto::detail

#endif  // NRTO_SRC_SPARSE_LDL_HPP
