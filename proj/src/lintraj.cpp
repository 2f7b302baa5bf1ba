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

#include "nrto/lintraj.hpp"

#include <stdexcept>
#include <string>

namespace nrto {

Mat transition(const MatSeq& A, int k1, int k2) {
  if (k2 < 0 || k1 < k2) {
    throw std::invalid_argument("transition: need k1 >= k2 >= 0, got (" + std::to_string(k1) + ", " +
                                std::to_string(k2) + ")");
  }
  if (k1 > static_cast<int>(A.size())) throw std::invalid_argument("transition: k1 exceeds the horizon");
  const Eigen::Index n = A.empty() ? 0 : A.front().rows();
  Mat phi = Mat::Identity(n, n);
  for (int k = k2; k < k1; ++k) phi = A[k] * phi;
  return phi;
}

StackedBlocks build_blocks(const MatSeq& A, const MatSeq& B) {
  if (A.empty() || A.size() != B.size()) throw std::invalid_argument("build_blocks: A and B must have length T >= 1");
  const int T = static_cast<int>(A.size());
  const int nx = static_cast<int>(A.front().rows());
  const int nu = static_cast<int>(B.front().cols());
  for (int k = 0; k < T; ++k) {
    if (A[k].rows() != nx || A[k].cols() != nx || B[k].rows() != nx || B[k].cols() != nu) {
      throw std::invalid_argument("build_blocks: inconsistent Jacobian dimensions at step " + std::to_string(k));
    }
  }

  StackedBlocks sb;
  sb.horizon = T;
  sb.n_x = nx;
  sb.n_u = nu;
  sb.A = A;
  sb.B = B;
  const int rows = (T + 1) * nx;
  sb.F0 = Mat::Zero(rows, nx);
  sb.Fu = Mat::Zero(rows, T * nu);
  sb.Fd_tilde = Mat::Zero(rows, T * nx);

  Mat phi = Mat::Identity(nx, nx);
  sb.F0.topRows(nx) = phi;
  for (int i = 1; i <= T; ++i) {
    phi = A[i - 1] * phi;
    sb.F0.middleRows(i * nx, nx) = phi;
  }

  // Column block j: Phi(i, j+1) for i = j+1 .. T.
  for (int j = 0; j < T; ++j) {
    Mat prop = Mat::Identity(nx, nx);
    for (int i = j + 1; i <= T; ++i) {
      sb.Fd_tilde.block(i * nx, j * nx, nx, nx) = prop;
      sb.Fu.block(i * nx, j * nu, nx, nu) = prop * B[j];
      if (i < T) prop = A[i] * prop;
    }
  }

  sb.Fzeta.resize(rows, rows);
  sb.Fzeta << sb.F0, sb.Fd_tilde;
  return sb;
}

PolicyMatrix::PolicyMatrix(MatSeq blocks) : blocks_(std::move(blocks)) {
  for (const auto& b : blocks_) {
    if (b.rows() != blocks_.front().rows() || b.cols() != blocks_.front().cols()) {
      throw std::invalid_argument("PolicyMatrix: all gain blocks must share one shape");
    }
  }
}

PolicyMatrix PolicyMatrix::zeros(int horizon, int n_u, int n_x) {
  return PolicyMatrix(MatSeq(horizon, Mat::Zero(n_u, n_x)));
}

Mat PolicyMatrix::assembled() const {
  const int T = horizon();
  const int nu = n_u();
  const int nx = n_x();
  Mat K = Mat::Zero(T * nu, (T + 1) * nx);
  for (int k = 0; k < T; ++k) K.block(k * nu, k * nx, nu, nx) = blocks_[k];
  return K;
}

Vec PolicyMatrix::apply(const Vec& zeta) const {
  const int T = horizon();
  const int nu = n_u();
  const int nx = n_x();
  if (zeta.size() != (T + 1) * nx) throw std::invalid_argument("PolicyMatrix::apply: zeta has wrong dimension");
  Vec out(T * nu);
  for (int k = 0; k < T; ++k) out.segment(k * nu, nu).noalias() = blocks_[k] * zeta.segment(k * nx, nx);
  return out;
}

Vec PolicyMatrix::apply_transpose(const Vec& v) const {
  const int T = horizon();
  const int nu = n_u();
  const int nx = n_x();
  if (v.size() != T * nu) throw std::invalid_argument("PolicyMatrix::apply_transpose: wrong dimension");
  Vec out = Vec::Zero((T + 1) * nx);
  for (int k = 0; k < T; ++k) out.segment(k * nx, nx).noalias() = blocks_[k].transpose() * v.segment(k * nu, nu);
  return out;
}

Vec stacked_response(const StackedBlocks& blocks, const PolicyMatrix& K, const Vec& delta_u, const Vec& zeta) {
  if (delta_u.size() != blocks.Fu.cols() || zeta.size() != blocks.Fzeta.cols()) {
    throw std::invalid_argument("stacked_response: dimension mismatch");
  }
  return blocks.Fu * (delta_u + K.apply(zeta)) + blocks.Fzeta * zeta;
}

Vec closed_loop_transpose(const StackedBlocks& blocks, const PolicyMatrix& K, const Vec& c) {
  return K.apply_transpose(blocks.Fu.transpose() * c) + blocks.Fzeta.transpose() * c;
}

}  // namespace nrto
