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
#ifndef NRTO_LINTRAJ_HPP
#define NRTO_LINTRAJ_HPP

#include "nrto/types.hpp"

namespace nrto {

/**
 * @brief Stacked response matrices of the dynamics linearized along a
 * nominal trajectory.
 *
 * With zeta = [d0_bar; d_0; ...; d_{T-1}] the stacked deviation obeys
 *
 *   dx + x^d = Fu (du + K zeta) + Fzeta zeta,   Fzeta = [F0, Fd_tilde].
 *
 * Row block k of F0 is Phi(k, 0); block (i, j) of Fu is Phi(i, j+1) B_j for
 * i > j; block (i, j) of Fd_tilde is Phi(i, j+1) for i > j.
 */
struct StackedBlocks {
  int horizon = 0;
  int n_x = 0;
  int n_u = 0;
  Mat F0;        // (T+1) n_x x n_x
  Mat Fu;        // (T+1) n_x x T n_u
  Mat Fd_tilde;  // (T+1) n_x x T n_x
  Mat Fzeta;     // (T+1) n_x x (T+1) n_x
  MatSeq A;
  MatSeq B;
};

/// Phi(k1, k2) = A_{k1-1} ... A_{k2}; identity when k1 == k2.
Mat transition(const MatSeq& A, int k1, int k2);

StackedBlocks build_blocks(const MatSeq& A, const MatSeq& B);

/**
 * @brief Block-diagonal feedback K = bdiag(K_0, ..., K_{T-1}) acting on zeta.
 *
 * K_k multiplies zeta block k (= d_{k-1}, with d_{-1} = d0_bar); the last
 * zeta block (d_{T-1}) reaches no control.
 */
class PolicyMatrix {
 public:
  PolicyMatrix() = default;
  explicit PolicyMatrix(MatSeq blocks);
  static PolicyMatrix zeros(int horizon, int n_u, int n_x);

  int horizon() const { return static_cast<int>(blocks_.size()); }
  int n_u() const { return blocks_.empty() ? 0 : static_cast<int>(blocks_.front().rows()); }
  int n_x() const { return blocks_.empty() ? 0 : static_cast<int>(blocks_.front().cols()); }

  const MatSeq& blocks() const { return blocks_; }
  const Mat& block(int k) const { return blocks_.at(k); }

  /// Dense T n_u x (T+1) n_x matrix.
  Mat assembled() const;

  /// K zeta without forming the dense matrix.
  Vec apply(const Vec& zeta) const;

  /// K^T v for v of length T n_u.
  Vec apply_transpose(const Vec& v) const;

 private:
  MatSeq blocks_;
};

/// Fu (du + K zeta) + Fzeta zeta.
Vec stacked_response(const StackedBlocks& blocks, const PolicyMatrix& K, const Vec& delta_u, const Vec& zeta);

/// (Fu K + Fzeta)^T c, the functional pulled back to disturbance space.
Vec closed_loop_transpose(const StackedBlocks& blocks, const PolicyMatrix& K, const Vec& c);

}  // namespace nrto

#endif  // NRTO_LINTRAJ_HPP
