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

#include "sparse_ldl.hpp"

#include <Eigen/OrderingMethods>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nrto::detail {

void QuasiDefiniteLdl::analyze(const SpMat& lower, const std::vector<int>& signs) {
  n_ = static_cast<int>(lower.rows());
  if (lower.cols() != n_ || static_cast<int>(signs.size()) != n_) {
    throw std::invalid_argument("QuasiDefiniteLdl: dimension mismatch");
  }
  // Full symmetric pattern for the ordering.
  SpMat full = lower;
  full += SpMat(lower.transpose());
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> P;
  Eigen::AMDOrdering<int> amd;
  amd(full, P);
  // The ordering's indices map new -> old.
  pinv_.assign(n_, 0);
  perm_.assign(n_, 0);
  for (int i = 0; i < n_; ++i) {
    perm_[i] = P.indices()(i);
    pinv_[perm_[i]] = i;
  }

  // Permuted upper triangle, remembering where each source value goes.
  struct Entry {
    int row, col, src;
  };
  std::vector<Entry> entries;
  entries.reserve(lower.nonZeros());
  for (int c = 0; c < lower.outerSize(); ++c) {
    for (SpMat::InnerIterator it(lower, c); it; ++it) {
      if (it.row() < c) throw std::invalid_argument("QuasiDefiniteLdl: expected the lower triangle");
      const int a = pinv_[it.row()];
      const int b = pinv_[c];
      const int idx = static_cast<int>(&it.valueRef() - lower.valuePtr());
      entries.push_back({std::min(a, b), std::max(a, b), idx});
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& x, const Entry& y) { return x.col != y.col ? x.col < y.col : x.row < y.row; });
  Ap_.assign(n_ + 1, 0);
  Ai_.resize(entries.size());
  src_.resize(entries.size());
  Ax_.assign(entries.size(), 0.0);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    ++Ap_[entries[k].col + 1];
    Ai_[k] = entries[k].row;
    src_[k] = entries[k].src;
  }
  for (int i = 0; i < n_; ++i) Ap_[i + 1] += Ap_[i];
  sign_.assign(n_, 1);
  for (int i = 0; i < n_; ++i) sign_[pinv_[i]] = signs[i] >= 0 ? 1 : -1;

  // Elimination tree and column counts of L.
  etree_.assign(n_, -1);
  Lnz_.assign(n_, 0);
  std::vector<int> work(n_, -1);
  for (int j = 0; j < n_; ++j) {
    work[j] = j;
    for (int p = Ap_[j]; p < Ap_[j + 1]; ++p) {
      int i = Ai_[p];
      while (work[i] != j) {
        if (etree_[i] == -1) etree_[i] = j;
        ++Lnz_[i];
        work[i] = j;
        i = etree_[i];
      }
    }
  }
  Lp_.assign(n_ + 1, 0);
  for (int i = 0; i < n_; ++i) Lp_[i + 1] = Lp_[i] + Lnz_[i];
  Li_.assign(Lp_[n_], 0);
  Lx_.assign(Lp_[n_], 0.0);
  D_.assign(n_, 0.0);
  Dinv_.assign(n_, 0.0);
  ok_ = false;
}

void QuasiDefiniteLdl::factor(const SpMat& lower, double eps, double delta) {
  const double* val = lower.valuePtr();
  for (std::size_t k = 0; k < Ax_.size(); ++k) Ax_[k] = val[src_[k]];

  std::vector<char> used(n_, 0);
  std::vector<double> y(n_, 0.0);
  std::vector<int> yidx(n_), buffer(n_), next(n_);
  for (int i = 0; i < n_; ++i) next[i] = Lp_[i];
  regularized_ = 0;
  ok_ = true;

  for (int k = 0; k < n_; ++k) {
    int nnz_y = 0;
    D_[k] = 0.0;
    for (int p = Ap_[k]; p < Ap_[k + 1]; ++p) {
      const int b = Ai_[p];
      if (b == k) {
        D_[k] = Ax_[p];
        continue;
      }
      y[b] = Ax_[p];
      int idx = b;
      if (!used[idx]) {
        used[idx] = 1;
        buffer[0] = idx;
        int nnz_e = 1;
        idx = etree_[b];
        while (idx != -1 && idx < k) {
          if (used[idx]) break;
          used[idx] = 1;
          buffer[nnz_e++] = idx;
          idx = etree_[idx];
        }
        while (nnz_e) yidx[nnz_y++] = buffer[--nnz_e];
      }
    }
    for (int i = nnz_y - 1; i >= 0; --i) {
      const int c = yidx[i];
      const int slot = next[c];
      const double yc = y[c];
      for (int j = Lp_[c]; j < slot; ++j) y[Li_[j]] -= Lx_[j] * yc;
      Li_[slot] = k;
      Lx_[slot] = yc * Dinv_[c];
      D_[k] -= yc * Lx_[slot];
      ++next[c];
      y[c] = 0.0;
      used[c] = 0;
    }
    if (!std::isfinite(D_[k])) {
      ok_ = false;
      return;
    }
    if (sign_[k] * D_[k] < eps) {
      D_[k] = sign_[k] * delta;
      ++regularized_;
    }
    Dinv_[k] = 1.0 / D_[k];
  }
}

Eigen::VectorXd QuasiDefiniteLdl::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x(n_);
  for (int i = 0; i < n_; ++i) x(pinv_[i]) = rhs(i);
  for (int i = 0; i < n_; ++i)
    for (int j = Lp_[i]; j < Lp_[i + 1]; ++j) x(Li_[j]) -= Lx_[j] * x(i);
  for (int i = 0; i < n_; ++i) x(i) *= Dinv_[i];
  for (int i = n_ - 1; i >= 0; --i)
    for (int j = Lp_[i]; j < Lp_[i + 1]; ++j) x(i) -= Lx_[j] * x(Li_[j]);
  Eigen::VectorXd out(n_);
  for (int i = 0; i < n_; ++i) out(i) = x(pinv_[i]);
  return out;
}

}  // namespace nrto::detail
