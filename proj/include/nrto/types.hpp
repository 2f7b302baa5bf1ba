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
#ifndef NRTO_TYPES_HPP
#define NRTO_TYPES_HPP

#include <Eigen/Dense>

#include <vector>

namespace nrto {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Per-timestep sequences (states, controls, gains).
using VecSeq = std::vector<Vec>;
using MatSeq = std::vector<Mat>;

/// Concatenates a sequence of equally sized vectors into one stacked vector.
inline Vec stack(const VecSeq& parts) {
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.size();
  Vec out(total);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    out.segment(off, p.size()) = p;
    off += p.size();
  }
  return out;
}

/// Splits a stacked vector into `count` blocks of size `block`.
inline VecSeq unstack(const Vec& v, int block, int count) {
  VecSeq out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) out.push_back(v.segment(static_cast<Eigen::Index>(k) * block, block));
  return out;
}

}  // namespace nrto

#endif  // NRTO_TYPES_HPP
