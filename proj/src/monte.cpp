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

#include "nrto/monte.hpp"

#include <stdexcept>

namespace nrto {

Policy Policy::make(const DynamicsModel& model, const Vec& x0, VecSeq u_bar, MatSeq gains) {
  if (u_bar.size() != gains.size()) throw std::invalid_argument("Policy: one gain per control step is required");
  for (const auto& K : gains) {
    if (K.rows() != model.control_dim() || K.cols() != model.state_dim()) {
      throw std::invalid_argument("Policy: gain has the wrong shape");
    }
  }
  Policy p;
  p.nominal = rollout(model, x0, u_bar);
  p.u_bar = std::move(u_bar);
  p.gains = std::move(gains);
  return p;
}

RolloutRecord simulate_closed_loop(const DynamicsModel& model, const Policy& policy, const Vec& zeta,
                                   const Vec& x_bar0) {
  const int T = policy.horizon();
  const int n_x = model.state_dim();
  if (zeta.size() != (T + 1) * n_x) throw std::invalid_argument("simulate_closed_loop: zeta has the wrong length");
  if (x_bar0.size() != n_x) throw std::invalid_argument("simulate_closed_loop: x_bar0 has the wrong length");
  RolloutRecord r;
  r.zeta = zeta;
  r.states.reserve(T + 1);
  r.controls.reserve(T);
  r.reconstructed.reserve(T + 1);
  r.states.push_back(x_bar0 + zeta.head(n_x));
  // The controller only sees states: d0_bar = x_0 - x0_bar, d_{k-1} = x_k - f(x_{k-1}, u_{k-1}).
  r.reconstructed.push_back(r.states[0] - x_bar0);
  for (int k = 0; k < T; ++k) {
    const Vec u = policy.u_bar[k] + policy.gains[k] * r.reconstructed[k];
    Vec predicted;
    try {
      predicted = model.step(r.states[k], u);
    } catch (const ModelDomainError& e) {
      throw ModelDomainError(e.what(), k);
    }
    const Vec next = predicted + zeta.segment((k + 1) * n_x, n_x);
    r.controls.push_back(u);
    r.states.push_back(next);
    r.reconstructed.push_back(next - predicted);
  }
  return r;
}

VecSeq linearization_errors(const RolloutRecord& record, const Policy& policy, const StackedBlocks& blocks) {
  const int T = policy.horizon();
  const int n_x = blocks.n_x;
  const Vec dx = stacked_response(blocks, policy.gain_matrix(), Vec::Zero(blocks.Fu.cols()), record.zeta);
  VecSeq out;
  out.reserve(T + 1);
  for (int k = 0; k <= T; ++k) out.push_back(record.states[k] - policy.nominal.states[k] - dx.segment(k * n_x, n_x));
  return out;
}

std::vector<std::vector<Vec>> collect_linearization_errors(const DynamicsModel& model, const Policy& policy,
                                                           const StackedBlocks& blocks,
                                                           const std::vector<Vec>& zetas) {
  std::vector<std::vector<Vec>> out(policy.horizon() + 1);
  for (auto& v : out) v.reserve(zetas.size());
  const Vec& x0 = policy.nominal.states.front();
  for (const auto& z : zetas) {
    const RolloutRecord r = simulate_closed_loop(model, policy, z, x0);
    const VecSeq e = linearization_errors(r, policy, blocks);
    for (std::size_t k = 0; k < e.size(); ++k) out[k].push_back(e[k]);
  }
  return out;
}

SatisfactionReport evaluate_satisfaction(const std::vector<RolloutRecord>& records, const ConstraintSet& cs) {
  if (records.empty()) throw std::invalid_argument("evaluate_satisfaction: no rollouts");
  SatisfactionReport rep;
  rep.samples = static_cast<int>(records.size());
  rep.row_violations.assign(cs.size(), 0);
  rep.row_worst.assign(cs.size(), -std::numeric_limits<double>::infinity());
  rep.worst_violation = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < rep.samples; ++s) {
    const auto& r = records[s];
    const Vec g = r.constraint_values.size() == cs.size() ? r.constraint_values : cs.evaluate(stack(r.states));
    bool ok = true;
    for (int j = 0; j < cs.size(); ++j) {
      if (g(j) > 0.0) {
        ok = false;
        ++rep.row_violations[j];
      }
      rep.row_worst[j] = std::max(rep.row_worst[j], g(j));
      if (g(j) > rep.worst_violation) {
        rep.worst_violation = g(j);
        rep.worst_sample = s;
      }
    }
    if (ok) ++rep.satisfied;
  }
  rep.fraction = static_cast<double>(rep.satisfied) / rep.samples;
  return rep;
}

std::mt19937_64 substream(std::uint64_t master, SampleStream stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master & 0xffffffffu), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index & 0xffffffffu),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::vector<Vec> draw_disturbances(const UncertaintySet& set, int count, std::uint64_t seed, SampleStream stream,
                                   bool boundary) {
  if (count < 0) throw std::invalid_argument("draw_disturbances: negative count");
  std::vector<Vec> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    auto rng = substream(seed, stream, static_cast<std::uint64_t>(i));
    out.push_back(set.sample(rng, boundary));
  }
  return out;
}

MonteCarloResult run_monte_carlo(const DynamicsModel& model, const Policy& policy, const ConstraintSet& cs,
                                 const std::vector<Vec>& zetas) {
  MonteCarloResult mc;
  mc.records.reserve(zetas.size());
  const Vec& x0 = policy.nominal.states.front();
  for (const auto& z : zetas) {
    RolloutRecord r = simulate_closed_loop(model, policy, z, x0);
    r.constraint_values = cs.evaluate(stack(r.states));
    mc.records.push_back(std::move(r));
  }
  mc.report = evaluate_satisfaction(mc.records, cs);
  return mc;
}

LinearizedRowCheck check_linearized_rows(const Policy& policy, const StackedBlocks& blocks,
                                         const LinearizedConstraintData& lin, const std::vector<Vec>& zetas,
                                         double tolerance) {
  LinearizedRowCheck c;
  const PolicyMatrix K = policy.gain_matrix();
  const Vec du = Vec::Zero(blocks.Fu.cols());
  for (const auto& z : zetas) {
    const Vec g = lin.g_hat + lin.grad * stacked_response(blocks, K, du, z);
    const double worst = g.size() ? g.maxCoeff() : -std::numeric_limits<double>::infinity();
    c.worst = std::max(c.worst, worst);
    ++c.samples;
    if (worst <= tolerance) ++c.satisfied;
  }
  return c;
}

}  // namespace nrto
