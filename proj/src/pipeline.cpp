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

#include "nrto/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace nrto {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ordered_json vec_json(const Vec& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ordered_json mat_json(const Mat& m) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

// Labels in order of first appearance.
std::vector<std::string> unique_labels(const ConstraintSet& cs) {
  std::vector<std::string> labels;
  for (const auto& row : cs.rows()) {
    if (std::find(labels.begin(), labels.end(), row.label) == labels.end()) labels.push_back(row.label);
  }
  return labels;
}

ordered_json phase_stats(const PhaseResult& phase, const ConstraintSet& cs) {
  const SolveLog& log = phase.solve.log;
  ordered_json solve;
  solve["status"] = log.status;
  solve["converged"] = phase.solve.converged;
  solve["outer_iterations"] = log.records.size();
  solve["selected_iteration"] = log.selected_iteration;
  if (log.selected_iteration >= 1 && log.selected_iteration <= static_cast<int>(log.records.size())) {
    const IterationRecord& rec = log.records[static_cast<std::size_t>(log.selected_iteration - 1)];
    solve["delta_u_norm"] = rec.delta_u_norm;
    solve["objective"] = rec.objective;
  }

  const SatisfactionReport& rep = phase.validation.report;
  ordered_json j;
  j["solve"] = solve;
  j["samples"] = rep.samples;
  j["satisfied"] = rep.satisfied;
  j["satisfaction"] = rep.fraction;
  j["worst_violation"] = rep.worst_violation;
  j["worst_sample"] = rep.worst_sample;

  // Per label: number of samples violating any of its rows, and the largest value.
  const auto labels = unique_labels(cs);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = i;
  std::vector<int> violations(labels.size(), 0);
  std::vector<double> worst(labels.size(), -std::numeric_limits<double>::infinity());
  std::vector<char> hit(labels.size());
  for (const auto& rec : phase.validation.records) {
    std::fill(hit.begin(), hit.end(), 0);
    for (int r = 0; r < cs.size(); ++r) {
      const std::size_t l = index[cs.row(r).label];
      const double g = rec.constraint_values(r);
      worst[l] = std::max(worst[l], g);
      if (g > 0.0) hit[l] = 1;
    }
    for (std::size_t l = 0; l < labels.size(); ++l) violations[l] += hit[l];
  }
  ordered_json groups = ordered_json::array();
  for (std::size_t l = 0; l < labels.size(); ++l) {
    groups.push_back({{"label", labels[l]}, {"violations", violations[l]}, {"worst", worst[l]}});
  }
  j["constraints"] = groups;
  return j;
}

ordered_json options_json(const RunOptions& o) {
  ordered_json j;
  j["sweep"] = o.sweep ? ordered_json(o.sweep->to_string()) : ordered_json(nullptr);
  j["gate"] = o.gate ? ordered_json(*o.gate) : ordered_json(nullptr);
  j["verbose"] = o.verbose;
  j["dump_conic"] = o.dump_conic;
  return j;
}

std::string tau_dir(double tau) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "tau_%.6g", tau);
  return buf;
}

struct Artifacts {
  std::vector<std::string> written;

  void write(const fs::path& dir, const std::string& name, const std::string& content, const fs::path& root) {
    write_file_atomic((dir / name).string(), content);
    written.push_back(fs::relative(dir / name, root).generic_string());
  }
};

std::string dump_json(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json solve_logs(const RunOutcome& o) {
  ordered_json j;
  if (o.baseline) j[to_string(Mode::kNrto)] = solve_log_json(o.baseline->solve.log);
  j[to_string(o.scenario.mode)] = solve_log_json(o.final_phase.solve.log);
  return j;
}

void write_outcome(const RunOutcome& o, const fs::path& dir, const fs::path& root, Artifacts& art) {
  fs::create_directories(dir);
  const ConstraintSet cs = build_constraints(o.scenario, build_model(o.scenario)->state_dim());
  art.write(dir, "policy.json", dump_json(policy_json(o.final_phase.solve.policy)), root);
  art.write(dir, "solve_log.json", dump_json(solve_logs(o)), root);
  art.write(dir, "rollouts.csv", rollouts_csv(o.final_phase.validation, cs), root);
  if (o.baseline) {
    art.write(dir, "policy_nrto.json", dump_json(policy_json(o.baseline->solve.policy)), root);
    art.write(dir, "rollouts_nrto.csv", rollouts_csv(o.baseline->validation, cs), root);
    art.write(dir, "error_sets.json", dump_json(error_sets_json(o.error_sets)), root);
  }
  art.write(dir, "stats.json", dump_json(stats_json(o)), root);
}

}  // namespace

std::vector<double> SweepSpec::values() const {
  if (!(step > 0.0) || stop < start) throw std::invalid_argument("sweep: need step > 0 and stop >= start");
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> v;
  for (long i = 0; i < n; ++i) v.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
  return v;
}

namespace {
// Shortest decimal that parses back to the same double.
std::string shortest(double v) {
  char buf[40];
  for (int p = 1; p <= 17; ++p) {
    std::snprintf(buf, sizeof(buf), "%.*g", p, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}
}  // namespace

std::string SweepSpec::to_string() const {
  return "tau=" + shortest(start) + ":" + shortest(step) + ":" + shortest(stop);
}

SweepSpec parse_sweep(const std::string& text) {
  const std::string prefix = "tau=";
  if (text.rfind(prefix, 0) != 0) throw std::invalid_argument("sweep: expected tau=start:step:stop, got '" + text + "'");
  std::stringstream ss(text.substr(prefix.size()));
  std::string part;
  std::vector<double> nums;
  while (std::getline(ss, part, ':')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size()) throw std::invalid_argument("sweep: bad number '" + part + "'");
    nums.push_back(v);
  }
  if (nums.size() != 3) throw std::invalid_argument("sweep: expected tau=start:step:stop, got '" + text + "'");
  SweepSpec s{nums[0], nums[1], nums[2]};
  if (s.start < 0.0) throw std::invalid_argument("sweep: tau must be non-negative");
  s.values();
  return s;
}

Scenario apply_overrides(Scenario s, const RunOptions& o) {
  if (o.mode) s.mode = *o.mode;
  s.solver.mode = s.mode;
  if (o.samples) s.monte_carlo.samples = *o.samples;
  if (o.seed) s.monte_carlo.seed = *o.seed;
  if (o.boundary_sampling) s.monte_carlo.boundary = true;
  validate_scenario(s);
  return s;
}

RunOutcome run_scenario(const Scenario& s, std::ostream* log, ConicDump dump) {
  RunOutcome out;
  out.scenario = s;
  Problem pb = build_problem(s);
  pb.log = log;
  pb.dump = std::move(dump);
  const MonteCarloSpec& mc = s.monte_carlo;
  const DynamicsModel& model = *pb.model;
  const std::vector<Vec> zetas = draw_disturbances(pb.uncertainty, mc.samples, mc.seed, SampleStream::kValidation,
                                                   mc.boundary);
  if (s.mode != Mode::kNrtoLe) {
    OptimizeResult res = optimize(pb);
    MonteCarloResult val = run_monte_carlo(model, res.policy, pb.constraints, zetas);
    out.final_phase = PhaseResult{std::move(res), std::move(val)};
    return out;
  }

  Problem first = pb;
  first.params.mode = Mode::kNrto;
  if (log != nullptr) *log << "phase nrto\n";
  OptimizeResult base = optimize(first);

  const std::vector<Vec> fit = draw_disturbances(pb.uncertainty, mc.fit_samples, mc.seed, SampleStream::kFit,
                                                 mc.fit_boundary);
  MatSeq A, B;
  linearize_along(model, base.policy.nominal, A, B);
  const StackedBlocks blocks = build_blocks(A, B);
  out.error_sets = fit_error_ellipsoids(collect_linearization_errors(model, base.policy, blocks, fit), mc.inflation);

  Problem second = pb;
  second.params.mode = Mode::kNrtoLe;
  second.error_sets = out.error_sets;
  second.u_init = base.policy.u_bar;
  if (log != nullptr) *log << "phase nrto-le\n";
  OptimizeResult fin = optimize(second);

  MonteCarloResult base_val = run_monte_carlo(model, base.policy, pb.constraints, zetas);
  MonteCarloResult fin_val = run_monte_carlo(model, fin.policy, pb.constraints, zetas);
  out.baseline = PhaseResult{std::move(base), std::move(base_val)};
  out.final_phase = PhaseResult{std::move(fin), std::move(fin_val)};
  return out;
}

ordered_json stats_json(const RunOutcome& o) {
  const Scenario& s = o.scenario;
  const ConstraintSet cs = build_constraints(s, build_model(s)->state_dim());
  ordered_json j;
  j["scenario"] = s.name;
  j["mode"] = to_string(s.mode);
  j["tau"] = s.tau;
  j["n_z"] = s.n_z;
  j["samples"] = s.monte_carlo.samples;
  j["seed"] = s.monte_carlo.seed;
  j["boundary_sampling"] = s.monte_carlo.boundary;
  j["satisfaction"] = o.final_phase.validation.report.fraction;
  j["final"] = phase_stats(o.final_phase, cs);
  if (o.baseline) {
    j["baseline_mode"] = to_string(Mode::kNrto);
    j["baseline_satisfaction"] = o.baseline->validation.report.fraction;
    j["baseline"] = phase_stats(*o.baseline, cs);
    double max_level = 0.0;
    for (const auto& e : o.error_sets) max_level = std::max(max_level, e.level);
    j["error_sets"] = {{"fit_samples", s.monte_carlo.fit_samples},
                       {"fit_boundary", s.monte_carlo.fit_boundary},
                       {"inflation", s.monte_carlo.inflation},
                       {"max_level", max_level}};
  }
  return j;
}

ordered_json policy_json(const Policy& p) {
  ordered_json j;
  j["horizon"] = p.horizon();
  j["n_x"] = p.nominal.states.empty() ? 0 : p.nominal.states.front().size();
  j["n_u"] = p.u_bar.empty() ? 0 : p.u_bar.front().size();
  ordered_json u = ordered_json::array();
  for (const auto& v : p.u_bar) u.push_back(vec_json(v));
  j["u_bar"] = u;
  ordered_json k = ordered_json::array();
  for (const auto& m : p.gains) k.push_back(mat_json(m));
  j["gains"] = k;
  ordered_json x = ordered_json::array();
  for (const auto& v : p.nominal.states) x.push_back(vec_json(v));
  j["nominal_states"] = x;
  return j;
}

ordered_json solve_log_json(const SolveLog& log) {
  ordered_json j;
  j["status"] = log.status;
  j["selected_iteration"] = log.selected_iteration;
  ordered_json recs = ordered_json::array();
  for (const auto& r : log.records) {
    recs.push_back({{"iteration", r.iteration},
                    {"path", r.path},
                    {"delta_u_norm", r.delta_u_norm},
                    {"residual", r.residual},
                    {"r_trust", r.r_trust},
                    {"rho", r.rho},
                    {"inner_iterations", r.inner_iterations},
                    {"objective", r.objective}});
  }
  j["iterations"] = recs;
  return j;
}

ordered_json error_sets_json(const std::vector<ErrorEllipsoid>& sets) {
  ordered_json a = ordered_json::array();
  for (std::size_t k = 0; k < sets.size(); ++k) {
    a.push_back({{"timestep", k},
                 {"center", vec_json(sets[k].center)},
                 {"shape", mat_json(sets[k].shape)},
                 {"level", sets[k].level}});
  }
  return a;
}

std::string rollouts_csv(const MonteCarloResult& mc, const ConstraintSet& cs) {
  const auto labels = unique_labels(cs);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < labels.size(); ++i) col[labels[i]] = i;
  const int T = cs.horizon();
  // rows_at[t][c]: row index of label c at timestep t, or -1.
  std::vector<std::vector<int>> rows_at(static_cast<std::size_t>(T + 1), std::vector<int>(labels.size(), -1));
  for (int r = 0; r < cs.size(); ++r) {
    rows_at[static_cast<std::size_t>(cs.row(r).timestep)][col[cs.row(r).label]] = r;
  }

  std::ostringstream os;
  const int n_x = cs.n_x();
  const int n_u = mc.records.empty() || mc.records.front().controls.empty()
                      ? 0
                      : static_cast<int>(mc.records.front().controls.front().size());
  os << "sample,t";
  for (int i = 0; i < n_x; ++i) os << ",x" << i;
  for (int i = 0; i < n_u; ++i) os << ",u" << i;
  for (const auto& l : labels) os << ",g_" << l;
  os << "\n";
  for (std::size_t s = 0; s < mc.records.size(); ++s) {
    const RolloutRecord& rec = mc.records[s];
    for (int t = 0; t <= T; ++t) {
      os << s << "," << t;
      const Vec& x = rec.states[static_cast<std::size_t>(t)];
      for (int i = 0; i < n_x; ++i) os << "," << fmt17(x(i));
      for (int i = 0; i < n_u; ++i) {
        os << ",";
        if (t < T) os << fmt17(rec.controls[static_cast<std::size_t>(t)](i));
      }
      for (std::size_t c = 0; c < labels.size(); ++c) {
        os << ",";
        const int r = rows_at[static_cast<std::size_t>(t)][c];
        if (r >= 0) os << fmt17(rec.constraint_values(r));
      }
      os << "\n";
    }
  }
  return os.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + tmp + "'");
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

int execute_run(const Scenario& scenario, const RunOptions& options, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  Scenario eff;
  std::vector<double> taus;
  try {
    eff = apply_overrides(scenario, options);
    if (options.sweep) taus = options.sweep->values();
  } catch (const std::exception& e) {
    err << "error: validation: " << e.what() << "\n";
    return kExitValidation;
  }

  const fs::path root(options.out_dir);
  ordered_json manifest;
  manifest["tool"] = "nrto";
  manifest["version"] = kVersion;
  manifest["scenario"] = scenario_to_json(eff);
  manifest["options"] = options_json(options);
  manifest["status"] = "running";
  manifest["partial"] = true;
  manifest["artifacts"] = ordered_json::array();
  Artifacts art;
  auto write_manifest = [&]() {
    manifest["artifacts"] = art.written;
    manifest["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_file_atomic((root / "manifest.json").string(), dump_json(manifest));
  };

  std::ostream* log = options.verbose ? &err : nullptr;
  int dump_counter = 0;
  ConicDump dump;
  if (options.dump_conic) {
    dump = [&](const std::string& name, const ConicProgram& prog) {
      const fs::path dir = root / "conic";
      fs::create_directories(dir);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%05d_", dump_counter++);
      std::ofstream f(dir / (std::string(buf) + name + ".txt"));
      dump_program(prog, f);
    };
  }

  double gate_value = 1.0;
  try {
    fs::create_directories(root);
    write_manifest();
    if (!options.sweep) {
      const RunOutcome o = run_scenario(eff, log, dump);
      write_outcome(o, root, root, art);
      gate_value = o.final_phase.validation.report.fraction;
      out << to_string(eff.mode) << " tau " << eff.tau << " satisfaction " << gate_value << " ("
          << o.final_phase.validation.report.satisfied << "/" << o.final_phase.validation.report.samples << ")";
      if (o.baseline) out << " nrto " << o.baseline->validation.report.fraction;
      out << " solve " << o.final_phase.solve.log.status << "\n";
    } else {
      ordered_json rows = ordered_json::array();
      for (double tau : taus) {
        Scenario s = eff;
        s.tau = tau;
        const RunOutcome o = run_scenario(s, log, dump);
        write_outcome(o, root / tau_dir(tau), root, art);
        ordered_json row;
        row["tau"] = tau;
        row["directory"] = tau_dir(tau);
        row["mode"] = to_string(s.mode);
        row["satisfaction"] = o.final_phase.validation.report.fraction;
        row["converged"] = o.final_phase.solve.converged;
        if (o.baseline) {
          row["baseline_satisfaction"] = o.baseline->validation.report.fraction;
          row["baseline_converged"] = o.baseline->solve.converged;
        }
        rows.push_back(row);
        gate_value = std::min(gate_value, o.final_phase.validation.report.fraction);
        out << to_string(s.mode) << " tau " << tau << " satisfaction " << o.final_phase.validation.report.fraction;
        if (o.baseline) out << " nrto " << o.baseline->validation.report.fraction;
        out << "\n";
      }
      ordered_json stats;
      stats["scenario"] = eff.name;
      stats["sweep"] = options.sweep->to_string();
      stats["samples"] = eff.monte_carlo.samples;
      stats["seed"] = eff.monte_carlo.seed;
      stats["rows"] = rows;
      art.write(root, "stats.json", dump_json(stats), root);
    }
  } catch (const OptimizeError& e) {
    err << "error: solver: " << e.what() << "\n";
    try {
      write_file_atomic((root / "solve_log.json").string(), dump_json(solve_log_json(e.log())));
      art.written.push_back("solve_log.json");
      manifest["status"] = "failed";
      manifest["error"] = {{"stage", "solve"}, {"message", e.what()}};
      write_manifest();
    } catch (const std::exception&) {
    }
    return kExitSolver;
  } catch (const ModelDomainError& e) {
    err << "error: model: " << e.what() << "\n";
    manifest["status"] = "failed";
    manifest["error"] = {{"stage", "model"}, {"message", e.what()}};
    try {
      write_manifest();
    } catch (const std::exception&) {
    }
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    manifest["status"] = "failed";
    manifest["error"] = {{"stage", "run"}, {"message", e.what()}};
    try {
      write_manifest();
    } catch (const std::exception&) {
    }
    return kExitInternal;
  }

  manifest["status"] = "complete";
  manifest["partial"] = false;
  int code = kExitOk;
  if (options.gate) {
    const bool passed = gate_value >= *options.gate;
    manifest["gate"] = {{"threshold", *options.gate}, {"value", gate_value}, {"passed", passed}};
    if (!passed) {
      err << "gate failed: satisfaction " << gate_value << " < " << *options.gate << "\n";
      code = kExitGate;
    }
  }
  write_manifest();
  return code;
}

int execute_manifest(const std::string& manifest_path, const std::string& out_dir, bool verbose, std::ostream& out,
                     std::ostream& err) {
  Scenario scenario;
  RunOptions options;
  try {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest '" + manifest_path + "'");
    const nlohmann::json m = nlohmann::json::parse(in);
    scenario = parse_scenario_text(m.at("scenario").dump(2), manifest_path + ":scenario");
    const auto& o = m.at("options");
    if (o.contains("sweep") && !o.at("sweep").is_null()) options.sweep = parse_sweep(o.at("sweep").get<std::string>());
    if (o.contains("gate") && !o.at("gate").is_null()) options.gate = o.at("gate").get<double>();
  } catch (const std::exception& e) {
    err << "error: validation: " << e.what() << "\n";
    return kExitValidation;
  }
  options.out_dir = out_dir;
  options.verbose = verbose;
  return execute_run(scenario, options, out, err);
}

}  // namespace nrto
