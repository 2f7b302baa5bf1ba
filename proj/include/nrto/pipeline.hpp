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

#ifndef NRTO_PIPELINE_HPP
#define NRTO_PIPELINE_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nrto/monte.hpp"
#include "nrto/scenario.hpp"
#include "nrto/sco.hpp"

namespace nrto {

/// Exit codes of the command-line runner.
enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitSolver = 3, kExitGate = 4, kExitInternal = 1 };

/// "tau=start:step:stop", inclusive of stop up to rounding.
struct SweepSpec {
  double start = 0.0;
  double step = 0.0;
  double stop = 0.0;

  std::vector<double> values() const;
  std::string to_string() const;
};

/// Throws std::invalid_argument on malformed text.
SweepSpec parse_sweep(const std::string& text);

/// Command-line overrides applied on top of a scenario file.
struct RunOptions {
  std::optional<Mode> mode;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  bool boundary_sampling = false;
  std::optional<SweepSpec> sweep;
  std::optional<double> gate;  // minimum final satisfaction fraction
  std::string out_dir = ".";
  bool verbose = false;
  bool dump_conic = false;
};

Scenario apply_overrides(Scenario s, const RunOptions& options);

struct PhaseResult {
  OptimizeResult solve;
  MonteCarloResult validation;
};

/// Result of one scenario run. In nrto-le mode `baseline` holds the NRTO
/// phase, validated on the same disturbance samples as the final policy.
struct RunOutcome {
  Scenario scenario;
  PhaseResult final_phase;
  std::optional<PhaseResult> baseline;
  std::vector<ErrorEllipsoid> error_sets;
};

using ConicDump = std::function<void(const std::string&, const ConicProgram&)>;

/// Solve, validate and, in nrto-le mode, fit error sets and re-solve.
/// Throws OptimizeError when an inner solve fails.
RunOutcome run_scenario(const Scenario& s, std::ostream* log = nullptr, ConicDump dump = nullptr);

nlohmann::ordered_json stats_json(const RunOutcome& outcome);
nlohmann::ordered_json policy_json(const Policy& policy);
nlohmann::ordered_json solve_log_json(const SolveLog& log);
nlohmann::ordered_json error_sets_json(const std::vector<ErrorEllipsoid>& sets);

/// One line per (sample, timestep): states, controls (empty at T) and the
/// value of every constraint row acting at that step. 17 significant digits.
std::string rollouts_csv(const MonteCarloResult& mc, const ConstraintSet& cs);

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

/// Runs the scenario (or sweep), writes every artifact into options.out_dir
/// and returns an ExitCode. Errors are reported on `err`.
int execute_run(const Scenario& scenario, const RunOptions& options, std::ostream& out, std::ostream& err);

/// Re-runs the scenario and options recorded in a manifest.
int execute_manifest(const std::string& manifest_path, const std::string& out_dir, bool verbose, std::ostream& out,
                     std::ostream& err);

}  // namespace nrto

#endif  // NRTO_PIPELINE_HPP
