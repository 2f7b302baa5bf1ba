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

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nrto/pipeline.hpp"
#include "nrto/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Robust trajectory optimization under ellipsoidal disturbances"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "Solve a scenario, validate it by Monte-Carlo and write artifacts");
  std::string scenario_path;
  std::string manifest_path;
  std::string mode;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::string sweep;
  std::optional<double> gate;
  nrto::RunOptions options;
  auto* scen_opt = run->add_option("--scenario", scenario_path, "Scenario JSON file")->check(CLI::ExistingFile);
  auto* man_opt = run->add_option("--manifest", manifest_path, "Re-run the scenario recorded in a manifest.json")
                      ->check(CLI::ExistingFile);
  scen_opt->excludes(man_opt);
  run->add_option("--mode", mode, "nto, nrto or nrto-le (default: the scenario's mode)")
      ->check(CLI::IsMember({"nto", "nrto", "nrto-le"}));
  run->add_option("--samples", samples, "Validation rollouts")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Master seed for disturbance sampling");
  run->add_option("--out-dir", options.out_dir, "Artifact directory")->required();
  run->add_option("--sweep", sweep, "Uncertainty sweep, tau=start:step:stop");
  run->add_flag("--boundary-sampling", options.boundary_sampling, "Validate on the boundary of the uncertainty set");
  run->add_flag("--verbose", options.verbose, "Per-iteration solver log on stderr");
  run->add_flag("--dump-conic", options.dump_conic, "Write every conic program to <out-dir>/conic/");
  run->add_option("--gate", gate, "Exit with status 4 when final satisfaction is below this fraction")
      ->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nrto::kExitValidation;
  }

  if (!manifest_path.empty()) {
    return nrto::execute_manifest(manifest_path, options.out_dir, options.verbose, std::cout, std::cerr);
  }
  if (scenario_path.empty()) {
    std::cerr << "error: validation: one of --scenario or --manifest is required\n";
    return nrto::kExitValidation;
  }
  nrto::Scenario scenario;
  try {
    scenario = nrto::parse_scenario_file(scenario_path);
    if (!mode.empty()) options.mode = nrto::mode_from_string(mode);
    if (!sweep.empty()) options.sweep = nrto::parse_sweep(sweep);
  } catch (const std::exception& e) {
    std::cerr << "error: validation: " << e.what() << "\n";
    return nrto::kExitValidation;
  }
  options.samples = samples;
  options.seed = seed;
  options.gate = gate;
  return nrto::execute_run(scenario, options, std::cout, std::cerr);
}
