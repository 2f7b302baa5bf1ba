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

#ifndef NRTO_SCENARIO_HPP
#define NRTO_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nrto/conic.hpp"
#include "nrto/constraints.hpp"
#include "nrto/models.hpp"
#include "nrto/sco.hpp"
#include "nrto/uncertainty.hpp"

namespace nrto {

/// Schema or validation failure. `field` is a dotted path such as
/// "constraints.obstacles[1].radius"; `line` is 1-based, 0 when unknown.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& field, int line, const std::string& message);

  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

/// Cost weight given as one scalar (times identity), one matrix for every
/// step, or one matrix per step. The written form is kept for round trips.
struct WeightSpec {
  enum class Form { kScalar, kMatrix, kPerStep };
  Form form = Form::kScalar;
  double scalar = 1.0;
  MatSeq matrices;

  MatSeq expand(int horizon, int dim) const;
};

struct TerminalBoxSpec {
  std::vector<int> indices;
  Vec lower;
  Vec upper;
};

struct LinearRowSpec {
  int timestep = 0;
  Vec coeff;
  double bound = 0.0;
  std::string label;
};

struct MonteCarloSpec {
  int samples = 1000;
  std::uint64_t seed = 7;
  bool boundary = false;      // validation sampling
  int fit_samples = 1500;
  bool fit_boundary = true;   // error-set fitting sampling
  double inflation = 1.1;
};

struct Scenario {
  std::string name;
  std::string description;

  std::string model_name;
  double dt = 0.0;
  ModelParams model_params;
  int horizon = 0;
  Vec x0;

  WeightSpec R_u;
  WeightSpec R_K;

  double tau = 0.0;
  int n_z = 0;
  std::uint64_t gamma_seed = 1;
  std::optional<Mat> gamma;  // explicit Gamma overrides n_z / gamma_seed
  std::optional<Mat> S;      // empty: identity

  std::vector<Obstacle> obstacles;
  int px = 0;
  int py = 1;
  std::optional<TerminalBoxSpec> terminal_box;
  std::vector<LinearRowSpec> linear;
  std::optional<ControlBounds> control_bounds;

  OuterParams solver;
  std::string init = "zeros";  // "zeros" or "steer"
  std::optional<Eigen::Vector2d> steer_goal;
  ConicSettings conic;

  Mode mode = Mode::kNrto;
  MonteCarloSpec monte_carlo;
};

/// Parses and validates; `source` names the input in error messages.
Scenario parse_scenario_text(const std::string& text, const std::string& source = "<scenario>");
Scenario parse_scenario_file(const std::string& path);

/// Every field, defaults included. parse(serialize(s)) reproduces s.
nlohmann::ordered_json scenario_to_json(const Scenario& s);
std::string serialize_scenario(const Scenario& s);

/// Semantic checks on an assembled scenario (dimensions, tau >= 0, S SPD, ...).
void validate_scenario(const Scenario& s);

ModelPtr build_model(const Scenario& s);
UncertaintySet build_uncertainty(const Scenario& s);
ConstraintSet build_constraints(const Scenario& s, int n_x);
/// Model, constraints, uncertainty, weights, solver settings and initial guess.
Problem build_problem(const Scenario& s);

}  // namespace nrto

#endif  // NRTO_SCENARIO_HPP
