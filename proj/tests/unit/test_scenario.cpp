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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "nrto/scenario.hpp"

namespace nrto {
namespace {

const char* kMinimal = R"({
  "model": {"name": "unicycle", "dt": 0.1},
  "horizon": 4,
  "x0": [0, 0, 0],
  "uncertainty": {"tau": 0.01, "n_z": 2}
})";

// Parses `text` and returns the error; fails the test when parsing succeeds.
ScenarioError parse_error(const std::string& text) {
  try {
    parse_scenario_text(text, "case.json");
  } catch (const ScenarioError& e) {
    return e;
  }
  ADD_FAILURE() << "expected a ScenarioError";
  return ScenarioError("", 0, "");
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto p = text.find(from);
  EXPECT_NE(p, std::string::npos) << from;
  if (p != std::string::npos) text.replace(p, from.size(), to);
  return text;
}

TEST(Scenario, MinimalFileTakesDefaults) {
  const Scenario s = parse_scenario_text(kMinimal);
  EXPECT_EQ(s.model_name, "unicycle");
  EXPECT_EQ(s.horizon, 4);
  EXPECT_EQ(s.mode, Mode::kNrto);
  EXPECT_EQ(s.init, "zeros");
  EXPECT_EQ(s.gamma_seed, 1u);
  EXPECT_FALSE(s.S);
  EXPECT_FALSE(s.terminal_box);
  EXPECT_TRUE(s.obstacles.empty());
  EXPECT_EQ(s.monte_carlo.samples, 1000);
  EXPECT_EQ(s.monte_carlo.seed, 7u);
  EXPECT_FALSE(s.monte_carlo.boundary);
  EXPECT_DOUBLE_EQ(s.solver.r_min, OuterParams{}.r_min);
  EXPECT_EQ(s.R_u.form, WeightSpec::Form::kScalar);
  EXPECT_DOUBLE_EQ(s.R_u.scalar, 1.0);

  const Problem pb = build_problem(s);
  EXPECT_EQ(pb.horizon(), 4);
  EXPECT_EQ(pb.uncertainty.zeta_dim(), 15);
  EXPECT_EQ(pb.uncertainty.n_z(), 2);
  EXPECT_TRUE(pb.u_init.empty());
  EXPECT_EQ(pb.R_u.size(), 4u);
}

TEST(Scenario, GammaFollowsTheSeed) {
  const Scenario a = parse_scenario_text(kMinimal);
  const Scenario b = parse_scenario_text(replace(kMinimal, "\"n_z\": 2", "\"n_z\": 2, \"gamma_seed\": 9"));
  EXPECT_EQ(build_uncertainty(a).gamma(), build_uncertainty(parse_scenario_text(kMinimal)).gamma());
  EXPECT_NE(build_uncertainty(a).gamma(), build_uncertainty(b).gamma());
  EXPECT_LE(build_uncertainty(a).gamma().cwiseAbs().maxCoeff(), 1.0);
}

TEST(Scenario, NegativeTauIsRejected) {
  const auto e = parse_error(replace(kMinimal, "0.01", "-0.5"));
  EXPECT_EQ(e.field(), "uncertainty.tau");
  EXPECT_EQ(e.line(), 5);
}

TEST(Scenario, IndefiniteShapeIsRejected) {
  const auto e = parse_error(replace(kMinimal, "\"n_z\": 2", "\"n_z\": 2, \"S\": [[1, 0], [0, -1]]"));
  EXPECT_EQ(e.field(), "uncertainty.S");
  const auto asym = parse_error(replace(kMinimal, "\"n_z\": 2", "\"n_z\": 2, \"S\": [[1, 0.5], [0, 1]]"));
  EXPECT_EQ(asym.field(), "uncertainty.S");
}

TEST(Scenario, ErrorsNameFieldAndLine) {
  const std::string text = replace(kMinimal, "\"horizon\": 4,", R"("horizon": 4,
  "constraints": {
    "obstacles": [
      {"center": [1, 1], "radius": 0.5},
      {"center": [2, 2], "radius": "big"}
    ]
  },)");
  const auto e = parse_error(text);
  EXPECT_EQ(e.field(), "constraints.obstacles[1].radius");
  EXPECT_GT(e.line(), 0);
  EXPECT_NE(std::string(e.what()).find("case.json"), std::string::npos);
  EXPECT_NE(std::string(e.what()).find("constraints.obstacles[1].radius"), std::string::npos);
}

TEST(Scenario, UnknownFieldsAreRejected) {
  EXPECT_EQ(parse_error(replace(kMinimal, "\"horizon\": 4", "\"horizon\": 4, \"horizn\": 5")).field(), "horizn");
  EXPECT_EQ(parse_error(replace(kMinimal, "\"dt\": 0.1", "\"dt\": 0.1, \"mass\": 2")).field(), "model.mass");
}

TEST(Scenario, MissingAndMistypedFields) {
  EXPECT_EQ(parse_error(replace(kMinimal, "\"horizon\": 4,", "")).field(), "horizon");
  EXPECT_EQ(parse_error(replace(kMinimal, "\"horizon\": 4", "\"horizon\": 4.5")).field(), "horizon");
  EXPECT_EQ(parse_error(replace(kMinimal, "[0, 0, 0]", "[0, 0]")).field(), "x0");
  EXPECT_EQ(parse_error(replace(kMinimal, "unicycle", "bicycle")).field(), "model.name");
  EXPECT_EQ(parse_error(replace(kMinimal, "\"horizon\": 4", "\"horizon\": 4, \"mode\": \"fast\"")).field(), "mode");
}

TEST(Scenario, MalformedJsonReportsALine) {
  const auto e = parse_error("{\n  \"horizon\": 4,\n  oops\n}");
  EXPECT_EQ(e.line(), 3);
}

TEST(Scenario, BadConstraintGeometry) {
  auto with = [&](const std::string& cons) {
    return parse_error(replace(kMinimal, "\"horizon\": 4,", "\"horizon\": 4, \"constraints\": " + cons + ","));
  };
  EXPECT_EQ(with(R"({"terminal_box": {"indices": [7], "lower": [0], "upper": [1]}})").field(),
            "constraints.terminal_box.indices");
  EXPECT_EQ(with(R"({"terminal_box": {"indices": [0], "lower": [2], "upper": [1]}})").field(),
            "constraints.terminal_box");
  EXPECT_EQ(with(R"({"control_bounds": {"lower": [0], "upper": [1]}})").field(), "constraints.control_bounds.lower");
}

TEST(Scenario, NullControlBoundIsUnbounded) {
  const Scenario s = parse_scenario_text(replace(
      kMinimal, "\"horizon\": 4,",
      R"("horizon": 4, "constraints": {"control_bounds": {"lower": [-1, null], "upper": [1, null]}},)"));
  ASSERT_TRUE(s.control_bounds);
  EXPECT_EQ(s.control_bounds->lower(0), -1.0);
  EXPECT_EQ(s.control_bounds->lower(1), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(s.control_bounds->upper(1), std::numeric_limits<double>::infinity());
  const Scenario again = parse_scenario_text(serialize_scenario(s));
  EXPECT_EQ(again.control_bounds->upper(1), std::numeric_limits<double>::infinity());
}

TEST(Scenario, RoundTripIsStable) {
  const std::string full = R"({
    "name": "rt", "description": "round trip",
    "model": {"name": "car", "dt": 0.03, "params": {"c_len": 0.8, "car_formula": "standard"}},
    "horizon": 3, "x0": [0, 0, 0, 0.5],
    "costs": {"R_u": [[2, 0], [0, 1]], "R_K": [[[1, 0], [0, 1]], [[2, 0], [0, 2]], [[3, 0], [0, 3]]]},
    "uncertainty": {"tau": 0.02, "n_z": 2, "gamma_seed": 5, "S": [[2, 0], [0, 1]]},
    "constraints": {
      "obstacles": [{"center": [1, 0.5], "radius": 0.25}],
      "terminal_box": {"indices": [0, 2], "lower": [0.5, -1], "upper": [1.5, 1]},
      "linear": [{"timestep": 2, "coeff": [0, 1, 0, 0], "bound": 0.4, "label": "lane"}],
      "control_bounds": {"lower": [-0.5, -3], "upper": [0.5, 3]}
    },
    "solver": {"r_min": 1e-6, "max_outer": 20, "init": "steer", "steer_goal": [1, 0], "conic": {"tol_target": 1e-8}},
    "mode": "nrto-le",
    "monte_carlo": {"samples": 10, "seed": 3, "boundary": true, "fit_samples": 20, "fit_boundary": false,
                    "inflation": 1.3}
  })";
  const Scenario s = parse_scenario_text(full);
  const std::string once = serialize_scenario(s);
  const Scenario t = parse_scenario_text(once);
  EXPECT_EQ(serialize_scenario(t), once);
  EXPECT_EQ(t.R_K.form, WeightSpec::Form::kPerStep);
  EXPECT_EQ(t.linear.at(0).label, "lane");
  EXPECT_EQ(t.mode, Mode::kNrtoLe);
  EXPECT_EQ(t.solver.mode, Mode::kNrtoLe);
  EXPECT_DOUBLE_EQ(t.monte_carlo.inflation, 1.3);
  EXPECT_EQ(t.model_params.strings.at("car_formula"), "standard");
  EXPECT_EQ(build_uncertainty(s).gamma(), build_uncertainty(t).gamma());
}

TEST(Scenario, WeightExpansion) {
  WeightSpec w;
  w.scalar = 2.0;
  const MatSeq e = w.expand(3, 2);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[1], 2.0 * Mat::Identity(2, 2));
  w.form = WeightSpec::Form::kMatrix;
  w.matrices = {(Mat(2, 2) << 1, 0, 0, 3).finished()};
  EXPECT_EQ(w.expand(2, 2)[1], w.matrices[0]);
}

TEST(Scenario, ProblemCarriesConstraintsAndSteering) {
  const std::string text = replace(kMinimal, "\"horizon\": 4,", R"("horizon": 4,
    "constraints": {"obstacles": [{"center": [1, 1], "radius": 0.3}],
                    "terminal_box": {"indices": [0, 1], "lower": [1, 1], "upper": [2, 2]}},
    "solver": {"init": "steer", "steer_goal": [1.5, 1.5]},)");
  const Problem pb = build_problem(parse_scenario_text(text));
  EXPECT_EQ(pb.constraints.size(), 5 + 4);
  ASSERT_EQ(pb.u_init.size(), 4u);
  EXPECT_GT(pb.u_init[0](0), 0.0);
  EXPECT_EQ(parse_error(replace(text, ", \"steer_goal\": [1.5, 1.5]", "")).field(), "solver.steer_goal");
}

TEST(Scenario, FileErrors) {
  EXPECT_THROW(parse_scenario_file("/nonexistent/scenario.json"), ScenarioError);
  const auto path = std::filesystem::temp_directory_path() / "nrto_scenario_test.json";
  {
    std::ofstream out(path);
    out << kMinimal;
  }
  EXPECT_EQ(parse_scenario_file(path.string()).horizon, 4);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace nrto
