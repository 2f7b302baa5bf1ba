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
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "nrto/pipeline.hpp"

namespace nrto {
namespace {

namespace fs = std::filesystem;

const char* kSmall = R"({
  "name": "small",
  "model": {"name": "unicycle", "dt": 0.1},
  "horizon": 10,
  "x0": [0, 0, 0],
  "uncertainty": {"tau": 0.002, "n_z": 3},
  "constraints": {
    "obstacles": [{"center": [0.5, 0.05], "radius": 0.15}],
    "terminal_box": {"indices": [0, 1], "lower": [0.8, 0.3], "upper": [1.2, 0.7]}
  },
  "solver": {"init": "steer", "steer_goal": [1, 0.5], "r_min": 1e-6},
  "monte_carlo": {"samples": 40, "fit_samples": 60}
})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nrto_pipeline_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const Scenario& s, RunOptions o, const std::string& sub = "out") {
    o.out_dir = (dir_ / sub).string();
    out_.str("");
    err_.str("");
    return execute_run(s, o, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST(Sweep, ParsesAndExpands) {
  const SweepSpec s = parse_sweep("tau=0.01:0.01:0.10");
  const auto v = s.values();
  ASSERT_EQ(v.size(), 10u);
  EXPECT_EQ(v.front(), 0.01);
  EXPECT_EQ(v[2], 0.03);
  EXPECT_EQ(v.back(), 0.1);
  EXPECT_EQ(s.to_string(), "tau=0.01:0.01:0.1");
  const SweepSpec again = parse_sweep(s.to_string());
  EXPECT_EQ(again.values(), v);
  EXPECT_EQ(parse_sweep("tau=0:0.5:0.5").values().size(), 2u);
}

TEST(Sweep, RejectsMalformedText) {
  for (const char* bad : {"0.1:0.1:1", "tau=0.1:0.1", "tau=a:0.1:1", "tau=0.1:0:1", "tau=0.5:0.1:0.1",
                          "tau=-0.1:0.1:0.2", "tau=0.1:0.1:1:2"}) {
    EXPECT_THROW(parse_sweep(bad), std::invalid_argument) << bad;
  }
}

TEST(Overrides, ReplaceScenarioFields) {
  const Scenario base = parse_scenario_text(kSmall);
  RunOptions o;
  EXPECT_EQ(apply_overrides(base, o).mode, Mode::kNrto);
  o.mode = Mode::kNto;
  o.samples = 5;
  o.seed = 99;
  o.boundary_sampling = true;
  const Scenario s = apply_overrides(base, o);
  EXPECT_EQ(s.mode, Mode::kNto);
  EXPECT_EQ(s.solver.mode, Mode::kNto);
  EXPECT_EQ(s.monte_carlo.samples, 5);
  EXPECT_EQ(s.monte_carlo.seed, 99u);
  EXPECT_TRUE(s.monte_carlo.boundary);
  o.samples = 0;
  EXPECT_THROW(apply_overrides(base, o), std::exception);
}

TEST_F(PipelineTest, AtomicWriteReplacesContent) {
  fs::create_directories(dir_);
  const fs::path p = dir_ / "a.txt";
  write_file_atomic(p.string(), "first");
  write_file_atomic(p.string(), "second");
  EXPECT_EQ(slurp(p), "second");
  int entries = 0;
  for (const auto& e : fs::directory_iterator(dir_)) {
    (void)e;
    ++entries;
  }
  EXPECT_EQ(entries, 1);
  EXPECT_THROW(write_file_atomic((dir_ / "missing" / "b.txt").string(), "x"), std::exception);
}

TEST_F(PipelineTest, RunWritesEveryArtifact) {
  const Scenario s = parse_scenario_text(kSmall);
  ASSERT_EQ(run(s, {}), kExitOk) << err_.str();
  const fs::path out = dir_ / "out";
  for (const char* f : {"policy.json", "solve_log.json", "rollouts.csv", "stats.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_FALSE(fs::exists(out / "error_sets.json"));

  const auto stats = nlohmann::json::parse(slurp(out / "stats.json"));
  EXPECT_EQ(stats.at("mode"), "nrto");
  EXPECT_EQ(stats.at("samples"), 40);
  EXPECT_GE(stats.at("satisfaction").get<double>(), 0.0);
  EXPECT_EQ(stats.at("final").at("solve").at("status"), "converged");

  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest.at("status"), "complete");
  EXPECT_EQ(manifest.at("partial"), false);
  EXPECT_EQ(manifest.at("scenario").at("name"), "small");

  std::istringstream csv(slurp(out / "rollouts.csv"));
  std::string header, line;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("sample,t,x0,x1,x2,u0,u1,", 0), 0u) << header;
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 40 * 11);

  const auto policy = nlohmann::json::parse(slurp(out / "policy.json"));
  EXPECT_EQ(policy.at("u_bar").size(), 10u);
  EXPECT_EQ(policy.at("gains").size(), 10u);
}

TEST_F(PipelineTest, LinearizationErrorModeWritesBothPolicies) {
  const Scenario s = parse_scenario_text(kSmall);
  RunOptions o;
  o.mode = Mode::kNrtoLe;
  ASSERT_EQ(run(s, o), kExitOk) << err_.str();
  const fs::path out = dir_ / "out";
  for (const char* f : {"policy_nrto.json", "rollouts_nrto.csv", "error_sets.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto stats = nlohmann::json::parse(slurp(out / "stats.json"));
  EXPECT_EQ(stats.at("mode"), "nrto-le");
  EXPECT_EQ(stats.at("baseline_mode"), "nrto");
  EXPECT_TRUE(stats.contains("baseline_satisfaction"));
  const auto sets = nlohmann::json::parse(slurp(out / "error_sets.json"));
  EXPECT_EQ(sets.size(), 11u);
  const auto log = nlohmann::json::parse(slurp(out / "solve_log.json"));
  EXPECT_TRUE(log.contains("nrto"));
  EXPECT_TRUE(log.contains("nrto-le"));
}

TEST_F(PipelineTest, ManifestRerunReproducesStats) {
  const Scenario s = parse_scenario_text(kSmall);
  RunOptions o;
  o.seed = 11;
  ASSERT_EQ(run(s, o, "first"), kExitOk) << err_.str();
  std::ostringstream out, err;
  ASSERT_EQ(execute_manifest((dir_ / "first" / "manifest.json").string(), (dir_ / "second").string(), false, out, err),
            kExitOk)
      << err.str();
  EXPECT_EQ(slurp(dir_ / "first" / "stats.json"), slurp(dir_ / "second" / "stats.json"));
  EXPECT_EQ(slurp(dir_ / "first" / "rollouts.csv"), slurp(dir_ / "second" / "rollouts.csv"));
}

TEST_F(PipelineTest, SweepWritesOneDirectoryPerLevel) {
  Scenario s = parse_scenario_text(kSmall);
  s.monte_carlo.samples = 10;
  RunOptions o;
  o.sweep = parse_sweep("tau=0:0.001:0.002");
  ASSERT_EQ(run(s, o), kExitOk) << err_.str();
  const fs::path out = dir_ / "out";
  for (const char* d : {"tau_0", "tau_0.001", "tau_0.002"}) EXPECT_TRUE(fs::exists(out / d / "stats.json")) << d;
  const auto stats = nlohmann::json::parse(slurp(out / "stats.json"));
  ASSERT_EQ(stats.at("rows").size(), 3u);
  EXPECT_EQ(stats.at("rows")[1].at("tau"), 0.001);
  EXPECT_EQ(stats.at("sweep"), "tau=0:0.001:0.002");
}

TEST_F(PipelineTest, GateFailureExitsWithFour) {
  Scenario s = parse_scenario_text(kSmall);
  s.tau = 0.05;
  RunOptions o;
  o.mode = Mode::kNto;
  o.gate = 1.0;
  EXPECT_EQ(run(s, o), kExitGate);
  const auto manifest = nlohmann::json::parse(slurp(dir_ / "out" / "manifest.json"));
  EXPECT_EQ(manifest.at("gate").at("passed"), false);
  EXPECT_EQ(manifest.at("status"), "complete");
}

TEST_F(PipelineTest, GatePassExitsWithZero) {
  const Scenario s = parse_scenario_text(kSmall);
  RunOptions o;
  o.gate = 0.0;
  EXPECT_EQ(run(s, o), kExitOk);
}

TEST_F(PipelineTest, SolverFailureExitsWithThree) {
  Scenario s = parse_scenario_text(kSmall);
  s.conic.max_iterations = 1;
  s.conic.epigraph_fallback = false;
  EXPECT_EQ(run(s, {}), kExitSolver);
  EXPECT_NE(err_.str().find("error: solver"), std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(dir_ / "out" / "manifest.json"));
  EXPECT_EQ(manifest.at("status"), "failed");
  EXPECT_EQ(manifest.at("partial"), true);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "solve_log.json"));
}

TEST_F(PipelineTest, BadOverridesExitWithTwo) {
  const Scenario s = parse_scenario_text(kSmall);
  RunOptions o;
  o.samples = -3;
  EXPECT_EQ(run(s, o), kExitValidation);
  std::ostringstream out, err;
  EXPECT_EQ(execute_manifest((dir_ / "none.json").string(), (dir_ / "x").string(), false, out, err), kExitValidation);
}

TEST_F(PipelineTest, ConicDumpWritesPrograms) {
  const Scenario s = parse_scenario_text(kSmall);
  RunOptions o;
  o.dump_conic = true;
  ASSERT_EQ(run(s, o), kExitOk);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "conic"));
  EXPECT_FALSE(fs::is_empty(dir_ / "out" / "conic"));
}

TEST(RolloutsCsv, UsesSeventeenDigits) {
  Unicycle model(0.1);
  const Policy p = Policy::make(model, Vec::Zero(3), VecSeq(1, (Vec(2) << 1.0 / 3.0, 0.0).finished()),
                                MatSeq(1, Mat::Zero(2, 3)));
  ConstraintSet cs(1, 3);
  cs.add_linear(1, (Vec(3) << 1, 0, 0).finished(), 1.0, "cap");
  const MonteCarloResult mc = run_monte_carlo(model, p, cs, {Vec::Zero(6)});
  const std::string csv = rollouts_csv(mc, cs);
  EXPECT_NE(csv.find("0.33333333333333331"), std::string::npos) << csv;
  EXPECT_NE(csv.find("g_cap"), std::string::npos);
}

}  // namespace
}  // namespace nrto
