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

#include "nrto/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace nrto {

using nlohmann::json;
using nlohmann::ordered_json;

ScenarioError::ScenarioError(const std::string& field, int line, const std::string& message)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                         (field.empty() ? message : field + ": " + message)),
      field_(field),
      line_(line) {}

MatSeq WeightSpec::expand(int horizon, int dim) const {
  switch (form) {
    case Form::kScalar:
      return MatSeq(horizon, Mat::Identity(dim, dim) * scalar);
    case Form::kMatrix:
      return MatSeq(horizon, matrices.at(0));
    case Form::kPerStep:
      return matrices;
  }
  return {};
}

namespace {

// Splits "a.b[2].c" into the object keys {a, b, c}.
std::vector<std::string> path_keys(const std::string& path) {
  std::vector<std::string> keys;
  std::string cur;
  bool in_index = false;
  for (char ch : path) {
    if (ch == '[') {
      in_index = true;
    } else if (ch == ']') {
      in_index = false;
    } else if (in_index) {
      continue;
    } else if (ch == '.') {
      if (!cur.empty()) keys.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) keys.push_back(cur);
  return keys;
}

// Best-effort line of a field: each key is searched after the previous one.
int line_of(const std::string& text, const std::string& path) {
  if (text.empty()) return 0;
  std::size_t pos = 0;
  std::size_t found = std::string::npos;
  for (const auto& key : path_keys(path)) {
    const std::size_t p = text.find("\"" + key + "\"", pos);
    if (p == std::string::npos) break;
    found = p;
    pos = p + 1;
  }
  if (found == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(found), '\n'));
}

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw ScenarioError(field, 0, message);
}

class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return j_; }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  Node at(const std::string& key) const {
    if (!has(key)) fail(child_path(key), "missing required field");
    return Node(j_.at(key), child_path(key));
  }

  std::optional<Node> get(const std::string& key) const {
    if (!has(key) || j_.at(key).is_null()) return std::nullopt;
    return Node(j_.at(key), child_path(key));
  }

  Node item(std::size_t i) const { return Node(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  void expect_object(const std::vector<std::string>& allowed) const {
    if (!j_.is_object()) fail(path_, "expected an object");
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) fail(child_path(key), "unknown field");
    }
  }

  std::size_t array_size() const {
    if (!j_.is_array()) fail(path_, "expected an array");
    return j_.size();
  }

  double number() const {
    if (!j_.is_number()) fail(path_, "expected a number");
    return j_.get<double>();
  }

  int integer() const {
    if (!j_.is_number_integer()) fail(path_, "expected an integer");
    return j_.get<int>();
  }

  std::uint64_t unsigned_integer() const {
    if (!j_.is_number_integer() || (j_.is_number_integer() && !j_.is_number_unsigned() && j_.get<long long>() < 0)) {
      fail(path_, "expected a non-negative integer");
    }
    return j_.get<std::uint64_t>();
  }

  bool boolean() const {
    if (!j_.is_boolean()) fail(path_, "expected true or false");
    return j_.get<bool>();
  }

  std::string string() const {
    if (!j_.is_string()) fail(path_, "expected a string");
    return j_.get<std::string>();
  }

  Vec vector() const {
    const std::size_t n = array_size();
    Vec v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = item(i).number();
    return v;
  }

  // null entries stand for an absent bound.
  Vec bound_vector(double absent) const {
    const std::size_t n = array_size();
    Vec v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const Node e = item(i);
      v(static_cast<Eigen::Index>(i)) = e.raw().is_null() ? absent : e.number();
    }
    return v;
  }

  std::vector<int> int_list() const {
    const std::size_t n = array_size();
    std::vector<int> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = item(i).integer();
    return v;
  }

  Mat matrix() const {
    const std::size_t rows = array_size();
    if (rows == 0) fail(path_, "matrix must have at least one row");
    std::size_t cols = item(0).array_size();
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
      const Node row = item(r);
      if (row.array_size() != cols) fail(row.path(), "ragged matrix row");
      for (std::size_t c = 0; c < cols; ++c) {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.item(c).number();
      }
    }
    return m;
  }

  bool is_matrix() const { return j_.is_array() && !j_.empty() && j_.at(0).is_array(); }
  bool is_matrix_list() const { return is_matrix() && !j_.at(0).empty() && j_.at(0).at(0).is_array(); }

 private:
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
};

WeightSpec parse_weight(const Node& n) {
  WeightSpec w;
  if (n.raw().is_number()) {
    w.form = WeightSpec::Form::kScalar;
    w.scalar = n.number();
  } else if (n.is_matrix_list()) {
    w.form = WeightSpec::Form::kPerStep;
    for (std::size_t i = 0; i < n.array_size(); ++i) w.matrices.push_back(n.item(i).matrix());
  } else if (n.is_matrix()) {
    w.form = WeightSpec::Form::kMatrix;
    w.matrices.push_back(n.matrix());
  } else {
    fail(n.path(), "expected a number, a matrix, or a list of matrices");
  }
  return w;
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

ordered_json weight_json(const WeightSpec& w) {
  switch (w.form) {
    case WeightSpec::Form::kScalar:
      return w.scalar;
    case WeightSpec::Form::kMatrix:
      return mat_json(w.matrices.at(0));
    case WeightSpec::Form::kPerStep: {
      ordered_json a = ordered_json::array();
      for (const auto& m : w.matrices) a.push_back(mat_json(m));
      return a;
    }
  }
  return nullptr;
}

void parse_model(const Node& n, Scenario& s) {
  n.expect_object({"name", "dt", "params"});
  s.model_name = n.at("name").string();
  s.dt = n.at("dt").number();
  if (auto p = n.get("params")) {
    if (!p->raw().is_object()) fail(p->path(), "expected an object");
    for (const auto& [key, value] : p->raw().items()) {
      (void)value;
      const Node v = p->at(key);
      if (v.raw().is_number()) {
        s.model_params.scalars[key] = v.number();
      } else if (v.raw().is_string()) {
        s.model_params.strings[key] = v.string();
      } else if (v.is_matrix()) {
        s.model_params.matrices[key] = v.matrix();
      } else {
        fail(v.path(), "expected a number, string or matrix");
      }
    }
  }
  if (s.model_name == "car") {
    s.model_params.scalars.try_emplace("c_len", 0.75);
    s.model_params.strings.try_emplace("car_formula", "corrected");
  }
}

void parse_uncertainty(const Node& n, Scenario& s) {
  n.expect_object({"tau", "n_z", "gamma_seed", "gamma", "S"});
  s.tau = n.at("tau").number();
  if (auto g = n.get("gamma")) {
    s.gamma = g->matrix();
    s.n_z = static_cast<int>(s.gamma->cols());
    if (auto nz = n.get("n_z"); nz && nz->integer() != s.n_z) fail(nz->path(), "does not match the columns of gamma");
  } else {
    s.n_z = n.at("n_z").integer();
  }
  if (auto seed = n.get("gamma_seed")) s.gamma_seed = seed->unsigned_integer();
  if (auto S = n.get("S")) {
    if (S->raw().is_string()) {
      if (S->string() != "identity") fail(S->path(), "expected \"identity\" or a matrix");
    } else {
      s.S = S->matrix();
    }
  }
}

void parse_constraints(const Node& n, Scenario& s) {
  n.expect_object({"obstacles", "position_indices", "terminal_box", "linear", "control_bounds"});
  if (auto obs = n.get("obstacles")) {
    for (std::size_t i = 0; i < obs->array_size(); ++i) {
      const Node o = obs->item(i);
      o.expect_object({"center", "radius"});
      const Vec c = o.at("center").vector();
      if (c.size() != 2) fail(o.path() + ".center", "expected 2 entries");
      s.obstacles.push_back(Obstacle{Eigen::Vector2d(c(0), c(1)), o.at("radius").number()});
    }
  }
  if (auto pi = n.get("position_indices")) {
    const auto idx = pi->int_list();
    if (idx.size() != 2) fail(pi->path(), "expected 2 entries");
    s.px = idx[0];
    s.py = idx[1];
  }
  if (auto box = n.get("terminal_box")) {
    box->expect_object({"indices", "lower", "upper"});
    TerminalBoxSpec b;
    b.indices = box->at("indices").int_list();
    b.lower = box->at("lower").vector();
    b.upper = box->at("upper").vector();
    s.terminal_box = b;
  }
  if (auto lin = n.get("linear")) {
    for (std::size_t i = 0; i < lin->array_size(); ++i) {
      const Node r = lin->item(i);
      r.expect_object({"timestep", "coeff", "bound", "label"});
      LinearRowSpec row;
      row.timestep = r.at("timestep").integer();
      row.coeff = r.at("coeff").vector();
      row.bound = r.at("bound").number();
      row.label = r.has("label") ? r.at("label").string() : "linear" + std::to_string(i);
      s.linear.push_back(row);
    }
  }
  if (auto cb = n.get("control_bounds")) {
    cb->expect_object({"lower", "upper"});
    const double inf = std::numeric_limits<double>::infinity();
    s.control_bounds = ControlBounds{cb->at("lower").bound_vector(-inf), cb->at("upper").bound_vector(inf)};
  }
}

void parse_conic(const Node& n, ConicSettings& c) {
  n.expect_object({"tol_target", "tol_accept", "tol_infeasible", "max_iterations", "static_regularization",
                   "refinement_steps", "equilibration_passes", "epigraph_fallback", "force_epigraph"});
  if (auto v = n.get("tol_target")) c.tol_target = v->number();
  if (auto v = n.get("tol_accept")) c.tol_accept = v->number();
  if (auto v = n.get("tol_infeasible")) c.tol_infeasible = v->number();
  if (auto v = n.get("max_iterations")) c.max_iterations = v->integer();
  if (auto v = n.get("static_regularization")) c.static_regularization = v->number();
  if (auto v = n.get("refinement_steps")) c.refinement_steps = v->integer();
  if (auto v = n.get("equilibration_passes")) c.equilibration_passes = v->integer();
  if (auto v = n.get("epigraph_fallback")) c.epigraph_fallback = v->boolean();
  if (auto v = n.get("force_epigraph")) c.force_epigraph = v->boolean();
}

void parse_solver(const Node& n, Scenario& s) {
  n.expect_object({"r_trust", "rho", "alpha", "beta", "eta1", "eta2", "r_min", "rho_max", "eps_p", "eps_u",
                   "max_outer", "L_max_in", "literal_updates", "init", "steer_goal", "conic"});
  OuterParams& p = s.solver;
  const std::pair<const char*, double*> scalars[] = {
      {"r_trust", &p.r_trust}, {"rho", &p.rho},     {"alpha", &p.alpha},     {"beta", &p.beta},
      {"eta1", &p.eta1},       {"eta2", &p.eta2},   {"r_min", &p.r_min},     {"rho_max", &p.rho_max},
      {"eps_p", &p.eps_p},     {"eps_u", &p.eps_u}};
  for (const auto& [key, dst] : scalars) {
    if (auto v = n.get(key)) *dst = v->number();
  }
  if (auto v = n.get("max_outer")) p.max_outer = v->integer();
  if (auto v = n.get("L_max_in")) p.L_max_in = v->integer();
  if (auto v = n.get("literal_updates")) p.literal_updates = v->boolean();
  if (auto v = n.get("init")) s.init = v->string();
  if (auto v = n.get("steer_goal")) {
    const Vec g = v->vector();
    if (g.size() != 2) fail(v->path(), "expected 2 entries");
    s.steer_goal = Eigen::Vector2d(g(0), g(1));
  }
  if (auto v = n.get("conic")) parse_conic(*v, s.conic);
}

void parse_monte_carlo(const Node& n, MonteCarloSpec& m) {
  n.expect_object({"samples", "seed", "boundary", "fit_samples", "fit_boundary", "inflation"});
  if (auto v = n.get("samples")) m.samples = v->integer();
  if (auto v = n.get("seed")) m.seed = v->unsigned_integer();
  if (auto v = n.get("boundary")) m.boundary = v->boolean();
  if (auto v = n.get("fit_samples")) m.fit_samples = v->integer();
  if (auto v = n.get("fit_boundary")) m.fit_boundary = v->boolean();
  if (auto v = n.get("inflation")) m.inflation = v->number();
}

Scenario parse_root(const json& j) {
  const Node root(j, "");
  root.expect_object({"name", "description", "model", "horizon", "x0", "costs", "uncertainty", "constraints",
                      "solver", "mode", "monte_carlo"});
  Scenario s;
  if (auto v = root.get("name")) s.name = v->string();
  if (auto v = root.get("description")) s.description = v->string();
  parse_model(root.at("model"), s);
  s.horizon = root.at("horizon").integer();
  s.x0 = root.at("x0").vector();
  if (auto c = root.get("costs")) {
    c->expect_object({"R_u", "R_K"});
    if (auto v = c->get("R_u")) s.R_u = parse_weight(*v);
    if (auto v = c->get("R_K")) s.R_K = parse_weight(*v);
  }
  parse_uncertainty(root.at("uncertainty"), s);
  if (auto c = root.get("constraints")) parse_constraints(*c, s);
  if (auto c = root.get("solver")) parse_solver(*c, s);
  if (auto v = root.get("mode")) {
    try {
      s.mode = mode_from_string(v->string());
    } catch (const std::invalid_argument& e) {
      fail(v->path(), e.what());
    }
  }
  s.solver.mode = s.mode;
  if (auto m = root.get("monte_carlo")) parse_monte_carlo(*m, s.monte_carlo);
  return s;
}

bool is_spd(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::LLT<Mat> llt(m);
  return llt.info() == Eigen::Success;
}

void check_weight(const WeightSpec& w, const std::string& field, int horizon, int dim, bool psd) {
  if (w.form == WeightSpec::Form::kScalar) {
    if (!(w.scalar >= 0.0)) fail(field, "must be non-negative");
    return;
  }
  if (w.form == WeightSpec::Form::kPerStep && static_cast<int>(w.matrices.size()) != horizon) {
    fail(field, "expected one matrix per step (" + std::to_string(horizon) + ")");
  }
  for (std::size_t k = 0; k < w.matrices.size(); ++k) {
    const Mat& m = w.matrices[k];
    const std::string f = w.form == WeightSpec::Form::kPerStep ? field + "[" + std::to_string(k) + "]" : field;
    if (m.rows() != dim || m.cols() != dim) {
      fail(f, "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
    }
    if (psd && !is_positive_semidefinite(m.sparseView())) fail(f, "must be symmetric positive semidefinite");
  }
}

}  // namespace

void validate_scenario(const Scenario& s) {
  if (!ModelRegistry::instance().contains(s.model_name)) fail("model.name", "unknown model '" + s.model_name + "'");
  if (!(s.dt > 0.0)) fail("model.dt", "must be positive");
  if (s.horizon < 1) fail("horizon", "must be at least 1");
  ModelPtr model;
  try {
    model = ModelRegistry::instance().make(s.model_name, s.dt, s.model_params);
  } catch (const std::invalid_argument& e) {
    fail("model.params", e.what());
  }
  const int n_x = model->state_dim();
  const int n_u = model->control_dim();
  const int T = s.horizon;
  if (s.x0.size() != n_x) fail("x0", "expected " + std::to_string(n_x) + " entries");
  check_weight(s.R_u, "costs.R_u", T, n_u, true);
  check_weight(s.R_K, "costs.R_K", T, n_u, false);

  if (!(s.tau >= 0.0)) fail("uncertainty.tau", "must be non-negative");
  if (s.n_z < 1) fail("uncertainty.n_z", "must be at least 1");
  if (s.gamma && s.gamma->rows() != (T + 1) * n_x) {
    fail("uncertainty.gamma", "expected (horizon + 1) * state_dim = " + std::to_string((T + 1) * n_x) + " rows");
  }
  if (s.S) {
    if (s.S->rows() != s.n_z || s.S->cols() != s.n_z) fail("uncertainty.S", "expected an n_z x n_z matrix");
    if (!is_spd(*s.S)) fail("uncertainty.S", "must be symmetric positive definite");
  }

  auto check_index = [&](int i, const std::string& field) {
    if (i < 0 || i >= n_x) fail(field, "state index " + std::to_string(i) + " out of range");
  };
  check_index(s.px, "constraints.position_indices");
  check_index(s.py, "constraints.position_indices");
  if (s.px == s.py) fail("constraints.position_indices", "indices must differ");
  for (std::size_t i = 0; i < s.obstacles.size(); ++i) {
    if (!(s.obstacles[i].radius > 0.0)) fail("constraints.obstacles[" + std::to_string(i) + "].radius", "must be positive");
  }
  if (s.terminal_box) {
    const auto& b = *s.terminal_box;
    const auto m = static_cast<Eigen::Index>(b.indices.size());
    if (m == 0) fail("constraints.terminal_box.indices", "must not be empty");
    for (int i : b.indices) check_index(i, "constraints.terminal_box.indices");
    if (b.lower.size() != m) fail("constraints.terminal_box.lower", "expected one entry per index");
    if (b.upper.size() != m) fail("constraints.terminal_box.upper", "expected one entry per index");
    if ((b.lower.array() > b.upper.array()).any()) fail("constraints.terminal_box", "lower exceeds upper");
  }
  for (std::size_t i = 0; i < s.linear.size(); ++i) {
    const std::string f = "constraints.linear[" + std::to_string(i) + "]";
    if (s.linear[i].timestep < 0 || s.linear[i].timestep > T) fail(f + ".timestep", "must lie in [0, horizon]");
    if (s.linear[i].coeff.size() != n_x) fail(f + ".coeff", "expected " + std::to_string(n_x) + " entries");
  }
  if (s.control_bounds) {
    if (s.control_bounds->lower.size() != n_u) fail("constraints.control_bounds.lower", "expected one entry per control");
    if (s.control_bounds->upper.size() != n_u) fail("constraints.control_bounds.upper", "expected one entry per control");
    if ((s.control_bounds->lower.array() > s.control_bounds->upper.array()).any()) {
      fail("constraints.control_bounds", "lower exceeds upper");
    }
  }

  try {
    s.solver.validate();
  } catch (const std::invalid_argument& e) {
    fail("solver", e.what());
  }
  if (s.init != "zeros" && s.init != "steer") fail("solver.init", "expected \"zeros\" or \"steer\"");
  if (s.init == "steer" && !s.steer_goal) fail("solver.steer_goal", "required when init is \"steer\"");
  const ConicSettings& c = s.conic;
  if (!(c.tol_target > 0.0) || !(c.tol_accept >= c.tol_target)) fail("solver.conic", "need 0 < tol_target <= tol_accept");
  if (!(c.tol_infeasible > 0.0)) fail("solver.conic.tol_infeasible", "must be positive");
  if (c.max_iterations < 1) fail("solver.conic.max_iterations", "must be at least 1");
  if (!(c.static_regularization >= 0.0)) fail("solver.conic.static_regularization", "must be non-negative");
  if (c.refinement_steps < 0) fail("solver.conic.refinement_steps", "must be non-negative");
  if (c.equilibration_passes < 0) fail("solver.conic.equilibration_passes", "must be non-negative");

  const MonteCarloSpec& m = s.monte_carlo;
  if (m.samples < 1) fail("monte_carlo.samples", "must be at least 1");
  if (m.fit_samples < 2) fail("monte_carlo.fit_samples", "must be at least 2");
  if (!(m.inflation >= 1.0)) fail("monte_carlo.inflation", "must be at least 1");
}

Scenario parse_scenario_text(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t end = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
    throw ScenarioError("", line, source + ": malformed JSON: " + e.what());
  }
  try {
    Scenario s = parse_root(j);
    validate_scenario(s);
    return s;
  } catch (const ScenarioError& e) {
    const std::string msg = e.what();
    const std::string prefix = e.field().empty() ? std::string() : e.field() + ": ";
    throw ScenarioError(e.field(), line_of(text, e.field()), source + ": " + msg.substr(prefix.size()));
  } catch (const json::exception& e) {
    throw ScenarioError("", 0, source + ": " + e.what());
  }
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("", 0, "cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path);
}

ordered_json scenario_to_json(const Scenario& s) {
  ordered_json j;
  j["name"] = s.name;
  j["description"] = s.description;

  ordered_json model;
  model["name"] = s.model_name;
  model["dt"] = s.dt;
  ordered_json params = ordered_json::object();
  for (const auto& [k, v] : s.model_params.scalars) params[k] = v;
  for (const auto& [k, v] : s.model_params.strings) params[k] = v;
  for (const auto& [k, v] : s.model_params.matrices) params[k] = mat_json(v);
  model["params"] = params;
  j["model"] = model;
  j["horizon"] = s.horizon;
  j["x0"] = vec_json(s.x0);
  j["costs"] = {{"R_u", weight_json(s.R_u)}, {"R_K", weight_json(s.R_K)}};

  ordered_json unc;
  unc["tau"] = s.tau;
  unc["n_z"] = s.n_z;
  unc["gamma_seed"] = s.gamma_seed;
  if (s.gamma) unc["gamma"] = mat_json(*s.gamma);
  unc["S"] = s.S ? mat_json(*s.S) : ordered_json("identity");
  j["uncertainty"] = unc;

  ordered_json cons;
  ordered_json obs = ordered_json::array();
  for (const auto& o : s.obstacles) {
    obs.push_back({{"center", {o.center.x(), o.center.y()}}, {"radius", o.radius}});
  }
  cons["obstacles"] = obs;
  cons["position_indices"] = {s.px, s.py};
  if (s.terminal_box) {
    cons["terminal_box"] = {{"indices", s.terminal_box->indices},
                            {"lower", vec_json(s.terminal_box->lower)},
                            {"upper", vec_json(s.terminal_box->upper)}};
  } else {
    cons["terminal_box"] = nullptr;
  }
  ordered_json lin = ordered_json::array();
  for (const auto& r : s.linear) {
    lin.push_back({{"timestep", r.timestep}, {"coeff", vec_json(r.coeff)}, {"bound", r.bound}, {"label", r.label}});
  }
  cons["linear"] = lin;
  if (s.control_bounds) {
    cons["control_bounds"] = {{"lower", vec_json(s.control_bounds->lower)}, {"upper", vec_json(s.control_bounds->upper)}};
  } else {
    cons["control_bounds"] = nullptr;
  }
  j["constraints"] = cons;

  const OuterParams& p = s.solver;
  ordered_json solver;
  solver["r_trust"] = p.r_trust;
  solver["rho"] = p.rho;
  solver["alpha"] = p.alpha;
  solver["beta"] = p.beta;
  solver["eta1"] = p.eta1;
  solver["eta2"] = p.eta2;
  solver["r_min"] = p.r_min;
  solver["rho_max"] = p.rho_max;
  solver["eps_p"] = p.eps_p;
  solver["eps_u"] = p.eps_u;
  solver["max_outer"] = p.max_outer;
  solver["L_max_in"] = p.L_max_in;
  solver["literal_updates"] = p.literal_updates;
  solver["init"] = s.init;
  solver["steer_goal"] = s.steer_goal ? ordered_json({s.steer_goal->x(), s.steer_goal->y()}) : ordered_json(nullptr);
  const ConicSettings& c = s.conic;
  solver["conic"] = {{"tol_target", c.tol_target},
                     {"tol_accept", c.tol_accept},
                     {"tol_infeasible", c.tol_infeasible},
                     {"max_iterations", c.max_iterations},
                     {"static_regularization", c.static_regularization},
                     {"refinement_steps", c.refinement_steps},
                     {"equilibration_passes", c.equilibration_passes},
                     {"epigraph_fallback", c.epigraph_fallback},
                     {"force_epigraph", c.force_epigraph}};
  j["solver"] = solver;
  j["mode"] = to_string(s.mode);
  const MonteCarloSpec& m = s.monte_carlo;
  j["monte_carlo"] = {{"samples", m.samples},         {"seed", m.seed},
                      {"boundary", m.boundary},       {"fit_samples", m.fit_samples},
                      {"fit_boundary", m.fit_boundary}, {"inflation", m.inflation}};
  return j;
}

std::string serialize_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

ModelPtr build_model(const Scenario& s) { return ModelRegistry::instance().make(s.model_name, s.dt, s.model_params); }

UncertaintySet build_uncertainty(const Scenario& s) {
  const ModelPtr model = build_model(s);
  const int zeta_dim = (s.horizon + 1) * model->state_dim();
  const Mat S = s.S ? *s.S : Mat::Identity(s.n_z, s.n_z);
  if (s.gamma) return UncertaintySet(*s.gamma, S, s.tau);
  const UncertaintySet drawn = UncertaintySet::random_gamma(zeta_dim, s.n_z, s.tau, s.gamma_seed);
  return UncertaintySet(drawn.gamma(), S, s.tau);
}

ConstraintSet build_constraints(const Scenario& s, int n_x) {
  ConstraintSet cs(s.horizon, n_x);
  for (const auto& o : s.obstacles) cs.add_obstacle(o.center, o.radius, s.px, s.py);
  if (s.terminal_box) cs.add_terminal_box(s.terminal_box->indices, s.terminal_box->lower, s.terminal_box->upper);
  for (const auto& r : s.linear) cs.add_linear(r.timestep, r.coeff, r.bound, r.label);
  if (s.control_bounds) cs.set_control_bounds(*s.control_bounds);
  return cs;
}

Problem build_problem(const Scenario& s) {
  ModelPtr model = build_model(s);
  const int n_u = model->control_dim();
  Problem pb(model, s.x0, build_constraints(s, model->state_dim()), build_uncertainty(s));
  pb.R_u = s.R_u.expand(s.horizon, n_u);
  pb.R_K = s.R_K.expand(s.horizon, n_u);
  pb.params = s.solver;
  pb.params.mode = s.mode;
  pb.conic = s.conic;
  if (s.init == "steer") pb.u_init = steer_initialization(*model, s.x0, *s.steer_goal, s.horizon);
  return pb;
}

}  // namespace nrto
