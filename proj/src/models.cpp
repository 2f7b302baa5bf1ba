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

#include "nrto/models.hpp"

#include <cmath>

namespace nrto {

DynamicsModel::DynamicsModel(double dt) : dt_(dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("model step size dt must be positive");
}

void DynamicsModel::check_dims(const Vec& x, const Vec& u) const {
  if (x.size() != state_dim() || u.size() != control_dim()) {
    throw std::invalid_argument(name() + ": expected x of size " + std::to_string(state_dim()) + " and u of size " +
                                std::to_string(control_dim()) + ", got " + std::to_string(x.size()) + " and " +
                                std::to_string(u.size()));
  }
}

Vec DynamicsModel::step(const Vec& x, const Vec& u) const {
  check_dims(x, u);
  return do_step(x, u);
}

Jacobians DynamicsModel::jacobians(const Vec& x, const Vec& u) const {
  check_dims(x, u);
  return do_jacobians(x, u);
}

// ---------------------------------------------------------------- unicycle

Vec Unicycle::do_step(const Vec& x, const Vec& u) const {
  const double h = dt();
  Vec next(3);
  next << x(0) + u(0) * std::cos(x(2)) * h, x(1) + u(0) * std::sin(x(2)) * h, x(2) + u(1) * h;
  return next;
}

Jacobians Unicycle::do_jacobians(const Vec& x, const Vec& u) const {
  const double h = dt();
  const double c = std::cos(x(2));
  const double s = std::sin(x(2));
  Jacobians J{Mat::Identity(3, 3), Mat::Zero(3, 2)};
  J.A(0, 2) = -u(0) * s * h;
  J.A(1, 2) = u(0) * c * h;
  J.B(0, 0) = c * h;
  J.B(1, 0) = s * h;
  J.B(2, 1) = h;
  return J;
}

// --------------------------------------------------------------------- car

std::string to_string(CarFormula f) {
  switch (f) {
    case CarFormula::kCorrected:
      return "corrected";
    case CarFormula::kPaperVerbatim:
      return "paper_verbatim";
    case CarFormula::kStandard:
      return "standard";
  }
  return "corrected";
}

CarFormula car_formula_from_string(const std::string& s) {
  if (s == "corrected") return CarFormula::kCorrected;
  if (s == "paper_verbatim") return CarFormula::kPaperVerbatim;
  if (s == "standard") return CarFormula::kStandard;
  throw std::invalid_argument("unknown car_formula '" + s + "' (expected corrected, paper_verbatim or standard)");
}

Car::Car(double dt, double axle_length, CarFormula formula)
    : DynamicsModel(dt), axle_length_(axle_length), formula_(formula) {
  if (!(axle_length > 0.0)) throw std::invalid_argument("car axle length c_len must be positive");
}

Car::Rolling Car::rolling_distance(double v, double omega) const {
  const double L = axle_length_;
  const double h = dt();
  const double cf = v * h;
  const double cw = std::cos(omega);
  const double sw = std::sin(omega);

  if (formula_ == CarFormula::kStandard) {
    const double r = cf * sw;
    const double arg = L * L - r * r;
    if (!(arg > 0.0)) throw ModelDomainError("car: square-root argument c_len^2 - (c_f sin w)^2 is not positive");
    const double root = std::sqrt(arg);
    // d/dr of -sqrt(L^2 - r^2) is r / root.
    return {cf * cw + L - root, h * cw + (r / root) * h * sw, -cf * sw + (r / root) * cf * cw};
  }

  const double q = cf * cw;
  const double arg = L * L - q * q;
  if (!(arg > 0.0)) throw ModelDomainError("car: square-root argument c_len^2 - (c_f cos w)^2 is not positive");
  const double root = std::sqrt(arg);
  const double sign = formula_ == CarFormula::kPaperVerbatim ? 1.0 : -1.0;
  const double d_q = 1.0 - sign * q / root;
  return {q + L + sign * root, d_q * h * cw, d_q * (-cf * sw)};
}

Vec Car::do_step(const Vec& x, const Vec& u) const {
  const double h = dt();
  const double L = axle_length_;
  const double cf = x(3) * h;
  const Rolling cb = rolling_distance(x(3), u(0));
  const double m = std::sin(u(0)) * cf / L;
  if (!(std::abs(m) < 1.0)) throw ModelDomainError("car: |sin(w) c_f / c_len| must be below one");

  Vec next(4);
  next << x(0) + cb.value * std::cos(x(2)), x(1) + cb.value * std::sin(x(2)), x(2) + std::asin(m), x(3) + u(1) * h;
  return next;
}

Jacobians Car::do_jacobians(const Vec& x, const Vec& u) const {
  const double h = dt();
  const double L = axle_length_;
  const double th = x(2);
  const double v = x(3);
  const double w = u(0);
  const double cf = v * h;
  const Rolling cb = rolling_distance(v, w);
  const double m = std::sin(w) * cf / L;
  if (!(std::abs(m) < 1.0)) throw ModelDomainError("car: |sin(w) c_f / c_len| must be below one");
  const double dasin = 1.0 / std::sqrt(1.0 - m * m);

  Jacobians J{Mat::Identity(4, 4), Mat::Zero(4, 2)};
  J.A(0, 2) = -cb.value * std::sin(th);
  J.A(1, 2) = cb.value * std::cos(th);
  J.A(0, 3) = cb.d_v * std::cos(th);
  J.A(1, 3) = cb.d_v * std::sin(th);
  J.A(2, 3) = dasin * std::sin(w) * h / L;

  J.B(0, 0) = cb.d_omega * std::cos(th);
  J.B(1, 0) = cb.d_omega * std::sin(th);
  J.B(2, 0) = dasin * std::cos(w) * cf / L;
  J.B(3, 1) = h;
  return J;
}

// ------------------------------------------------------------------ linear

LinearModel::LinearModel(double dt, Mat A, Mat B, std::string label)
    : DynamicsModel(dt), A_(std::move(A)), B_(std::move(B)), label_(std::move(label)) {
  if (A_.rows() < 1 || A_.rows() != A_.cols()) throw std::invalid_argument("linear model: A must be square and nonempty");
  if (B_.rows() != A_.rows() || B_.cols() < 1) throw std::invalid_argument("linear model: B must have n_x rows and n_u >= 1 columns");
}

std::shared_ptr<LinearModel> LinearModel::double_integrator(double dt) {
  Mat A = Mat::Identity(4, 4);
  A(0, 2) = dt;
  A(1, 3) = dt;
  Mat B = Mat::Zero(4, 2);
  B(0, 0) = 0.5 * dt * dt;
  B(1, 1) = 0.5 * dt * dt;
  B(2, 0) = dt;
  B(3, 1) = dt;
  return std::make_shared<LinearModel>(dt, A, B, "double_integrator");
}

Vec LinearModel::do_step(const Vec& x, const Vec& u) const { return A_ * x + B_ * u; }

Jacobians LinearModel::do_jacobians(const Vec&, const Vec&) const { return {A_, B_}; }

// ---------------------------------------------------------------- registry

ModelRegistry& ModelRegistry::instance() {
  static ModelRegistry registry;
  return registry;
}

ModelRegistry::ModelRegistry() {
  add("unicycle", [](double dt, const ModelParams&) { return std::make_shared<Unicycle>(dt); });
  add("car", [](double dt, const ModelParams& p) {
    double len = 0.75;
    if (auto it = p.scalars.find("c_len"); it != p.scalars.end()) len = it->second;
    CarFormula f = CarFormula::kCorrected;
    if (auto it = p.strings.find("car_formula"); it != p.strings.end()) f = car_formula_from_string(it->second);
    return std::make_shared<Car>(dt, len, f);
  });
  add("double_integrator", [](double dt, const ModelParams&) { return LinearModel::double_integrator(dt); });
  add("linear", [](double dt, const ModelParams& p) {
    auto a = p.matrices.find("A");
    auto b = p.matrices.find("B");
    if (a == p.matrices.end() || b == p.matrices.end()) {
      throw std::invalid_argument("linear model requires matrices 'A' and 'B'");
    }
    return std::make_shared<LinearModel>(dt, a->second, b->second);
  });
}

void ModelRegistry::add(const std::string& name, ModelFactory factory) { factories_[name] = std::move(factory); }

bool ModelRegistry::contains(const std::string& name) const { return factories_.count(name) > 0; }

ModelPtr ModelRegistry::make(const std::string& name, double dt, const ModelParams& params) const {
  auto it = factories_.find(name);
  if (it == factories_.end()) throw std::invalid_argument("unknown model '" + name + "'");
  return it->second(dt, params);
}

// ----------------------------------------------------------------- rollout

NominalTrajectory rollout(const DynamicsModel& model, const Vec& x0, const VecSeq& controls) {
  if (controls.empty()) throw std::invalid_argument("rollout: horizon must be at least one step");
  if (x0.size() != model.state_dim()) throw std::invalid_argument("rollout: initial state has wrong dimension");
  NominalTrajectory traj;
  traj.controls = controls;
  traj.states.reserve(controls.size() + 1);
  traj.states.push_back(x0);
  for (std::size_t k = 0; k < controls.size(); ++k) {
    try {
      traj.states.push_back(model.step(traj.states.back(), controls[k]));
    } catch (const ModelDomainError& e) {
      throw ModelDomainError(std::string("rollout: ") + e.what(), static_cast<int>(k));
    }
  }
  return traj;
}

void linearize_along(const DynamicsModel& model, const NominalTrajectory& traj, MatSeq& A, MatSeq& B) {
  const int T = traj.horizon();
  A.resize(T);
  B.resize(T);
  for (int k = 0; k < T; ++k) {
    try {
      Jacobians J = model.jacobians(traj.states[k], traj.controls[k]);
      A[k] = std::move(J.A);
      B[k] = std::move(J.B);
    } catch (const ModelDomainError& e) {
      throw ModelDomainError(std::string("jacobians: ") + e.what(), k);
    }
  }
}

}  // namespace nrto
