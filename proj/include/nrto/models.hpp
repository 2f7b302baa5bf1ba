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
#ifndef NRTO_MODELS_HPP
#define NRTO_MODELS_HPP

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "nrto/types.hpp"

namespace nrto {

/// Raised when a model is evaluated outside the domain of its update
/// equations (e.g. the car's square-root argument turns negative).
class ModelDomainError : public std::domain_error {
 public:
  ModelDomainError(const std::string& what, int timestep = -1)
      : std::domain_error(timestep >= 0 ? what + " (timestep " + std::to_string(timestep) + ")" : what),
        timestep_(timestep) {}

  int timestep() const { return timestep_; }

 private:
  int timestep_;
};

struct Jacobians {
  Mat A;  // df/dx
  Mat B;  // df/du
};

/**
 * @brief Discrete-time dynamics x_{k+1} = f(x_k, u_k).
 *
 * Implementations are stateless after construction; step() and
 * jacobians() are pure and may be called concurrently.
 */
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  double dt() const { return dt_; }

  Vec step(const Vec& x, const Vec& u) const;
  Jacobians jacobians(const Vec& x, const Vec& u) const;

 protected:
  explicit DynamicsModel(double dt);

  virtual Vec do_step(const Vec& x, const Vec& u) const = 0;
  virtual Jacobians do_jacobians(const Vec& x, const Vec& u) const = 0;

 private:
  void check_dims(const Vec& x, const Vec& u) const;

  double dt_;
};

using ModelPtr = std::shared_ptr<const DynamicsModel>;

/// State (x, y, theta), control (v, omega).
class Unicycle final : public DynamicsModel {
 public:
  explicit Unicycle(double dt) : DynamicsModel(dt) {}

  std::string name() const override { return "unicycle"; }
  int state_dim() const override { return 3; }
  int control_dim() const override { return 2; }

 protected:
  Vec do_step(const Vec& x, const Vec& u) const override;
  Jacobians do_jacobians(const Vec& x, const Vec& u) const override;
};

/// Rolling-distance formula for the back axle of the kinematic car.
enum class CarFormula {
  kCorrected,      // c_f cos(w) + L - sqrt(L^2 - (c_f cos(w))^2)
  kPaperVerbatim,  // c_f cos(w) + L + sqrt(L^2 - (c_f cos(w))^2)
  kStandard,       // c_f cos(w) + L - sqrt(L^2 - (c_f sin(w))^2)
};

std::string to_string(CarFormula f);
CarFormula car_formula_from_string(const std::string& s);

/// State (x, y, theta, v), control (omega, a). Front-wheel angle omega,
/// front-wheel acceleration a, axle distance c_len.
class Car final : public DynamicsModel {
 public:
  Car(double dt, double axle_length = 0.75, CarFormula formula = CarFormula::kCorrected);

  std::string name() const override { return "car"; }
  int state_dim() const override { return 4; }
  int control_dim() const override { return 2; }

  double axle_length() const { return axle_length_; }
  CarFormula formula() const { return formula_; }

  /// Back-axle rolling distance and its partials w.r.t. (v, omega).
  struct Rolling {
    double value;
    double d_v;
    double d_omega;
  };
  Rolling rolling_distance(double v, double omega) const;

 protected:
  Vec do_step(const Vec& x, const Vec& u) const override;
  Jacobians do_jacobians(const Vec& x, const Vec& u) const override;

 private:
  double axle_length_;
  CarFormula formula_;
};

/// x_{k+1} = A x_k + B u_k. The linearization is exact.
class LinearModel final : public DynamicsModel {
 public:
  LinearModel(double dt, Mat A, Mat B, std::string label = "linear");

  /// Planar double integrator, state (px, py, vx, vy), control (ax, ay).
  static std::shared_ptr<LinearModel> double_integrator(double dt);

  std::string name() const override { return label_; }
  int state_dim() const override { return static_cast<int>(A_.rows()); }
  int control_dim() const override { return static_cast<int>(B_.cols()); }

  const Mat& A() const { return A_; }
  const Mat& B() const { return B_; }

 protected:
  Vec do_step(const Vec& x, const Vec& u) const override;
  Jacobians do_jacobians(const Vec& x, const Vec& u) const override;

 private:
  Mat A_;
  Mat B_;
  std::string label_;
};

/// Model-specific constants as read from a scenario (name -> value or matrix).
struct ModelParams {
  std::map<std::string, double> scalars;
  std::map<std::string, std::string> strings;
  std::map<std::string, Mat> matrices;
};

using ModelFactory = std::function<ModelPtr(double dt, const ModelParams&)>;

/// Name -> constructor registry. Ships with "unicycle", "car", "linear"
/// and "double_integrator".
class ModelRegistry {
 public:
  static ModelRegistry& instance();

  void add(const std::string& name, ModelFactory factory);
  ModelPtr make(const std::string& name, double dt, const ModelParams& params = {}) const;
  bool contains(const std::string& name) const;

 private:
  ModelRegistry();
  std::map<std::string, ModelFactory> factories_;
};

/// Disturbance-free trajectory x_{k+1} = f(x_k, u_k), x_0 given.
struct NominalTrajectory {
  VecSeq states;    // T+1 entries
  VecSeq controls;  // T entries

  int horizon() const { return static_cast<int>(controls.size()); }
  Vec stacked_states() const { return stack(states); }
  Vec stacked_controls() const { return stack(controls); }
};

/// Rolls the model forward from x0. Domain errors carry the failing timestep.
NominalTrajectory rollout(const DynamicsModel& model, const Vec& x0, const VecSeq& controls);

/// Jacobians along a trajectory; A[k], B[k] evaluated at (states[k], controls[k]).
void linearize_along(const DynamicsModel& model, const NominalTrajectory& traj, MatSeq& A, MatSeq& B);

}  // namespace nrto

#endif  // NRTO_MODELS_HPP
