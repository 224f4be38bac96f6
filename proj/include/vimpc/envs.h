// Copyright 2026 The vimpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Desk-scale tasks. The point-mass reward and the multimodal objective are
// surrogates: only their qualitative structure (obstacles that split the
// path into several routes, two separated optima) is prescribed.

#ifndef VIMPC_ENVS_H_
#define VIMPC_ENVS_H_

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "vimpc/core_types.h"
#include "vimpc/dynamics.h"

namespace vimpc {

// ---------------------------------------------------------------- shaping

// exp(-(z - z_des)^2), in (0, 1].
double ShapingPhi(double z, double z_des);
// (1 + cos 2 angle) / 2, in [0, 1].
double ShapingPsi(double angle);

// ------------------------------------------------------------- point mass

struct Obstacle {
  Eigen::Vector2d center;
  double radius = 0.0;
};

struct PointMassTask {
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  Eigen::Vector2d goal = Eigen::Vector2d(1.0, 0.0);
  std::vector<Obstacle> obstacles;
  double max_step = 0.05;
  double obstacle_cost = 100.0;

  // Start (0, 0), goal (1, 0), and three obstacles stacked across the
  // straight line so that the upper and lower gaps and the outer detours
  // are distinct routes.
  static PointMassTask Default();
  void Validate() const;
};

// Radial projection of a onto the disk of radius max_step.
Eigen::Vector2d ProjectAction(const Eigen::Vector2d& a, double max_step);
Eigen::Vector2d PointMassStep(const PointMassTask& task,
                              const Eigen::Vector2d& s,
                              const Eigen::Vector2d& a);
// Reward of landing in next_state.
double PointMassStateReward(const PointMassTask& task,
                            const Eigen::Vector2d& next_state);
// Reward of taking a from s under the true kinematics.
double PointMassReward(const PointMassTask& task, const Eigen::Vector2d& s,
                       const Eigen::Vector2d& a);

// -------------------------------------------------------- multimodal fit

struct Mode {
  Eigen::Vector2d center;
  double height = 1.0;
  double width = 1.0;
};

struct MultimodalObjective {
  std::vector<Mode> modes;

  // (-1, 0) with height 1.0 and (+1, 0) with height 0.9, both width 0.3.
  static MultimodalObjective Default();
  void Validate() const;
};

double MultimodalEval(const Eigen::Vector2d& a, const MultimodalObjective& obj);

// ---------------------------------------------------------------- pendulum

// theta is measured from upright; state is (cos theta, sin theta, theta_dot).
struct PendulumParams {
  double gravity = 10.0;
  double length = 1.0;
  double mass = 1.0;
  double dt = 0.05;
  double max_torque = 2.0;
};

Eigen::Vector3d PendulumState(double theta, double theta_dot);
double PendulumAngle(const Eigen::VectorXd& s);
// Semi-implicit Euler on theta_ddot = (g / l) sin theta + u / (m l^2), with
// u clipped to [-max_torque, max_torque].
Eigen::Vector3d PendulumStep(const PendulumParams& params,
                             const Eigen::VectorXd& s, double torque);
// -(angle_error^2 + 0.1 theta_dot^2 + 0.001 u^2).
double PendulumReward(const PendulumParams& params, const Eigen::VectorXd& s,
                      double torque);
double PendulumEnergy(const PendulumParams& params, const Eigen::VectorXd& s);

// ------------------------------------------------------------ environment

// The real system in the MBRL loop, also the source of the reward function
// used during planning.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string_view name() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual const ActionBounds& bounds() const = 0;
  virtual Eigen::VectorXd InitialState() const = 0;
  virtual Eigen::VectorXd Step(const Eigen::VectorXd& s,
                               const Eigen::VectorXd& a) const = 0;
  virtual double Reward(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                        const Eigen::VectorXd& next_state) const = 0;

  EnvSpec spec() const { return {state_dim(), action_dim(), bounds()}; }
  // The exact transition as a zero-variance model. The model owns copies of
  // the environment parameters.
  virtual std::shared_ptr<const DynamicsModel> TrueModel() const = 0;
};

class PointMassEnv : public Environment {
 public:
  explicit PointMassEnv(PointMassTask task = PointMassTask::Default());

  std::string_view name() const override { return "point_mass"; }
  int state_dim() const override { return 2; }
  int action_dim() const override { return 2; }
  const ActionBounds& bounds() const override { return bounds_; }
  Eigen::VectorXd InitialState() const override { return task_.start; }
  Eigen::VectorXd Step(const Eigen::VectorXd& s,
                       const Eigen::VectorXd& a) const override;
  double Reward(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                const Eigen::VectorXd& next_state) const override;
  std::shared_ptr<const DynamicsModel> TrueModel() const override;

  const PointMassTask& task() const { return task_; }

 private:
  PointMassTask task_;
  ActionBounds bounds_;
};

class PendulumEnv : public Environment {
 public:
  explicit PendulumEnv(PendulumParams params = {});

  std::string_view name() const override { return "pendulum"; }
  int state_dim() const override { return 3; }
  int action_dim() const override { return 1; }
  const ActionBounds& bounds() const override { return bounds_; }
  // Hanging at rest.
  Eigen::VectorXd InitialState() const override;
  Eigen::VectorXd Step(const Eigen::VectorXd& s,
                       const Eigen::VectorXd& a) const override;
  double Reward(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                const Eigen::VectorXd& next_state) const override;
  std::shared_ptr<const DynamicsModel> TrueModel() const override;

  const PendulumParams& params() const { return params_; }

 private:
  PendulumParams params_;
  ActionBounds bounds_;
};

// Single-step "environment" whose action is a point in the plane and whose
// reward is the multimodal objective. The state is a constant scalar.
class MultimodalEnv : public Environment {
 public:
  explicit MultimodalEnv(
      MultimodalObjective objective = MultimodalObjective::Default(),
      double action_limit = 2.0);

  std::string_view name() const override { return "multimodal"; }
  int state_dim() const override { return 1; }
  int action_dim() const override { return 2; }
  const ActionBounds& bounds() const override { return bounds_; }
  Eigen::VectorXd InitialState() const override;
  Eigen::VectorXd Step(const Eigen::VectorXd& s,
                       const Eigen::VectorXd& a) const override;
  double Reward(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                const Eigen::VectorXd& next_state) const override;
  std::shared_ptr<const DynamicsModel> TrueModel() const override;

  const MultimodalObjective& objective() const { return objective_; }

 private:
  MultimodalObjective objective_;
  ActionBounds bounds_;
};

// Fixed linear system s' = A s + B a used for planner equivalence checks.
// Reward -||s'||^2 - 0.01 ||a||^2, start (1, 0), actions in [-1, 1].
class LinearTestEnv : public Environment {
 public:
  LinearTestEnv();

  std::string_view name() const override { return "linear_test"; }
  int state_dim() const override { return 2; }
  int action_dim() const override { return 1; }
  const ActionBounds& bounds() const override { return bounds_; }
  Eigen::VectorXd InitialState() const override;
  Eigen::VectorXd Step(const Eigen::VectorXd& s,
                       const Eigen::VectorXd& a) const override;
  double Reward(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                const Eigen::VectorXd& next_state) const override;
  std::shared_ptr<const DynamicsModel> TrueModel() const override;

 private:
  ActionBounds bounds_;
};

// kind in {point_mass, pendulum, multimodal, linear_test}.
std::unique_ptr<Environment> MakeEnvironment(std::string_view kind);

}  // namespace vimpc

#endif  // VIMPC_ENVS_H_
