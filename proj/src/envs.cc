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

#include "vimpc/envs.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace vimpc {

double ShapingPhi(double z, double z_des) {
  const double dz = z - z_des;
  return std::exp(-dz * dz);
}

double ShapingPsi(double angle) { return 0.5 * (1.0 + std::cos(2.0 * angle)); }

// ------------------------------------------------------------- point mass

PointMassTask PointMassTask::Default() {
  PointMassTask task;
  task.obstacles = {
      {Eigen::Vector2d(0.5, 0.0), 0.2},
      {Eigen::Vector2d(0.5, 0.55), 0.2},
      {Eigen::Vector2d(0.5, -0.55), 0.2},
  };
  return task;
}

void PointMassTask::Validate() const {
  if (!(max_step > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "max_step", "must be > 0");
  }
  for (const Obstacle& o : obstacles) {
    if (!(o.radius > 0.0)) {
      throw Error(ErrorCode::kInvalidConfig, "obstacles.radius",
                  "must be > 0");
    }
  }
}

Eigen::Vector2d ProjectAction(const Eigen::Vector2d& a, double max_step) {
  const double norm = a.norm();
  if (norm <= max_step) return a;
  return a * (max_step / norm);
}

Eigen::Vector2d PointMassStep(const PointMassTask& task,
                              const Eigen::Vector2d& s,
                              const Eigen::Vector2d& a) {
  return s + ProjectAction(a, task.max_step);
}

double PointMassStateReward(const PointMassTask& task,
                            const Eigen::Vector2d& next_state) {
  double penalty = 0.0;
  for (const Obstacle& o : task.obstacles) {
    const double depth =
        std::max(0.0, 1.0 - (next_state - o.center).norm() / o.radius);
    penalty += depth * depth;
  }
  return -(next_state - task.goal).norm() - task.obstacle_cost * penalty;
}

double PointMassReward(const PointMassTask& task, const Eigen::Vector2d& s,
                       const Eigen::Vector2d& a) {
  return PointMassStateReward(task, PointMassStep(task, s, a));
}

// -------------------------------------------------------- multimodal fit

MultimodalObjective MultimodalObjective::Default() {
  return {{{Eigen::Vector2d(-1.0, 0.0), 1.0, 0.3},
           {Eigen::Vector2d(1.0, 0.0), 0.9, 0.3}}};
}

void MultimodalObjective::Validate() const {
  if (modes.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "modes", "need at least one mode");
  }
  for (const Mode& m : modes) {
    if (!(m.height > 0.0) || !(m.width > 0.0)) {
      throw Error(ErrorCode::kInvalidConfig, "modes",
                  "heights and widths must be > 0");
    }
  }
}

double MultimodalEval(const Eigen::Vector2d& a,
                      const MultimodalObjective& obj) {
  double value = 0.0;
  for (const Mode& m : obj.modes) {
    value += m.height * std::exp(-(a - m.center).squaredNorm() /
                                 (2.0 * m.width * m.width));
  }
  return value;
}

// ---------------------------------------------------------------- pendulum

Eigen::Vector3d PendulumState(double theta, double theta_dot) {
  return {std::cos(theta), std::sin(theta), theta_dot};
}

double PendulumAngle(const Eigen::VectorXd& s) {
  return std::atan2(s[1], s[0]);
}

Eigen::Vector3d PendulumStep(const PendulumParams& p, const Eigen::VectorXd& s,
                             double torque) {
  const double u = std::clamp(torque, -p.max_torque, p.max_torque);
  const double theta = PendulumAngle(s);
  const double accel = p.gravity / p.length * std::sin(theta) +
                       u / (p.mass * p.length * p.length);
  const double theta_dot = s[2] + p.dt * accel;
  return PendulumState(theta + p.dt * theta_dot, theta_dot);
}

double PendulumReward(const PendulumParams& p, const Eigen::VectorXd& s,
                      double torque) {
  const double u = std::clamp(torque, -p.max_torque, p.max_torque);
  const double angle = PendulumAngle(s);  // already wrapped to [-pi, pi]
  return -(angle * angle + 0.1 * s[2] * s[2] + 0.001 * u * u);
}

double PendulumEnergy(const PendulumParams& p, const Eigen::VectorXd& s) {
  const double ml2 = p.mass * p.length * p.length;
  return 0.5 * ml2 * s[2] * s[2] + p.mass * p.gravity * p.length * s[0];
}

// ------------------------------------------------------------ environment

PointMassEnv::PointMassEnv(PointMassTask task)
    : task_(std::move(task)),
      bounds_(ActionBounds::Symmetric(2, task_.max_step)) {
  task_.Validate();
}

Eigen::VectorXd PointMassEnv::Step(const Eigen::VectorXd& s,
                                   const Eigen::VectorXd& a) const {
  return PointMassStep(task_, s, a);
}

double PointMassEnv::Reward(const Eigen::VectorXd&, const Eigen::VectorXd&,
                            const Eigen::VectorXd& next_state) const {
  return PointMassStateReward(task_, next_state);
}

std::shared_ptr<const DynamicsModel> PointMassEnv::TrueModel() const {
  return std::make_shared<DeterministicModel>(
      2, 2, [task = task_](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
        return Eigen::VectorXd(PointMassStep(task, s, a));
      });
}

PendulumEnv::PendulumEnv(PendulumParams params)
    : params_(params), bounds_(ActionBounds::Symmetric(1, params.max_torque)) {}

Eigen::VectorXd PendulumEnv::InitialState() const {
  return PendulumState(std::numbers::pi, 0.0);
}

Eigen::VectorXd PendulumEnv::Step(const Eigen::VectorXd& s,
                                  const Eigen::VectorXd& a) const {
  return PendulumStep(params_, s, a[0]);
}

double PendulumEnv::Reward(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                           const Eigen::VectorXd&) const {
  return PendulumReward(params_, s, a[0]);
}

std::shared_ptr<const DynamicsModel> PendulumEnv::TrueModel() const {
  return std::make_shared<DeterministicModel>(
      3, 1, [p = params_](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
        return Eigen::VectorXd(PendulumStep(p, s, a[0]));
      });
}

MultimodalEnv::MultimodalEnv(MultimodalObjective objective,
                             double action_limit)
    : objective_(std::move(objective)),
      bounds_(ActionBounds::Symmetric(2, action_limit)) {
  objective_.Validate();
}

Eigen::VectorXd MultimodalEnv::InitialState() const {
  return Eigen::VectorXd::Zero(1);
}

Eigen::VectorXd MultimodalEnv::Step(const Eigen::VectorXd& s,
                                    const Eigen::VectorXd&) const {
  return s;
}

double MultimodalEnv::Reward(const Eigen::VectorXd&, const Eigen::VectorXd& a,
                             const Eigen::VectorXd&) const {
  return MultimodalEval(a, objective_);
}

std::shared_ptr<const DynamicsModel> MultimodalEnv::TrueModel() const {
  return std::make_shared<DeterministicModel>(
      1, 2, [](const Eigen::VectorXd& s, const Eigen::VectorXd&) { return s; });
}

LinearTestEnv::LinearTestEnv() : bounds_(ActionBounds::Symmetric(1, 1.0)) {}

Eigen::VectorXd LinearTestEnv::InitialState() const {
  return Eigen::Vector2d(1.0, 0.0);
}

Eigen::VectorXd LinearTestEnv::Step(const Eigen::VectorXd& s,
                                    const Eigen::VectorXd& a) const {
  return LinearTestA() * s + LinearTestB() * a;
}

double LinearTestEnv::Reward(const Eigen::VectorXd&, const Eigen::VectorXd& a,
                             const Eigen::VectorXd& next_state) const {
  return -next_state.squaredNorm() - 0.01 * a.squaredNorm();
}

std::shared_ptr<const DynamicsModel> LinearTestEnv::TrueModel() const {
  return MakeAnalyticModel("linear_test");
}

std::unique_ptr<Environment> MakeEnvironment(std::string_view kind) {
  if (kind == "point_mass") return std::make_unique<PointMassEnv>();
  if (kind == "pendulum") return std::make_unique<PendulumEnv>();
  if (kind == "multimodal") return std::make_unique<MultimodalEnv>();
  if (kind == "linear_test") return std::make_unique<LinearTestEnv>();
  throw Error(ErrorCode::kUnknownKind, "env",
              "unknown environment '" + std::string(kind) + "'");
}

}  // namespace vimpc
