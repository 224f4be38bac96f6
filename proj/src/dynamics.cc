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

#include "vimpc/dynamics.h"

#include <string>
#include <utility>

#include "vimpc/envs.h"

namespace vimpc {

Eigen::VectorXd DynamicsModel::PredictMean(
    const Eigen::VectorXd& state, const Eigen::VectorXd& action) const {
  Eigen::MatrixXd mean, var;
  PredictBatch(state, action, &mean, &var);
  return mean.col(0);
}

DeterministicModel::DeterministicModel(int state_dim, int action_dim,
                                       StepFn step)
    : state_dim_(state_dim), action_dim_(action_dim), step_(std::move(step)) {}

void DeterministicModel::PredictBatch(const Eigen::MatrixXd& states,
                                      const Eigen::MatrixXd& actions,
                                      Eigen::MatrixXd* mean,
                                      Eigen::MatrixXd* variance) const {
  const int n = static_cast<int>(states.cols());
  mean->resize(state_dim_, n);
  for (int i = 0; i < n; ++i) {
    mean->col(i) = step_(states.col(i), actions.col(i));
  }
  variance->setZero(state_dim_, n);
}

EnsemblePosterior::EnsemblePosterior(
    std::vector<std::shared_ptr<const DynamicsModel>> particles)
    : particles_(std::move(particles)) {
  if (particles_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "posterior",
                "ensemble needs at least one particle");
  }
  for (const auto& p : particles_) {
    if (p->state_dim() != particles_.front()->state_dim() ||
        p->action_dim() != particles_.front()->action_dim()) {
      throw Error(ErrorCode::kInvalidArgument, "posterior",
                  "particles disagree on input or output dimension");
    }
  }
}

EnsemblePosterior SingleModelPosterior(
    std::shared_ptr<const DynamicsModel> model) {
  return EnsemblePosterior({std::move(model)});
}

Eigen::Matrix2d LinearTestA() {
  Eigen::Matrix2d a;
  a << 1.0, 0.1, 0.0, 0.95;
  return a;
}

Eigen::Vector2d LinearTestB() { return Eigen::Vector2d(0.0, 0.1); }

std::shared_ptr<const DynamicsModel> MakeAnalyticModel(std::string_view kind) {
  if (kind == "point_mass") return PointMassEnv().TrueModel();
  if (kind == "pendulum") return PendulumEnv().TrueModel();
  if (kind == "linear_test") {
    return std::make_shared<DeterministicModel>(
        2, 1, [](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
          return Eigen::VectorXd(LinearTestA() * s + LinearTestB() * a);
        });
  }
  throw Error(ErrorCode::kUnknownKind, "kind",
              "unknown analytic model '" + std::string(kind) + "'");
}

Normalization Normalization::Identity(int input_dim, int target_dim) {
  return {Eigen::VectorXd::Zero(input_dim), Eigen::VectorXd::Ones(input_dim),
          Eigen::VectorXd::Zero(target_dim), Eigen::VectorXd::Ones(target_dim)};
}

Eigen::MatrixXd Normalization::NormalizeInputs(const Eigen::MatrixXd& x) const {
  return (x.colwise() - input_mean).array().colwise() / input_std.array();
}

Eigen::MatrixXd Normalization::DenormalizeInputs(
    const Eigen::MatrixXd& z) const {
  return (z.array().colwise() * input_std.array()).matrix().colwise() +
         input_mean;
}

Eigen::MatrixXd Normalization::NormalizeTargets(
    const Eigen::MatrixXd& y) const {
  return (y.colwise() - target_mean).array().colwise() / target_std.array();
}

Eigen::MatrixXd Normalization::DenormalizeTargets(
    const Eigen::MatrixXd& z) const {
  return (z.array().colwise() * target_std.array()).matrix().colwise() +
         target_mean;
}

TransitionDataset::TransitionDataset(int state_dim, int action_dim)
    : state_dim_(state_dim), action_dim_(action_dim) {}

void TransitionDataset::Append(const Eigen::VectorXd& state,
                               const Eigen::VectorXd& action,
                               const Eigen::VectorXd& next_state) {
  if (state.size() != state_dim_ || next_state.size() != state_dim_ ||
      action.size() != action_dim_) {
    throw Error(ErrorCode::kInvalidArgument, "transition",
                "record dimensions do not match the dataset");
  }
  if (!state.allFinite() || !action.allFinite() || !next_state.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "transition",
                "records must be finite");
  }
  states_.push_back(state);
  actions_.push_back(action);
  next_states_.push_back(next_state);
}

Eigen::MatrixXd TransitionDataset::Inputs() const {
  Eigen::MatrixXd x(state_dim_ + action_dim_, size());
  for (int n = 0; n < size(); ++n) {
    x.col(n).head(state_dim_) = states_[n];
    x.col(n).tail(action_dim_) = actions_[n];
  }
  return x;
}

Eigen::MatrixXd TransitionDataset::Deltas() const {
  Eigen::MatrixXd y(state_dim_, size());
  for (int n = 0; n < size(); ++n) y.col(n) = next_states_[n] - states_[n];
  return y;
}

namespace {

void MeanAndStd(const Eigen::MatrixXd& x, Eigen::VectorXd* mean,
                Eigen::VectorXd* std) {
  *mean = x.rowwise().mean();
  const Eigen::MatrixXd centered = x.colwise() - *mean;
  *std = (centered.array().square().rowwise().sum() /
          static_cast<double>(x.cols()))
             .sqrt()
             .matrix()
             .cwiseMax(kNormalizationStdFloor);
}

}  // namespace

Normalization TransitionDataset::ComputeNormalization() const {
  if (empty()) {
    throw Error(ErrorCode::kInsufficientData, "dataset", "dataset is empty");
  }
  Normalization norm;
  MeanAndStd(Inputs(), &norm.input_mean, &norm.input_std);
  MeanAndStd(Deltas(), &norm.target_mean, &norm.target_std);
  return norm;
}

}  // namespace vimpc
