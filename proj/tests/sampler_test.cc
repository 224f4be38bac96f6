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

#include "vimpc/sampler.h"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "vimpc/random.h"

namespace vimpc {
namespace {

// s' ~ N(s + offset + a, variance) per coordinate.
class ShiftModel : public DynamicsModel {
 public:
  ShiftModel(int ds, double offset, double variance)
      : ds_(ds), offset_(offset), variance_(variance) {}
  int state_dim() const override { return ds_; }
  int action_dim() const override { return ds_; }
  void PredictBatch(const Eigen::MatrixXd& states,
                    const Eigen::MatrixXd& actions, Eigen::MatrixXd* mean,
                    Eigen::MatrixXd* variance) const override {
    *mean = (states + actions).array() + offset_;
    *variance = Eigen::MatrixXd::Constant(ds_, states.cols(), variance_);
  }

 private:
  int ds_;
  double offset_;
  double variance_;
};

std::vector<ActionSequence> RandomActions(Rng& rng, int k, int t, int da) {
  std::vector<ActionSequence> actions;
  for (int i = 0; i < k; ++i) {
    ActionSequence a(t, da);
    for (int j = 0; j < a.size(); ++j) a.values()[j] = rng.Normal();
    actions.push_back(a);
  }
  return actions;
}

double NegNorm(const Eigen::VectorXd&, const Eigen::VectorXd&,
               const Eigen::VectorXd& next) {
  return -next.norm();
}

TEST(Ts1RolloutTest, DeterministicModelGivesIdenticalRollouts) {
  const EnsemblePosterior posterior =
      SingleModelPosterior(std::make_shared<ShiftModel>(2, 0.0, 0.0));
  Rng rng(1);
  const auto actions = RandomActions(rng, 4, 6, 2);
  const TrajectoryBatch batch = Ts1Rollout(
      posterior, Eigen::Vector2d(0.5, -0.5), actions, {4, 3, 6, 17}, NegNorm);
  for (int k = 0; k < 4; ++k) {
    for (int i = 1; i < 3; ++i) {
      EXPECT_EQ(batch.rewards(k, i), batch.rewards(k, 0));
      for (int t = 0; t <= 6; ++t) {
        EXPECT_EQ(batch.StateVector(k, i, t), batch.StateVector(k, 0, t));
      }
    }
  }
}

TEST(Ts1RolloutTest, OneStepClosedForm) {
  const EnsemblePosterior posterior =
      SingleModelPosterior(std::make_shared<ShiftModel>(1, 0.0, 0.0));
  std::vector<ActionSequence> actions;
  for (double a : {-2.0, 0.5, 3.0}) {
    actions.emplace_back(1, 1, Eigen::VectorXd::Constant(1, a));
  }
  const TrajectoryBatch batch =
      Ts1Rollout(posterior, Eigen::VectorXd::Constant(1, 1.0), actions,
                 {3, 2, 1, 0}, NegNorm);
  // s' = 1 + a, reward -|s'|.
  EXPECT_EQ(batch.rewards(0, 0), -1.0);
  EXPECT_EQ(batch.rewards(1, 1), -1.5);
  EXPECT_EQ(batch.rewards(2, 0), -4.0);
}

TEST(Ts1RolloutTest, ModelIndexUniformPerStep) {
  // Member e adds e to the state, so each step's increment names the member.
  std::vector<std::shared_ptr<const DynamicsModel>> members;
  for (int e = 0; e < 5; ++e) {
    members.push_back(std::make_shared<ShiftModel>(1, e, 0.0));
  }
  const EnsemblePosterior posterior(members);
  std::vector<ActionSequence> actions(100, ActionSequence(10, 1));
  const TrajectoryBatch batch = Ts1Rollout(
      posterior, Eigen::VectorXd::Zero(1), actions, {100, 10, 10, 5},
      [](const auto&, const auto&, const auto&) { return 0.0; });
  std::vector<int> counts(5, 0);
  int switches = 0;
  for (int k = 0; k < 100; ++k) {
    for (int i = 0; i < 10; ++i) {
      int prev = -1;
      for (int t = 0; t < 10; ++t) {
        const int e = static_cast<int>(
            std::lround(batch.state(k, i, t + 1)[0] - batch.state(k, i, t)[0]));
        ASSERT_GE(e, 0);
        ASSERT_LT(e, 5);
        ++counts[e];
        switches += prev >= 0 && prev != e;
        prev = e;
      }
    }
  }
  for (int c : counts) EXPECT_NEAR(c / 10000.0, 0.2, 0.01);
  // Resampled every step, so members change within a rollout.
  EXPECT_GT(switches, 5000);
}

TEST(Ts1RolloutTest, RewardEqualsRewalkOfRecordedStates) {
  std::vector<std::shared_ptr<const DynamicsModel>> members;
  for (int e = 0; e < 3; ++e) {
    members.push_back(std::make_shared<ShiftModel>(2, 0.1 * e, 0.05));
  }
  const EnsemblePosterior posterior(members);
  Rng rng(2);
  const auto actions = RandomActions(rng, 8, 7, 2);
  const RewardFn reward = [](const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                             const Eigen::VectorXd& next) {
    return -next.squaredNorm() + 0.3 * s[0] - 0.01 * a.squaredNorm();
  };
  const TrajectoryBatch batch = Ts1Rollout(
      posterior, Eigen::Vector2d(0.2, 0.1), actions, {8, 4, 7, 99}, reward);
  for (int k = 0; k < 8; ++k) {
    for (int i = 0; i < 4; ++i) {
      EXPECT_EQ(batch.StateVector(k, i, 0), Eigen::Vector2d(0.2, 0.1));
      double total = 0.0;
      for (int t = 0; t < 7; ++t) {
        total += reward(batch.StateVector(k, i, t), actions[k].step(t),
                        batch.StateVector(k, i, t + 1));
      }
      EXPECT_EQ(batch.rewards(k, i), total);
    }
  }
}

TEST(Ts1RolloutTest, ThreadCountDoesNotChangeOutput) {
  std::vector<std::shared_ptr<const DynamicsModel>> members;
  for (int e = 0; e < 4; ++e) {
    members.push_back(std::make_shared<ShiftModel>(2, 0.05 * e, 0.1));
  }
  const EnsemblePosterior posterior(members);
  Rng rng(3);
  const auto actions = RandomActions(rng, 13, 5, 2);
  const RolloutPlan plan{13, 7, 5, 1234};
  const TrajectoryBatch one =
      Ts1Rollout(posterior, Eigen::Vector2d::Zero(), actions, plan, NegNorm,
                 {1, -1e6});
  for (int threads : {2, 3, 8}) {
    const TrajectoryBatch many =
        Ts1Rollout(posterior, Eigen::Vector2d::Zero(), actions, plan, NegNorm,
                   {threads, -1e6});
    EXPECT_EQ(many.states, one.states);
    EXPECT_EQ(many.rewards, one.rewards);
  }
  const TrajectoryBatch other_seed =
      Ts1Rollout(posterior, Eigen::Vector2d::Zero(), actions,
                 {13, 7, 5, 1235}, NegNorm);
  EXPECT_NE(other_seed.states, one.states);
}

class ExplodingModel : public DynamicsModel {
 public:
  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  void PredictBatch(const Eigen::MatrixXd& states,
                    const Eigen::MatrixXd& actions, Eigen::MatrixXd* mean,
                    Eigen::MatrixXd* variance) const override {
    *mean = states + actions;
    for (int c = 0; c < mean->cols(); ++c) {
      if ((*mean)(0, c) > 2.0) {
        (*mean)(0, c) = std::numeric_limits<double>::infinity();
      }
    }
    *variance = Eigen::MatrixXd::Zero(1, states.cols());
  }
};

TEST(Ts1RolloutTest, NonFiniteRolloutIsFlaggedAndFloored) {
  const EnsemblePosterior posterior(
      std::vector<std::shared_ptr<const DynamicsModel>>{
          std::make_shared<ExplodingModel>()});
  std::vector<ActionSequence> actions;
  actions.emplace_back(3, 1, Eigen::Vector3d(1.0, 1.0, 1.0));  // explodes at t=2
  actions.emplace_back(3, 1, Eigen::Vector3d(0.1, 0.1, 0.1));
  const TrajectoryBatch batch =
      Ts1Rollout(posterior, Eigen::VectorXd::Zero(1), actions, {2, 2, 3, 0},
                 NegNorm, {1, -777.0});
  EXPECT_TRUE(batch.flagged(0, 0));
  EXPECT_TRUE(batch.flagged(0, 1));
  EXPECT_FALSE(batch.flagged(1, 0));
  EXPECT_EQ(batch.rewards(0, 0), -777.0);
  EXPECT_TRUE(std::isnan(batch.state(0, 0, 3)[0]));
  EXPECT_NEAR(batch.rewards(1, 0), -(0.1 + 0.2 + 0.3), 1e-12);
}

TEST(Ts1RolloutTest, RejectsBadArguments) {
  const EnsemblePosterior posterior =
      SingleModelPosterior(std::make_shared<ShiftModel>(1, 0.0, 0.0));
  std::vector<ActionSequence> actions(2, ActionSequence(3, 1));
  EXPECT_THROW(Ts1Rollout(posterior, Eigen::VectorXd::Zero(1), actions,
                          {3, 1, 3, 0}, NegNorm),
               Error);
  EXPECT_THROW(Ts1Rollout(posterior, Eigen::VectorXd::Constant(1, NAN), actions,
                          {2, 1, 3, 0}, NegNorm),
               Error);
  EXPECT_THROW(Ts1Rollout(EnsemblePosterior(), Eigen::VectorXd::Zero(1),
                          actions, {2, 1, 3, 0}, NegNorm),
               Error);
}

}  // namespace
}  // namespace vimpc
