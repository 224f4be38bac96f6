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

#include "vimpc/mlp.h"

#include <cmath>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "vimpc/envs.h"
#include "vimpc/random.h"

namespace vimpc {
namespace {

Eigen::MatrixXd RandomMatrix(Rng& rng, int rows, int cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.Normal();
  return m;
}

double Sym(Rng& rng) { return 2.0 * rng.Uniform() - 1.0; }

TransitionDataset LinearData(Rng& rng, int n) {
  LinearTestEnv env;
  TransitionDataset data(2, 1);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d s(Sym(rng), Sym(rng));
    const Eigen::VectorXd a = Eigen::VectorXd::Constant(1, Sym(rng));
    data.Append(s, a, env.Step(s, a));
  }
  return data;
}

TEST(MlpModelTest, ZeroNetworkPredictsNoChange) {
  MlpModel model(2, 1, {8, 8});
  EXPECT_TRUE((model.parameters().array() == 0.0).all());
  Eigen::MatrixXd mean, var;
  Eigen::MatrixXd states(2, 2);
  states << 0.5, -1.0, 2.0, 3.0;
  model.PredictBatch(states, Eigen::MatrixXd::Ones(1, 2), &mean, &var);
  EXPECT_EQ(mean, states);
  EXPECT_TRUE((var.array() > std::exp(-10.0)).all());
  EXPECT_TRUE((var.array() < std::exp(4.0)).all());
}

TEST(MlpModelTest, LogVarianceStaysInsideBounds) {
  Rng rng(1);
  MlpModel model(3, 2, {16}, -5.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    model.set_parameters(
        RandomMatrix(rng, model.num_parameters(), 1, 20.0).col(0));
    Eigen::MatrixXd mean, log_var;
    model.Forward(RandomMatrix(rng, 5, 30, 10.0), &mean, &log_var);
    EXPECT_TRUE(log_var.allFinite());
    EXPECT_GE(log_var.minCoeff(), -5.0);
    // The soft upper clamp can overshoot by log1p(exp(-(hi - lo))).
    EXPECT_LE(log_var.maxCoeff(), 1.0 + std::log1p(std::exp(-6.0)));
  }
}

TEST(MlpModelTest, SetParametersRejectsWrongSize) {
  MlpModel model(2, 1, {4});
  EXPECT_THROW(model.set_parameters(Eigen::VectorXd::Zero(3)), Error);
}

TEST(MlpModelTest, AnalyticGradientMatchesFiniteDifferences) {
  Rng rng(2);
  for (int trial = 0; trial < 3; ++trial) {
    MlpModel model(2, 1, {5, 4});
    model.InitializeRandom(rng);
    const Eigen::MatrixXd z = RandomMatrix(rng, 3, 7, 1.0);
    const Eigen::MatrixXd y = RandomMatrix(rng, 2, 7, 1.0);
    Eigen::VectorXd grad;
    model.Loss(z, y, 0.01, &grad);
    Eigen::VectorXd params = model.parameters();
    const double h = 1e-5;
    for (int p = 0; p < params.size(); ++p) {
      MlpModel probe = model;
      Eigen::VectorXd shifted = params;
      shifted[p] += h;
      probe.set_parameters(shifted);
      const double plus = probe.Loss(z, y, 0.01, nullptr);
      shifted[p] -= 2.0 * h;
      probe.set_parameters(shifted);
      const double minus = probe.Loss(z, y, 0.01, nullptr);
      const double fd = (plus - minus) / (2.0 * h);
      EXPECT_NEAR(grad[p], fd, 1e-6 * std::max(1.0, std::abs(fd))) << p;
    }
  }
}

TEST(MlpModelTest, LossMatchesGaussianNllOnIdentityNormalization) {
  // With identity normalization the per-sample training loss is the
  // evaluation NLL without the log(2 pi) term.
  Rng rng(3);
  MlpModel model(2, 1, {6});
  model.InitializeRandom(rng);
  const TransitionDataset data = LinearData(rng, 25);
  const double loss = model.Loss(data.Inputs(), data.Deltas(), 0.0, nullptr);
  const double nll = GaussianNll(model, data);
  EXPECT_NEAR(nll, loss + std::log(2.0 * std::numbers::pi), 1e-10);
}

TEST(GaussianNllTest, MatchesHandComputation) {
  class Fixed : public DynamicsModel {
   public:
    int state_dim() const override { return 1; }
    int action_dim() const override { return 1; }
    void PredictBatch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                      Eigen::MatrixXd* mean, Eigen::MatrixXd* var) const override {
      *mean = s + a;
      *var = Eigen::MatrixXd::Constant(1, s.cols(), 2.0);
    }
  };
  TransitionDataset data(1, 1);
  data.Append(Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0),
              Eigen::VectorXd::Constant(1, 2.0));
  data.Append(Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 0.0),
              Eigen::VectorXd::Constant(1, 1.0));
  // Residuals 1 and 0 under N(., 2).
  const double expected =
      0.5 * (std::log(2.0 * std::numbers::pi * 2.0) + 0.5) * 0.5 +
      0.5 * std::log(2.0 * std::numbers::pi * 2.0) * 0.5;
  EXPECT_NEAR(GaussianNll(Fixed(), data), expected, 1e-14);
}

EnsembleConfig SmallConfig() {
  EnsembleConfig cfg;
  cfg.ensemble_size = 3;
  cfg.hidden = {32, 32};
  cfg.learning_rate = 3e-3;
  cfg.batch_size = 32;
  cfg.epochs = 60;
  cfg.weight_decay = 0.0;
  return cfg;
}

TEST(TrainEnsembleTest, LossDecreasesAndLinearSystemIsFit) {
  Rng rng(4);
  const TransitionDataset train = LinearData(rng, 400);
  const TransitionDataset test = LinearData(rng, 100);
  EnsembleConfig cfg = SmallConfig();
  cfg.epochs = 150;
  TrainingLog log;
  const MlpEnsemble ensemble = TrainEnsemble(train, cfg, rng, &log);
  ASSERT_EQ(log.epoch_loss.size(), 3u);
  LinearTestEnv env;
  for (int e = 0; e < ensemble.size(); ++e) {
    EXPECT_LT(log.epoch_loss[e].back(), log.epoch_loss[e].front());
    double sq = 0.0;
    for (int n = 0; n < test.size(); ++n) {
      const Eigen::VectorXd pred =
          ensemble.member(e).PredictMean(test.state(n), test.action(n));
      sq += (pred - test.next_state(n)).squaredNorm();
    }
    EXPECT_LT(std::sqrt(sq / test.size()), 1e-2) << "member " << e;
  }
}

TEST(TrainEnsembleTest, MembersDifferAndTrainingIsDeterministic) {
  Rng data_rng(5);
  const TransitionDataset data = LinearData(data_rng, 60);
  EnsembleConfig cfg = SmallConfig();
  cfg.epochs = 5;
  Rng a(10), b(10);
  const MlpEnsemble ea = TrainEnsemble(data, cfg, a);
  cfg.threads = 3;
  const MlpEnsemble eb = TrainEnsemble(data, cfg, b);
  for (int e = 0; e < 3; ++e) {
    EXPECT_EQ(ea.member(e).parameters(), eb.member(e).parameters());
  }
  EXPECT_NE(ea.member(0).parameters(), ea.member(1).parameters());
  EXPECT_EQ(a.Serialize(), b.Serialize());
}

TEST(TrainEnsembleTest, MembersDisagreeMoreAwayFromData) {
  // Inputs only cover [-1, 1]; far outside, nothing pins the members down.
  Rng rng(6);
  const TransitionDataset data = LinearData(rng, 200);
  const MlpEnsemble ensemble = TrainEnsemble(data, SmallConfig(), rng);
  auto spread = [&](const Eigen::Vector2d& s, double a) {
    const Eigen::VectorXd action = Eigen::VectorXd::Constant(1, a);
    Eigen::Vector2d sum = Eigen::Vector2d::Zero(), sum_sq = Eigen::Vector2d::Zero();
    for (int e = 0; e < ensemble.size(); ++e) {
      const Eigen::VectorXd p = ensemble.member(e).PredictMean(s, action);
      sum += p;
      sum_sq += p.cwiseProduct(p);
    }
    const Eigen::Vector2d mean = sum / ensemble.size();
    return (sum_sq / ensemble.size() - mean.cwiseProduct(mean)).sum();
  };
  EXPECT_GT(spread(Eigen::Vector2d(8.0, -8.0), 8.0),
            10.0 * spread(Eigen::Vector2d(0.2, -0.1), 0.3));
}

TEST(TrainEnsembleTest, RejectsEmptyData) {
  Rng rng(0);
  EXPECT_THROW(TrainEnsemble(TransitionDataset(2, 1), SmallConfig(), rng), Error);
}

TEST(MlpEnsembleTest, CheckpointRoundTripIsExact) {
  Rng rng(7);
  const TransitionDataset data = LinearData(rng, 40);
  EnsembleConfig cfg = SmallConfig();
  cfg.epochs = 3;
  const MlpEnsemble original = TrainEnsemble(data, cfg, rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "vimpc_mlp_checkpoint.json")
          .string();
  original.Save(path);
  const MlpEnsemble loaded = MlpEnsemble::Load(path);
  std::filesystem::remove(path);
  ASSERT_EQ(loaded.size(), original.size());
  for (int e = 0; e < loaded.size(); ++e) {
    EXPECT_EQ(loaded.member(e).parameters(), original.member(e).parameters());
    EXPECT_EQ(loaded.member(e).hidden(), original.member(e).hidden());
    EXPECT_EQ(loaded.member(e).normalization().target_std,
              original.member(e).normalization().target_std);
  }
  EXPECT_EQ(EnsembleNll(loaded.ToPosterior(), data),
            EnsembleNll(original.ToPosterior(), data));
  EXPECT_EQ(loaded.ToJson(), original.ToJson());
}

TEST(MlpEnsembleTest, FromJsonRejectsBadInput) {
  EXPECT_THROW(MlpEnsemble::FromJson("not json"), Error);
  EXPECT_THROW(MlpEnsemble::FromJson(R"json({"version": 99, "members": []})json"),
               Error);
  EXPECT_THROW(MlpEnsemble::Load("/nonexistent/ckpt.json"), Error);
}

}  // namespace
}  // namespace vimpc
