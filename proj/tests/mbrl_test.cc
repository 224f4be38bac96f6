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

#include "vimpc/mbrl.h"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "vimpc/envs.h"

namespace vimpc {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vimpc_mbrl_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

MbrlConfig TinyConfig(int episodes, int horizon) {
  MbrlConfig cfg;
  cfg.env = "pendulum";
  cfg.episodes = episodes;
  cfg.episode_length = horizon;
  cfg.planner.num_candidates = 20;
  cfg.planner.num_rollouts = 2;
  cfg.planner.iterations = 2;
  cfg.planner.horizon = 5;
  cfg.planner.num_components = 2;
  cfg.planner.optimality.kind = OptimalityKind::kCem;
  cfg.planner.optimality.max_ent = true;
  cfg.planner.optimality.kappa = 0.5;
  cfg.ensemble.ensemble_size = 2;
  cfg.ensemble.hidden = {8};
  cfg.ensemble.epochs = 2;
  cfg.ensemble.batch_size = 16;
  cfg.seed = 3;
  return cfg;
}

TEST(CollectRandomEpisodeTest, CountBoundsAndDeterminism) {
  const PendulumEnv env;
  TransitionDataset a(3, 1), b(3, 1);
  Rng ra(1), rb(1);
  const double reward_a = CollectRandomEpisode(env, 30, ra, &a);
  const double reward_b = CollectRandomEpisode(env, 30, rb, &b);
  ASSERT_EQ(a.size(), 30);
  EXPECT_EQ(reward_a, reward_b);
  double total = 0.0;
  for (int n = 0; n < a.size(); ++n) {
    EXPECT_TRUE(env.bounds().Contains(a.action(n)));
    EXPECT_EQ(a.action(n), b.action(n));
    EXPECT_EQ(env.Step(a.state(n), a.action(n)), a.next_state(n));
    if (n > 0) {
      EXPECT_EQ(a.state(n), a.next_state(n - 1));
    }
    total += env.Reward(a.state(n), a.action(n), a.next_state(n));
  }
  EXPECT_EQ(a.state(0), env.InitialState());
  EXPECT_NEAR(total, reward_a, 1e-9);
  // Actions actually vary.
  EXPECT_NE(a.action(0), a.action(1));
}

TEST(RunMbrlTest, SingleShortEpisode) {
  const MbrlResult result = RunMbrl(TinyConfig(1, 5));
  ASSERT_EQ(result.episodes.size(), 1u);
  EXPECT_EQ(result.episodes[0].episode, 1);
  EXPECT_EQ(result.episodes[0].dataset_size, 10);
  EXPECT_EQ(result.dataset.size(), 10);
  EXPECT_TRUE(std::isfinite(result.episodes[0].validation_nll));
  EXPECT_EQ(result.ensemble.size(), 2);
}

TEST(RunMbrlTest, DatasetGrowsByHorizonAndActionsStayInBounds) {
  const PendulumEnv env;
  const MbrlConfig cfg = TinyConfig(3, 6);
  std::vector<int> sizes;
  const MbrlResult result = RunMbrl(
      cfg, env, [&](const EpisodeRecord& r) { sizes.push_back(r.dataset_size); });
  EXPECT_EQ(sizes, (std::vector<int>{12, 18, 24}));
  for (int n = 0; n < result.dataset.size(); ++n) {
    EXPECT_TRUE(env.bounds().Contains(result.dataset.action(n)));
  }
  // Every episode restarts from the initial state.
  for (int start : {0, 6, 12, 18}) {
    EXPECT_EQ(result.dataset.state(start), env.InitialState());
  }
  for (const EpisodeRecord& r : result.episodes) {
    EXPECT_GT(r.plan_ess_mean, 0.0);
    EXPECT_EQ(r.failed_plans, 0);
    // The recorded total is the sum of true rewards over the episode.
    double total = 0.0;
    const int begin = r.dataset_size - 6;
    for (int n = begin; n < r.dataset_size; ++n) {
      total += env.Reward(result.dataset.state(n), result.dataset.action(n),
                          result.dataset.next_state(n));
    }
    EXPECT_NEAR(total, r.total_reward, 1e-9);
  }
}

TEST(RunMbrlTest, SameSeedSameRun) {
  const MbrlResult a = RunMbrl(TinyConfig(2, 5));
  const MbrlResult b = RunMbrl(TinyConfig(2, 5));
  ASSERT_EQ(a.dataset.size(), b.dataset.size());
  for (int n = 0; n < a.dataset.size(); ++n) {
    EXPECT_EQ(a.dataset.action(n), b.dataset.action(n));
  }
  EXPECT_EQ(a.episodes.back().total_reward, b.episodes.back().total_reward);
  MbrlConfig other = TinyConfig(2, 5);
  other.seed = 4;
  EXPECT_NE(RunMbrl(other).episodes.back().total_reward,
            a.episodes.back().total_reward);
}

TEST(RunMbrlTest, ResumeMatchesUninterruptedRun) {
  const fs::path dir = TempDir("resume");
  MbrlConfig first = TinyConfig(2, 5);
  first.checkpoint_dir = dir.string();
  RunMbrl(first);
  EXPECT_TRUE(fs::exists(dir / "progress.json"));
  EXPECT_TRUE(fs::exists(dir / "dataset.csv"));
  EXPECT_TRUE(fs::exists(dir / "ensemble.json"));

  MbrlConfig resumed = TinyConfig(4, 5);
  resumed.checkpoint_dir = dir.string();
  resumed.resume = true;
  const MbrlResult continued = RunMbrl(resumed);
  const MbrlResult straight = RunMbrl(TinyConfig(4, 5));
  ASSERT_EQ(continued.episodes.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(continued.episodes[i].total_reward, straight.episodes[i].total_reward);
    EXPECT_EQ(continued.episodes[i].validation_nll,
              straight.episodes[i].validation_nll);
  }
  EXPECT_EQ(continued.seed_reward, straight.seed_reward);
  ASSERT_EQ(continued.dataset.size(), straight.dataset.size());
  for (int n = 0; n < straight.dataset.size(); ++n) {
    EXPECT_EQ(continued.dataset.next_state(n), straight.dataset.next_state(n));
  }
  fs::remove_all(dir);
}

TEST(RunMbrlTest, ResumeWithoutCheckpointStartsFresh) {
  const fs::path dir = TempDir("fresh");
  MbrlConfig cfg = TinyConfig(1, 5);
  cfg.checkpoint_dir = dir.string();
  cfg.resume = true;
  EXPECT_EQ(RunMbrl(cfg).episodes[0].total_reward,
            RunMbrl(TinyConfig(1, 5)).episodes[0].total_reward);
  fs::remove_all(dir);
}

TEST(MbrlConfigTest, ValidateNamesField) {
  const EnvSpec spec = PendulumEnv().spec();
  MbrlConfig cfg = TinyConfig(1, 5);
  EXPECT_NO_THROW(cfg.Validate(spec));
  cfg.episodes = -1;
  try {
    cfg.Validate(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.field(), "episodes");
  }
  cfg = TinyConfig(1, 5);
  cfg.resume = true;
  EXPECT_THROW(cfg.Validate(spec), Error);
  cfg = TinyConfig(1, 5);
  cfg.ensemble.ensemble_size = 0;
  EXPECT_THROW(cfg.Validate(spec), Error);
}

// Independent count: distinct cells by sorting flattened indices.
double CoverOracle(const std::vector<Eigen::VectorXd>& points,
                   const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                   int bins) {
  std::vector<long long> ids;
  for (const auto& p : points) {
    long long id = 0;
    for (int d = 0; d < p.size(); ++d) {
      int c = static_cast<int>((p[d] - lo[d]) / (hi[d] - lo[d]) * bins);
      if (p[d] < lo[d]) c = 0;
      c = std::min(std::max(c, 0), bins - 1);
      id = id * bins + c;
    }
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids.size() / std::pow(bins, points.front().size());
}

TEST(CoverRatioTest, MatchesOracleOnRandomClouds) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 1 + rng.UniformInt(4);
    const int bins = 1 + rng.UniformInt(8);
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(dim, -1.0);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(dim, 2.0);
    std::vector<Eigen::VectorXd> points(1 + rng.UniformInt(60));
    for (auto& p : points) {
      p.resize(dim);
      for (int d = 0; d < dim; ++d) p[d] = 0.5 + 1.5 * rng.Normal();
    }
    EXPECT_DOUBLE_EQ(CoverRatio(points, lo, hi, bins),
                     CoverOracle(points, lo, hi, bins));
  }
}

TEST(CoverRatioTest, Examples) {
  const Eigen::VectorXd lo = Eigen::VectorXd::Zero(2);
  const Eigen::VectorXd hi = Eigen::VectorXd::Ones(2);
  EXPECT_EQ(CoverRatio({}, lo, hi, 10), 0.0);
  EXPECT_EQ(CoverRatio({Eigen::Vector2d(0.05, 0.05), Eigen::Vector2d(0.06, 0.01)},
                       lo, hi, 10),
            0.01);
  // Points outside the box land in the edge cells.
  EXPECT_EQ(CoverRatio({Eigen::Vector2d(5.0, -5.0), Eigen::Vector2d(0.95, 0.05)},
                       lo, hi, 10),
            0.01);
  EXPECT_THROW(CoverRatio({}, lo, lo, 10), Error);
}

TEST(DatasetIoTest, RoundTripIsExact) {
  Rng rng(6);
  TransitionDataset data(3, 2);
  for (int n = 0; n < 40; ++n) {
    Eigen::VectorXd s(3), a(2), next(3);
    for (int i = 0; i < 3; ++i) s[i] = std::exp(10.0 * rng.Normal()) * rng.Normal();
    for (int i = 0; i < 2; ++i) a[i] = rng.Normal() / 3.0;
    for (int i = 0; i < 3; ++i) next[i] = rng.Normal() * 1e-300;
    data.Append(s, a, next);
  }
  const fs::path dir = TempDir("io");
  const std::string path = (dir / "d.csv").string();
  SaveDataset(data, path);
  const TransitionDataset back = LoadDataset(path, 3, 2);
  ASSERT_EQ(back.size(), data.size());
  for (int n = 0; n < data.size(); ++n) {
    EXPECT_EQ(back.state(n), data.state(n));
    EXPECT_EQ(back.action(n), data.action(n));
    EXPECT_EQ(back.next_state(n), data.next_state(n));
  }
  EXPECT_THROW(LoadDataset(path, 2, 2), Error);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace vimpc
