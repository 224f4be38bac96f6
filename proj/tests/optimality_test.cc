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

#include "vimpc/optimality.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "vimpc/random.h"

namespace vimpc {
namespace {

TrajectoryBatch BatchFromRewards(const Eigen::MatrixXd& rewards) {
  TrajectoryBatch batch(rewards.rows(), rewards.cols(), 1, 1);
  batch.rewards = rewards;
  return batch;
}

Eigen::VectorXd Vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Eigen::VectorXd RandomRewards(Rng& rng, int k) {
  Eigen::VectorXd r(k);
  for (int i = 0; i < k; ++i) {
    // Occasional exact ties exercise the tie-breaking rules.
    r[i] = rng.Uniform() < 0.2 ? 1.0 : 10.0 * rng.Normal();
  }
  return r;
}

TEST(EstimateWPrimeTest, MeansOverRollouts) {
  Eigen::MatrixXd one(1, 1);
  one << 5.0;
  EXPECT_DOUBLE_EQ(EstimateWPrime(BatchFromRewards(one))[0], 5.0);

  Eigen::MatrixXd two(1, 2);
  two << 1.0, 3.0;
  EXPECT_DOUBLE_EQ(EstimateWPrime(BatchFromRewards(two))[0], 2.0);

  Eigen::MatrixXd three(2, 3);
  three << 0, 0, 3, 1, 1, 1;
  const RewardVector r = EstimateWPrime(BatchFromRewards(three));
  EXPECT_DOUBLE_EQ(r[0], 1.0);
  EXPECT_DOUBLE_EQ(r[1], 1.0);
}

TEST(EstimateWPrimeTest, EmptyBatchThrows) {
  try {
    EstimateWPrime(TrajectoryBatch(0, 3, 1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyBatch);
  }
  EXPECT_THROW(EstimateWPrime(TrajectoryBatch(2, 0, 1, 1)), Error);
}

TEST(TransformCemTest, SingleEliteFromTenPercent) {
  const Eigen::VectorXd w =
      TransformCem(Vec({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), 0.1);
  EXPECT_EQ(w, Vec({0, 0, 0, 0, 0, 0, 0, 0, 0, 1}));
}

TEST(TransformCemTest, TiesBrokenByLowestIndex) {
  EXPECT_EQ(TransformCem(Vec({7, 7, 7}), 0.34), Vec({1, 0, 0}));
}

TEST(TransformCemTest, HalfElites) {
  EXPECT_EQ(TransformCem(Vec({3, 9, 5, 1}), 0.5), Vec({0, 1, 1, 0}));
}

TEST(TransformCemTest, AtLeastOneElite) {
  EXPECT_EQ(EliteCount(5, 0.01), 1);
  EXPECT_EQ(EliteCount(500, 0.1), 50);
  EXPECT_EQ(EliteCount(3, 0.34), 1);
  EXPECT_EQ(TransformCem(Vec({2, 1}), 0.01).sum(), 1.0);
}

TEST(TransformMppiTest, DegenerateRangeGivesOnes) {
  for (double c : {-3.0, 0.0, 1e9}) {
    EXPECT_EQ(TransformMppi(Vec({c, c, c}), 0.1), Vec({1, 1, 1}));
  }
}

TEST(TransformMppiTest, TwoPointRange) {
  const Eigen::VectorXd w = TransformMppi(Vec({0, 1}), 0.1);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
  EXPECT_NEAR(w[1], 22026.465794806718, 1e-9);
}

TEST(TransformMppiTest, ThreePoint) {
  const Eigen::VectorXd w = TransformMppi(Vec({0, 5, 10}), 1.0);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
  EXPECT_NEAR(w[1], std::exp(0.5), 1e-15);
  EXPECT_NEAR(w[2], std::exp(1.0), 1e-15);
}

TEST(TransformPropCemTest, Examples) {
  EXPECT_EQ(TransformPropCem(Vec({0, 5, 10})), Vec({0, 0.5, 1}));
  EXPECT_EQ(TransformPropCem(Vec({4, 4})), Vec({0.5, 0.5}));
  const Eigen::VectorXd w = TransformPropCem(Vec({2, 4, 8}));
  EXPECT_DOUBLE_EQ(w[0], 0.0);
  EXPECT_NEAR(w[1], 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(w[2], 1.0);
}

TEST(TransformCmaEsTest, Examples) {
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(10);
  expected[9] = std::log(2.0);
  EXPECT_EQ(TransformCmaEs(Vec({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), 0.1),
            expected);

  const Eigen::VectorXd two = TransformCmaEs(Vec({5, 9}), 1.0);
  EXPECT_DOUBLE_EQ(two[0], std::log(2.0));
  EXPECT_DOUBLE_EQ(two[1], std::log(3.0));

  const Eigen::VectorXd ties = TransformCmaEs(Vec({1, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(ties[0], std::log(4.0));
  EXPECT_DOUBLE_EQ(ties[1], std::log(3.0));
  EXPECT_DOUBLE_EQ(ties[2], std::log(2.0));
}

// Independent sort-based oracle for the elite transforms.
std::vector<int> OracleOrder(const Eigen::VectorXd& r) {
  std::vector<int> idx(r.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return r[a] > r[b] || (r[a] == r[b] && a < b);
  });
  return idx;
}

TEST(TransformPropertyTest, EliteTransformsMatchSortOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 1 + rng.UniformInt(40);
    const double e = 0.01 + 0.99 * rng.Uniform();
    const Eigen::VectorXd r = RandomRewards(rng, k);
    const int n_e = std::max(1, static_cast<int>(std::floor(e * k + 1e-9)));
    const std::vector<int> order = OracleOrder(r);
    Eigen::VectorXd cem = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd cma = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < n_e; ++i) {
      cem[order[i]] = 1.0;
      cma[order[i]] = std::log(1.0 + (n_e + 1 - (i + 1)));
    }
    EXPECT_EQ(TransformCem(r, e), cem);
    EXPECT_EQ(TransformCmaEs(r, e), cma);
  }
}

TEST(TransformPropertyTest, Monotone) {
  Rng rng(22);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + rng.UniformInt(30);
    const Eigen::VectorXd r = RandomRewards(rng, k);
    const double e = 0.05 + 0.95 * rng.Uniform();
    const Eigen::VectorXd mppi = TransformMppi(r, 0.05 + rng.Uniform());
    const Eigen::VectorXd prop = TransformPropCem(r);
    const Eigen::VectorXd cem = TransformCem(r, e);
    const Eigen::VectorXd cma = TransformCmaEs(r, e);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        if (r[a] < r[b]) continue;
        EXPECT_GE(mppi[a], mppi[b]);
        EXPECT_GE(prop[a], prop[b]);
        // Among elites a higher reward never gets a lower weight; ties at
        // the threshold may split by index, so only strict order counts.
        if (r[a] > r[b]) {
          EXPECT_GE(cem[a], cem[b]);
          EXPECT_GE(cma[a], cma[b]);
        }
      }
    }
  }
}

TEST(TransformPropertyTest, MppiAndPropCemAffineInvariant) {
  Rng rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + rng.UniformInt(30);
    const Eigen::VectorXd r = RandomRewards(rng, k);
    const double alpha = std::exp(2.0 * rng.Normal());
    const double beta = 100.0 * rng.Normal();
    const Eigen::VectorXd mapped = (alpha * r.array() + beta).matrix();
    const double lambda = 0.1 + rng.Uniform();
    const Eigen::VectorXd m1 = TransformMppi(r, lambda);
    const Eigen::VectorXd m2 = TransformMppi(mapped, lambda);
    const Eigen::VectorXd p1 = TransformPropCem(r);
    const Eigen::VectorXd p2 = TransformPropCem(mapped);
    for (int i = 0; i < k; ++i) {
      EXPECT_NEAR(m2[i] / m1[i], 1.0, 1e-9);
      EXPECT_NEAR(p2[i], p1[i], 1e-9);
    }
  }
}

TEST(TransformPropertyTest, MppiRange) {
  Rng rng(24);
  for (int trial = 0; trial < 300; ++trial) {
    const double lambda = 0.05 + 2.0 * rng.Uniform();
    const Eigen::VectorXd w =
        TransformMppi(RandomRewards(rng, 1 + rng.UniformInt(30)), lambda);
    EXPECT_GE(w.minCoeff(), 1.0);
    EXPECT_LE(w.maxCoeff(), std::exp(1.0 / lambda) * (1.0 + 1e-15));
  }
}

TEST(EstimatorTest, JensenOrderingForExponential) {
  Rng rng(25);
  const auto f = [](double x) { return std::exp(x); };
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 1 + rng.UniformInt(10), p = 2 + rng.UniformInt(10);
    Eigen::MatrixXd rewards(k, p);
    for (int i = 0; i < k; ++i) {
      const bool equal = rng.Uniform() < 0.2;
      for (int j = 0; j < p; ++j) rewards(i, j) = equal ? 0.3 : rng.Normal();
    }
    const Eigen::VectorXd w_prime = MeanThenTransform(rewards, f);
    const Eigen::VectorXd w = TransformThenMean(rewards, f);
    for (int i = 0; i < k; ++i) {
      if (rewards.row(i).minCoeff() == rewards.row(i).maxCoeff()) {
        EXPECT_NEAR(w_prime[i], w[i], 1e-12 * w[i]);
      } else {
        EXPECT_LT(w_prime[i], w[i]);
      }
    }
  }
}

TEST(EstimatorTest, OptimalityWeightsDefaultsToMeanThenTransform) {
  Eigen::MatrixXd rewards(3, 2);
  rewards << 0, 2, 1, 1, 3, 5;
  const TrajectoryBatch batch = BatchFromRewards(rewards);
  OptimalityConfig cfg;
  cfg.kind = OptimalityKind::kPropCem;
  // Means 1, 1, 4 -> (0, 0, 1).
  EXPECT_EQ(OptimalityWeights(batch, cfg), Vec({0, 0, 1}));
  // Jointly normalized over all rewards (min 0, max 5), then averaged:
  // (0 + 0.4) / 2, (0.2 + 0.2) / 2, (0.6 + 1) / 2.
  const Eigen::VectorXd w = OptimalityWeights(batch, cfg, Estimator::kW);
  EXPECT_NEAR(w[0], 0.2, 1e-15);
  EXPECT_NEAR(w[1], 0.2, 1e-15);
  EXPECT_NEAR(w[2], 0.8, 1e-15);
}

TEST(EstimatorTest, ApplyTransformDispatches) {
  const Eigen::VectorXd r = Vec({3, 1, 2});
  OptimalityConfig cfg;
  cfg.elite_fraction = 0.5;
  cfg.kind = OptimalityKind::kCem;
  EXPECT_EQ(ApplyTransform(cfg, r), TransformCem(r, 0.5));
  cfg.kind = OptimalityKind::kMppi;
  EXPECT_EQ(ApplyTransform(cfg, r), TransformMppi(r, cfg.lambda));
  cfg.kind = OptimalityKind::kPropCem;
  EXPECT_EQ(ApplyTransform(cfg, r), TransformPropCem(r));
  cfg.kind = OptimalityKind::kCmaEs;
  EXPECT_EQ(ApplyTransform(cfg, r), TransformCmaEs(r, 0.5));
}

}  // namespace
}  // namespace vimpc
