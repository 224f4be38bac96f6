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

// Variational action distribution q(a; phi): a diagonal-covariance Gaussian
// mixture over flattened action sequences. M = 1 is the plain Gaussian used
// by CEM and MPPI.

#ifndef VIMPC_POSTERIOR_H_
#define VIMPC_POSTERIOR_H_

#include <vector>

#include <Eigen/Core>

#include "vimpc/core_types.h"
#include "vimpc/random.h"

namespace vimpc {

inline constexpr double kDefaultVarianceFloor = 1e-12;
// Components whose weighted mass N_m falls below this keep their previous
// mean and variance.
inline constexpr double kDegenerateComponentMass = 1e-12;

// phi = {(pi_m, mu_m, Sigma_m)}. Row m of `means` / `variances` is the
// flattened (time-major) mean / per-coordinate variance of component m.
struct GmmParams {
  int horizon = 0;
  int action_dim = 0;
  Eigen::VectorXd mixture;    // M
  Eigen::MatrixXd means;      // M x (T * d_a)
  Eigen::MatrixXd variances;  // M x (T * d_a)

  int num_components() const { return static_cast<int>(mixture.size()); }
  int dim() const { return horizon * action_dim; }
  ActionSequence Mean(int m) const;
  int MostLikelyComponent() const;

  // Throws kInvalidArgument if shapes disagree, the mixture is off the
  // simplex (1e-9), or a variance is non-positive.
  void Validate() const;
};

struct WeightedParticles {
  std::vector<ActionSequence> actions;
  ParticleWeights weights;
};

// Draws k sequences: component ~ Categorical(pi), then independent Gaussian
// coordinates, then elementwise clipping to `bounds`. Each sample consumes
// one Uniform() followed by T * d_a Normal() draws from `rng`. When
// `components` is non-null it receives the component index of each sample.
std::vector<ActionSequence> SampleGmm(const GmmParams& phi, int k,
                                      const ActionBounds& bounds, Rng& rng,
                                      std::vector<int>* components = nullptr);

// log sum_m pi_m N(a; mu_m, Sigma_m), max-shifted.
double GmmLogDensity(const GmmParams& phi, const ActionSequence& a);
Eigen::VectorXd GmmLogDensities(const GmmParams& phi,
                                const std::vector<ActionSequence>& actions);

// K x M matrix of eta_m(a_k) = pi_m N(a_k; m) / q(a_k).
Eigen::MatrixXd Responsibilities(const GmmParams& phi,
                                 const std::vector<ActionSequence>& actions);

// exp(kappa * nq_k) with nq the min-max normalized -log q; lies in
// [1, e^kappa]. All ones when -log q has a degenerate range.
Eigen::VectorXd EntropyBonus(const Eigen::VectorXd& log_q, double kappa);

// w_k proportional to w_prime_k * EntropyBonus(log_q, kappa)_k. Throws
// kAllZeroWeights if w_prime sums to zero.
ParticleWeights UpdateParticleWeights(const Eigen::VectorXd& w_prime,
                                      const Eigen::VectorXd& log_q,
                                      double kappa);

struct GmmFit {
  GmmParams params;
  Eigen::VectorXd component_mass;  // N_m
  std::vector<bool> degenerate;    // N_m < kDegenerateComponentMass
};

// One weighted EM step starting from `previous`: responsibilities from
// `previous`, then weight-averaged means, variances and mixture weights.
// Variances are floored at `variance_floor`.
GmmFit FitGmmWeighted(const WeightedParticles& particles,
                      const GmmParams& previous,
                      double variance_floor = kDefaultVarianceFloor);

}  // namespace vimpc

#endif  // VIMPC_POSTERIOR_H_
