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

#include "vimpc/posterior.h"

#include <cmath>
#include <limits>
#include <numbers>

namespace vimpc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log pi_m - 0.5 * sum_d log(2 pi v_md) for every component.
Eigen::VectorXd ComponentLogNormalizers(const GmmParams& phi) {
  const int m_count = phi.num_components();
  Eigen::VectorXd c(m_count);
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  for (int m = 0; m < m_count; ++m) {
    if (phi.mixture[m] <= 0.0) {
      c[m] = kNegInf;
      continue;
    }
    c[m] = std::log(phi.mixture[m]) -
           0.5 * (phi.dim() * log_two_pi +
                  phi.variances.row(m).array().log().sum());
  }
  return c;
}

// Per-component log(pi_m N(a; m)) for one flattened action.
void ComponentLogJoint(const GmmParams& phi, const Eigen::VectorXd& normalizers,
                       const Eigen::VectorXd& a, Eigen::VectorXd* out) {
  const int m_count = phi.num_components();
  out->resize(m_count);
  for (int m = 0; m < m_count; ++m) {
    if (normalizers[m] == kNegInf) {
      (*out)[m] = kNegInf;
      continue;
    }
    const double mahalanobis =
        ((a.transpose() - phi.means.row(m)).array().square() /
         phi.variances.row(m).array())
            .sum();
    (*out)[m] = normalizers[m] - 0.5 * mahalanobis;
  }
}

double LogSumExp(const Eigen::VectorXd& x) {
  const double top = x.maxCoeff();
  if (top == kNegInf) return kNegInf;
  return top + std::log((x.array() - top).exp().sum());
}

}  // namespace

ActionSequence GmmParams::Mean(int m) const {
  return ActionSequence(horizon, action_dim, means.row(m).transpose());
}

int GmmParams::MostLikelyComponent() const {
  int best = 0;
  for (int m = 1; m < num_components(); ++m) {
    if (mixture[m] > mixture[best]) best = m;
  }
  return best;
}

void GmmParams::Validate() const {
  const int m_count = num_components();
  if (m_count < 1 || horizon < 1 || action_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "gmm",
                "mixture needs M, T, d_a >= 1");
  }
  if (means.rows() != m_count || variances.rows() != m_count ||
      means.cols() != dim() || variances.cols() != dim()) {
    throw Error(ErrorCode::kInvalidArgument, "gmm", "parameter shape mismatch");
  }
  if ((mixture.array() < 0.0).any() || std::abs(mixture.sum() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "mixture",
                "mixture weights must lie on the simplex");
  }
  if (!(variances.array() > 0.0).all() || !means.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "variances",
                "variances must be positive and means finite");
  }
}

std::vector<ActionSequence> SampleGmm(const GmmParams& phi, int k,
                                      const ActionBounds& bounds, Rng& rng,
                                      std::vector<int>* components) {
  const int m_count = phi.num_components();
  const int d = phi.dim();
  const Eigen::MatrixXd stddev = phi.variances.cwiseSqrt();
  int last_positive = 0;
  for (int m = 0; m < m_count; ++m) {
    if (phi.mixture[m] > 0.0) last_positive = m;
  }
  std::vector<ActionSequence> samples;
  samples.reserve(k);
  if (components) components->assign(k, 0);
  for (int s = 0; s < k; ++s) {
    const double u = rng.Uniform();
    int chosen = last_positive;
    double cumulative = 0.0;
    for (int m = 0; m < m_count; ++m) {
      if (phi.mixture[m] <= 0.0) continue;
      cumulative += phi.mixture[m];
      if (u < cumulative) {
        chosen = m;
        break;
      }
    }
    Eigen::VectorXd values(d);
    for (int i = 0; i < d; ++i) {
      values[i] = phi.means(chosen, i) + stddev(chosen, i) * rng.Normal();
    }
    ActionSequence a(phi.horizon, phi.action_dim, std::move(values));
    bounds.ClipInPlace(&a);
    samples.push_back(std::move(a));
    if (components) (*components)[s] = chosen;
  }
  return samples;
}

double GmmLogDensity(const GmmParams& phi, const ActionSequence& a) {
  const Eigen::VectorXd normalizers = ComponentLogNormalizers(phi);
  Eigen::VectorXd joint;
  ComponentLogJoint(phi, normalizers, a.values(), &joint);
  return LogSumExp(joint);
}

Eigen::VectorXd GmmLogDensities(const GmmParams& phi,
                                const std::vector<ActionSequence>& actions) {
  const Eigen::VectorXd normalizers = ComponentLogNormalizers(phi);
  Eigen::VectorXd out(static_cast<int>(actions.size()));
  Eigen::VectorXd joint;
  for (int k = 0; k < out.size(); ++k) {
    ComponentLogJoint(phi, normalizers, actions[k].values(), &joint);
    out[k] = LogSumExp(joint);
  }
  return out;
}

Eigen::MatrixXd Responsibilities(const GmmParams& phi,
                                 const std::vector<ActionSequence>& actions) {
  const Eigen::VectorXd normalizers = ComponentLogNormalizers(phi);
  const int k_count = static_cast<int>(actions.size());
  Eigen::MatrixXd eta(k_count, phi.num_components());
  Eigen::VectorXd joint;
  for (int k = 0; k < k_count; ++k) {
    ComponentLogJoint(phi, normalizers, actions[k].values(), &joint);
    const double total = LogSumExp(joint);
    eta.row(k) = (joint.array() - total).exp().transpose();
  }
  return eta;
}

Eigen::VectorXd EntropyBonus(const Eigen::VectorXd& log_q, double kappa) {
  const int k = static_cast<int>(log_q.size());
  if (k == 0) return Eigen::VectorXd();
  const Eigen::VectorXd neg = -log_q;
  const double lo = neg.minCoeff();
  const double hi = neg.maxCoeff();
  if (!(hi > lo) || kappa == 0.0) return Eigen::VectorXd::Ones(k);
  return ((neg.array() - lo) / (hi - lo) * kappa).exp();
}

ParticleWeights UpdateParticleWeights(const Eigen::VectorXd& w_prime,
                                      const Eigen::VectorXd& log_q,
                                      double kappa) {
  if (!(w_prime.sum() > 0.0)) {
    throw Error(ErrorCode::kAllZeroWeights, "w_prime",
                "transformed weights sum to zero");
  }
  if (kappa == 0.0) return ParticleWeights::FromUnnormalized(w_prime);
  return ParticleWeights::FromUnnormalized(
      w_prime.cwiseProduct(EntropyBonus(log_q, kappa)));
}

GmmFit FitGmmWeighted(const WeightedParticles& particles,
                      const GmmParams& previous, double variance_floor) {
  const int k_count = static_cast<int>(particles.actions.size());
  if (k_count == 0 || particles.weights.size() != k_count) {
    throw Error(ErrorCode::kInvalidArgument, "particles",
                "particle and weight counts must match and be positive");
  }
  const int m_count = previous.num_components();
  const int d = previous.dim();

  const Eigen::MatrixXd eta = Responsibilities(previous, particles.actions);
  // eta_m(a_k) * w_k, then N_m as its column sum.
  const Eigen::MatrixXd joint =
      eta.array().colwise() * particles.weights.values().array();
  const Eigen::VectorXd mass = joint.colwise().sum().transpose();

  GmmFit fit;
  fit.params = previous;
  fit.component_mass = mass;
  fit.degenerate.assign(m_count, false);

  for (int m = 0; m < m_count; ++m) {
    if (!(mass[m] >= kDegenerateComponentMass)) {
      fit.degenerate[m] = true;
      continue;
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < k_count; ++k) {
      const double omega = joint(k, m) / mass[m];
      if (omega != 0.0) mean += omega * particles.actions[k].values();
    }
    Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < k_count; ++k) {
      const double omega = joint(k, m) / mass[m];
      if (omega != 0.0) {
        var += omega * (particles.actions[k].values() - mean).array().square()
                           .matrix();
      }
    }
    fit.params.means.row(m) = mean.transpose();
    fit.params.variances.row(m) = var.cwiseMax(variance_floor).transpose();
  }

  const double total = mass.sum();
  if (total > 0.0) fit.params.mixture = mass / total;
  return fit;
}

}  // namespace vimpc
