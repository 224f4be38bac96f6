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

// Probabilistic MLP dynamics and the ensemble that approximates p_D(theta).
//
// Each network maps normalized (s, a) to the mean and log-variance of the
// normalized state delta s' - s. Hidden layers use Swish, x * sigmoid(x).
// The log-variance head is squashed into [log_var_min, log_var_max] with the
// usual pair of softplus bounds so it stays differentiable everywhere.

#ifndef VIMPC_MLP_H_
#define VIMPC_MLP_H_

#include <string>
#include <vector>

#include <Eigen/Core>

#include "vimpc/dynamics.h"
#include "vimpc/random.h"

namespace vimpc {

class MlpModel : public DynamicsModel {
 public:
  // All parameters start at zero with identity normalization.
  MlpModel(int state_dim, int action_dim, std::vector<int> hidden,
           double log_var_min = -10.0, double log_var_max = 4.0);

  int state_dim() const override { return state_dim_; }
  int action_dim() const override { return action_dim_; }
  int input_dim() const { return state_dim_ + action_dim_; }
  const std::vector<int>& hidden() const { return hidden_; }
  double log_var_min() const { return log_var_min_; }
  double log_var_max() const { return log_var_max_; }

  // Weights ~ N(0, 1 / fan_in), biases zero.
  void InitializeRandom(Rng& rng);

  int num_parameters() const { return static_cast<int>(params_.size()); }
  const Eigen::VectorXd& parameters() const { return params_; }
  void set_parameters(const Eigen::VectorXd& params);

  const Normalization& normalization() const { return norm_; }
  void set_normalization(Normalization norm) { norm_ = std::move(norm); }

  // Normalized-space forward pass; z is input_dim x N.
  void Forward(const Eigen::MatrixXd& z, Eigen::MatrixXd* mean,
               Eigen::MatrixXd* log_var) const;

  // Mean over the batch of the per-sample Gaussian NLL summed over output
  // dimensions (without the log 2 pi constant), plus
  // 0.5 * weight_decay * ||weights||^2. z, y are normalized inputs / deltas.
  // Writes d loss / d parameters to `grad` when non-null.
  double Loss(const Eigen::MatrixXd& z, const Eigen::MatrixXd& y,
              double weight_decay, Eigen::VectorXd* grad) const;

  void PredictBatch(const Eigen::MatrixXd& states,
                    const Eigen::MatrixXd& actions, Eigen::MatrixXd* mean,
                    Eigen::MatrixXd* variance) const override;

 private:
  int layer_count() const { return static_cast<int>(offsets_.size()); }
  int layer_in(int l) const;
  int layer_out(int l) const;
  Eigen::Map<const Eigen::MatrixXd> weight(int l) const;
  Eigen::Map<const Eigen::VectorXd> bias(int l) const;

  int state_dim_;
  int action_dim_;
  std::vector<int> hidden_;
  double log_var_min_;
  double log_var_max_;
  std::vector<int> offsets_;  // start of each layer's weight block
  Eigen::VectorXd params_;
  Normalization norm_;
};

struct EnsembleConfig {
  int ensemble_size = 5;
  std::vector<int> hidden = {64, 64};
  double learning_rate = 1e-3;
  int batch_size = 160;
  int epochs = 50;
  double weight_decay = 1e-4;
  double log_var_min = -10.0;
  double log_var_max = 4.0;
  int threads = 1;
};

// Per-member mean training loss of each epoch.
struct TrainingLog {
  std::vector<std::vector<double>> epoch_loss;
};

class MlpEnsemble {
 public:
  MlpEnsemble() = default;
  explicit MlpEnsemble(std::vector<MlpModel> members)
      : members_(std::move(members)) {}

  int size() const { return static_cast<int>(members_.size()); }
  const MlpModel& member(int e) const { return members_[e]; }
  EnsemblePosterior ToPosterior() const;

  // Version-tagged JSON checkpoint with architecture, normalization and
  // parameters of every member.
  std::string ToJson() const;
  static MlpEnsemble FromJson(const std::string& text);
  void Save(const std::string& path) const;
  static MlpEnsemble Load(const std::string& path);

 private:
  std::vector<MlpModel> members_;
};

inline constexpr int kCheckpointVersion = 1;

// Trains E members with Adam on the normalized NLL. Member seeds are drawn
// from `rng` up front, so results do not depend on config.threads. Throws
// kInsufficientData on an empty dataset.
MlpEnsemble TrainEnsemble(const TransitionDataset& data,
                          const EnsembleConfig& config, Rng& rng,
                          TrainingLog* log = nullptr);

// Mean raw-space Gaussian NLL per transition (summed over state dimensions,
// including the log 2 pi constant).
double GaussianNll(const DynamicsModel& model, const TransitionDataset& data);
// GaussianNll averaged over particles.
double EnsembleNll(const EnsemblePosterior& posterior,
                   const TransitionDataset& data);

}  // namespace vimpc

#endif  // VIMPC_MLP_H_
