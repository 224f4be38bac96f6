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
#include <fstream>
#include <memory>
#include <numbers>
#include <numeric>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "vimpc/parallel.h"

namespace vimpc {
namespace {

using ArrayXXd = Eigen::ArrayXXd;

ArrayXXd Sigmoid(const ArrayXXd& x) { return 1.0 / (1.0 + (-x).exp()); }

ArrayXXd Softplus(const ArrayXXd& x) {
  return x.unaryExpr([](double v) {
    return v > 30.0 ? v : std::log1p(std::exp(v));
  });
}

// Softplus clamps toward [lo, hi]; the top can overshoot hi by at most
// log1p(exp(lo - hi)). Optionally returns d out / d raw.
ArrayXXd BoundLogVar(const ArrayXXd& raw, double lo, double hi,
                     ArrayXXd* derivative) {
  const ArrayXXd upper = hi - Softplus(hi - raw);
  const ArrayXXd out = lo + Softplus(upper - lo);
  if (derivative) *derivative = Sigmoid(upper - lo) * Sigmoid(hi - raw);
  return out;
}

// Adam with the usual defaults; only the step size is configurable.
class Adam {
 public:
  Adam(int n, double learning_rate)
      : lr_(learning_rate),
        m_(Eigen::VectorXd::Zero(n)),
        v_(Eigen::VectorXd::Zero(n)) {}

  void Step(const Eigen::VectorXd& grad, Eigen::VectorXd* params) {
    ++t_;
    m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
    v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    params->array() -=
        lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + kEps);
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  int t_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
};

}  // namespace

MlpModel::MlpModel(int state_dim, int action_dim, std::vector<int> hidden,
                   double log_var_min, double log_var_max)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      hidden_(std::move(hidden)),
      log_var_min_(log_var_min),
      log_var_max_(log_var_max),
      norm_(Normalization::Identity(state_dim + action_dim, state_dim)) {
  if (state_dim < 1 || action_dim < 1 || !(log_var_min < log_var_max)) {
    throw Error(ErrorCode::kInvalidArgument, "mlp", "bad architecture");
  }
  int total = 0;
  const int layers = static_cast<int>(hidden_.size()) + 1;
  for (int l = 0; l < layers; ++l) {
    offsets_.push_back(total);
    total += layer_out(l) * layer_in(l) + layer_out(l);
  }
  params_ = Eigen::VectorXd::Zero(total);
}

int MlpModel::layer_in(int l) const {
  return l == 0 ? input_dim() : hidden_[l - 1];
}

int MlpModel::layer_out(int l) const {
  return l == static_cast<int>(hidden_.size()) ? 2 * state_dim_ : hidden_[l];
}

Eigen::Map<const Eigen::MatrixXd> MlpModel::weight(int l) const {
  return {params_.data() + offsets_[l], layer_out(l), layer_in(l)};
}

Eigen::Map<const Eigen::VectorXd> MlpModel::bias(int l) const {
  return {params_.data() + offsets_[l] + layer_out(l) * layer_in(l),
          layer_out(l)};
}

void MlpModel::InitializeRandom(Rng& rng) {
  params_.setZero();
  for (int l = 0; l < layer_count(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer_in(l)));
    const int n = layer_out(l) * layer_in(l);
    for (int i = 0; i < n; ++i) params_[offsets_[l] + i] = scale * rng.Normal();
  }
}

void MlpModel::set_parameters(const Eigen::VectorXd& params) {
  if (params.size() != params_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "parameters",
                "parameter count mismatch");
  }
  params_ = params;
}

void MlpModel::Forward(const Eigen::MatrixXd& z, Eigen::MatrixXd* mean,
                       Eigen::MatrixXd* log_var) const {
  Eigen::MatrixXd h = z;
  const int last = layer_count() - 1;
  for (int l = 0; l < last; ++l) {
    Eigen::MatrixXd a = (weight(l) * h).colwise() + bias(l);
    h = (a.array() * Sigmoid(a.array())).matrix();
  }
  const Eigen::MatrixXd out = (weight(last) * h).colwise() + bias(last);
  *mean = out.topRows(state_dim_);
  *log_var = BoundLogVar(out.bottomRows(state_dim_).array(), log_var_min_,
                         log_var_max_, nullptr)
                 .matrix();
}

double MlpModel::Loss(const Eigen::MatrixXd& z, const Eigen::MatrixXd& y,
                      double weight_decay, Eigen::VectorXd* grad) const {
  const int n = static_cast<int>(z.cols());
  const int last = layer_count() - 1;
  // Forward, keeping pre-activations and activations.
  std::vector<Eigen::MatrixXd> pre(layer_count());
  std::vector<Eigen::MatrixXd> act(layer_count());
  act[0] = z;
  for (int l = 0; l < last; ++l) {
    pre[l] = (weight(l) * act[l]).colwise() + bias(l);
    act[l + 1] = (pre[l].array() * Sigmoid(pre[l].array())).matrix();
  }
  const Eigen::MatrixXd out = (weight(last) * act[last]).colwise() + bias(last);
  const ArrayXXd mu = out.topRows(state_dim_).array();
  ArrayXXd dlv_draw;
  const ArrayXXd lv = BoundLogVar(out.bottomRows(state_dim_).array(),
                                  log_var_min_, log_var_max_, &dlv_draw);
  const ArrayXXd inv_var = (-lv).exp();
  const ArrayXXd err = mu - y.array();

  double weight_sq = 0.0;
  for (int l = 0; l < layer_count(); ++l) weight_sq += weight(l).squaredNorm();
  const double loss =
      0.5 * (err.square() * inv_var + lv).sum() / n +
      0.5 * weight_decay * weight_sq;
  if (!grad) return loss;

  grad->setZero(params_.size());
  Eigen::MatrixXd delta(2 * state_dim_, n);
  delta.topRows(state_dim_) = (err * inv_var / n).matrix();
  delta.bottomRows(state_dim_) =
      (0.5 * (1.0 - err.square() * inv_var) / n * dlv_draw).matrix();
  for (int l = last; l >= 0; --l) {
    const int rows = layer_out(l);
    const int cols = layer_in(l);
    Eigen::Map<Eigen::MatrixXd> gw(grad->data() + offsets_[l], rows, cols);
    Eigen::Map<Eigen::VectorXd> gb(grad->data() + offsets_[l] + rows * cols,
                                   rows);
    gw = delta * act[l].transpose() + weight_decay * weight(l);
    gb = delta.rowwise().sum();
    if (l == 0) break;
    const ArrayXXd a = pre[l - 1].array();
    const ArrayXXd sig = Sigmoid(a);
    const ArrayXXd swish_grad = sig + a * sig * (1.0 - sig);
    delta = ((weight(l).transpose() * delta).array() * swish_grad).matrix();
  }
  return loss;
}

void MlpModel::PredictBatch(const Eigen::MatrixXd& states,
                            const Eigen::MatrixXd& actions,
                            Eigen::MatrixXd* mean,
                            Eigen::MatrixXd* variance) const {
  Eigen::MatrixXd x(input_dim(), states.cols());
  x.topRows(state_dim_) = states;
  x.bottomRows(action_dim_) = actions;
  Eigen::MatrixXd mu, lv;
  Forward(norm_.NormalizeInputs(x), &mu, &lv);
  *mean = states + norm_.DenormalizeTargets(mu);
  *variance = (lv.array().exp().colwise() * norm_.target_std.array().square())
                  .matrix();
}

EnsemblePosterior MlpEnsemble::ToPosterior() const {
  std::vector<std::shared_ptr<const DynamicsModel>> particles;
  particles.reserve(members_.size());
  for (const MlpModel& m : members_) {
    particles.push_back(std::make_shared<MlpModel>(m));
  }
  return EnsemblePosterior(std::move(particles));
}

namespace {

nlohmann::json VectorToJson(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd VectorFromJson(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<int>(values.size()));
}

}  // namespace

std::string MlpEnsemble::ToJson() const {
  nlohmann::json root;
  root["format"] = "vimpc-mlp-ensemble";
  root["version"] = kCheckpointVersion;
  nlohmann::json members = nlohmann::json::array();
  for (const MlpModel& m : members_) {
    const Normalization& norm = m.normalization();
    members.push_back({
        {"state_dim", m.state_dim()},
        {"action_dim", m.action_dim()},
        {"hidden", m.hidden()},
        {"activation", "swish"},
        {"log_var_min", m.log_var_min()},
        {"log_var_max", m.log_var_max()},
        {"normalization",
         {{"input_mean", VectorToJson(norm.input_mean)},
          {"input_std", VectorToJson(norm.input_std)},
          {"target_mean", VectorToJson(norm.target_mean)},
          {"target_std", VectorToJson(norm.target_std)}}},
        {"parameters", VectorToJson(m.parameters())},
    });
  }
  root["members"] = std::move(members);
  return root.dump(1);
}

MlpEnsemble MlpEnsemble::FromJson(const std::string& text) {
  try {
    const nlohmann::json root = nlohmann::json::parse(text);
    if (root.at("format") != "vimpc-mlp-ensemble") {
      throw Error(ErrorCode::kParseError, "format", "not an ensemble file");
    }
    if (root.at("version").get<int>() != kCheckpointVersion) {
      throw Error(ErrorCode::kParseError, "version",
                  "unsupported checkpoint version");
    }
    std::vector<MlpModel> members;
    for (const auto& j : root.at("members")) {
      MlpModel m(j.at("state_dim").get<int>(), j.at("action_dim").get<int>(),
                 j.at("hidden").get<std::vector<int>>(),
                 j.at("log_var_min").get<double>(),
                 j.at("log_var_max").get<double>());
      const auto& n = j.at("normalization");
      m.set_normalization({VectorFromJson(n.at("input_mean")),
                           VectorFromJson(n.at("input_std")),
                           VectorFromJson(n.at("target_mean")),
                           VectorFromJson(n.at("target_std"))});
      m.set_parameters(VectorFromJson(j.at("parameters")));
      members.push_back(std::move(m));
    }
    return MlpEnsemble(std::move(members));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, "checkpoint", e.what());
  }
}

void MlpEnsemble::Save(const std::string& path) const {
  std::ofstream out(path);
  out << ToJson() << '\n';
  if (!out) throw Error(ErrorCode::kIo, path, "cannot write checkpoint");
}

MlpEnsemble MlpEnsemble::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, path, "cannot read checkpoint");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return FromJson(buffer.str());
}

MlpEnsemble TrainEnsemble(const TransitionDataset& data,
                          const EnsembleConfig& config, Rng& rng,
                          TrainingLog* log) {
  if (data.empty()) {
    throw Error(ErrorCode::kInsufficientData, "dataset",
                "cannot train on an empty dataset");
  }
  if (config.ensemble_size < 1 || config.batch_size < 1 || config.epochs < 0) {
    throw Error(ErrorCode::kInvalidConfig, "ensemble",
                "ensemble_size and batch_size must be >= 1");
  }
  const Normalization norm = data.ComputeNormalization();
  const Eigen::MatrixXd z = norm.NormalizeInputs(data.Inputs());
  const Eigen::MatrixXd y = norm.NormalizeTargets(data.Deltas());
  const int n = data.size();
  const int e_count = config.ensemble_size;

  std::vector<std::uint64_t> seeds(e_count);
  for (auto& s : seeds) s = rng.NextSeed();

  std::vector<MlpModel> members(
      e_count, MlpModel(data.state_dim(), data.action_dim(), config.hidden,
                        config.log_var_min, config.log_var_max));
  std::vector<std::vector<double>> losses(e_count);

  ParallelChunks(e_count, config.threads, [&](int begin, int end) {
    for (int e = begin; e < end; ++e) {
      Rng member_rng(seeds[e]);
      MlpModel& model = members[e];
      model.set_normalization(norm);
      model.InitializeRandom(member_rng);
      Eigen::VectorXd params = model.parameters();
      Adam adam(model.num_parameters(), config.learning_rate);
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      Eigen::VectorXd grad;
      Eigen::MatrixXd zb, yb;
      for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (int i = n - 1; i > 0; --i) {
          std::swap(order[i], order[member_rng.UniformInt(i + 1)]);
        }
        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start < n; start += config.batch_size) {
          const int size = std::min(config.batch_size, n - start);
          zb.resize(z.rows(), size);
          yb.resize(y.rows(), size);
          for (int b = 0; b < size; ++b) {
            zb.col(b) = z.col(order[start + b]);
            yb.col(b) = y.col(order[start + b]);
          }
          epoch_loss += model.Loss(zb, yb, config.weight_decay, &grad);
          adam.Step(grad, &params);
          model.set_parameters(params);
          ++batches;
        }
        losses[e].push_back(epoch_loss / batches);
      }
    }
  });

  if (log) log->epoch_loss = std::move(losses);
  return MlpEnsemble(std::move(members));
}

double GaussianNll(const DynamicsModel& model, const TransitionDataset& data) {
  if (data.empty()) {
    throw Error(ErrorCode::kInsufficientData, "dataset", "empty dataset");
  }
  const Eigen::MatrixXd x = data.Inputs();
  const int ds = data.state_dim();
  Eigen::MatrixXd mean, var;
  model.PredictBatch(x.topRows(ds), x.bottomRows(data.action_dim()), &mean,
                     &var);
  Eigen::MatrixXd next(ds, data.size());
  for (int n = 0; n < data.size(); ++n) next.col(n) = data.next_state(n);
  const Eigen::ArrayXXd v = var.array().max(1e-300);
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  const double total =
      0.5 * (log_two_pi + v.log() + (next - mean).array().square() / v).sum();
  return total / data.size();
}

double EnsembleNll(const EnsemblePosterior& posterior,
                   const TransitionDataset& data) {
  double total = 0.0;
  for (int e = 0; e < posterior.size(); ++e) {
    total += GaussianNll(posterior.particle(e), data);
  }
  return total / posterior.size();
}

}  // namespace vimpc
