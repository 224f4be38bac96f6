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
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vimpc/csv.h"

namespace vimpc {
namespace {

using json = nlohmann::json;

constexpr char kProgressFile[] = "progress.json";
constexpr char kDatasetFile[] = "dataset.csv";
constexpr char kEnsembleFile[] = "ensemble.json";

double ParseDouble(const std::string& text, const std::string& field) {
  double value = 0.0;
  const auto result =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kParseError, field, "not a number: " + text);
  }
  return value;
}

json RecordToJson(const EpisodeRecord& r) {
  return {{"episode", r.episode},
          {"total_reward", r.total_reward},
          {"dataset_size", r.dataset_size},
          {"plan_ess_mean", r.plan_ess_mean},
          {"validation_nll", r.validation_nll},
          {"failed_plans", r.failed_plans}};
}

EpisodeRecord RecordFromJson(const json& j) {
  EpisodeRecord r;
  r.episode = j.at("episode").get<int>();
  r.total_reward = j.at("total_reward").get<double>();
  r.dataset_size = j.at("dataset_size").get<int>();
  r.plan_ess_mean = j.at("plan_ess_mean").get<double>();
  r.validation_nll = j.at("validation_nll").get<double>();
  r.failed_plans = j.at("failed_plans").get<int>();
  return r;
}

void WriteCheckpoint(const std::filesystem::path& dir, const MbrlResult& state,
                     const Rng& rng) {
  std::filesystem::create_directories(dir);
  SaveDataset(state.dataset, (dir / kDatasetFile).string());
  state.ensemble.Save((dir / kEnsembleFile).string());
  json progress;
  progress["version"] = kCheckpointVersion;
  progress["episodes_done"] = state.episodes.size();
  progress["seed_reward"] = state.seed_reward;
  progress["rng"] = rng.Serialize();
  progress["records"] = json::array();
  for (const EpisodeRecord& r : state.episodes) {
    progress["records"].push_back(RecordToJson(r));
  }
  // Write then rename so an interrupted run never leaves a torn file.
  const std::filesystem::path tmp = dir / "progress.json.tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error(ErrorCode::kIo, tmp.string(), "cannot write");
    out << progress.dump(1) << '\n';
  }
  std::filesystem::rename(tmp, dir / kProgressFile);
}

bool ReadCheckpoint(const std::filesystem::path& dir, const Environment& env,
                    MbrlResult* state, Rng* rng) {
  const std::filesystem::path path = dir / kProgressFile;
  if (!std::filesystem::exists(path)) return false;
  std::ifstream in(path);
  json progress;
  try {
    progress = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string(), e.what());
  }
  if (progress.value("version", 0) != kCheckpointVersion) {
    throw Error(ErrorCode::kParseError, path.string(),
                "unsupported checkpoint version");
  }
  state->seed_reward = progress.at("seed_reward").get<double>();
  state->episodes.clear();
  for (const json& r : progress.at("records")) {
    state->episodes.push_back(RecordFromJson(r));
  }
  state->dataset = LoadDataset((dir / kDatasetFile).string(), env.state_dim(),
                               env.action_dim());
  state->ensemble = MlpEnsemble::Load((dir / kEnsembleFile).string());
  *rng = Rng::Deserialize(progress.at("rng").get<std::string>());
  return true;
}

}  // namespace

void MbrlConfig::Validate(const EnvSpec& env) const {
  planner.Validate(env);
  if (episodes < 0) {
    throw Error(ErrorCode::kInvalidConfig, "episodes", "must be >= 0");
  }
  if (episode_length < 1) {
    throw Error(ErrorCode::kInvalidConfig, "H", "must be >= 1");
  }
  if (ensemble.ensemble_size < 1) {
    throw Error(ErrorCode::kInvalidConfig, "E", "must be >= 1");
  }
  if (ensemble.batch_size < 1 || ensemble.epochs < 0 ||
      !(ensemble.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "ensemble",
                "batch_size >= 1, epochs >= 0 and learning_rate > 0 required");
  }
  for (int h : ensemble.hidden) {
    if (h < 1) {
      throw Error(ErrorCode::kInvalidConfig, "hidden", "widths must be >= 1");
    }
  }
  if (resume && checkpoint_dir.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "resume",
                "resume requires checkpoint_dir");
  }
}

double CollectRandomEpisode(const Environment& env, int horizon, Rng& rng,
                            TransitionDataset* data) {
  const ActionBounds& bounds = env.bounds();
  Eigen::VectorXd s = env.InitialState();
  Eigen::VectorXd a(env.action_dim());
  double total = 0.0;
  for (int t = 0; t < horizon; ++t) {
    for (int j = 0; j < a.size(); ++j) {
      a[j] = bounds.lower[j] + (bounds.upper[j] - bounds.lower[j]) * rng.Uniform();
    }
    Eigen::VectorXd next = env.Step(s, a);
    total += env.Reward(s, a, next);
    data->Append(s, a, next);
    s = std::move(next);
  }
  return total;
}

MbrlResult RunMbrl(const MbrlConfig& config, const Environment& env,
                   const EpisodeCallback& on_episode) {
  config.Validate(env.spec());
  const ActionBounds& bounds = env.bounds();
  const RewardFn reward = [&env](const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& next) {
    return env.Reward(s, a, next);
  };
  PlannerConfig planner = config.planner;

  Rng rng(config.seed);
  MbrlResult state;
  state.dataset = TransitionDataset(env.state_dim(), env.action_dim());
  const std::filesystem::path dir = config.checkpoint_dir;
  const bool resumed =
      config.resume && ReadCheckpoint(dir, env, &state, &rng);
  if (!resumed) {
    state.seed_reward =
        CollectRandomEpisode(env, config.episode_length, rng, &state.dataset);
  }

  for (int episode = static_cast<int>(state.episodes.size()) + 1;
       episode <= config.episodes; ++episode) {
    state.ensemble = TrainEnsemble(state.dataset, config.ensemble, rng);
    const EnsemblePosterior posterior = state.ensemble.ToPosterior();

    EpisodeRecord record;
    record.episode = episode;
    TransitionDataset fresh(env.state_dim(), env.action_dim());
    GmmParams phi = InitGmm(planner.num_components, planner.horizon,
                            env.action_dim(), planner.initial_variance, rng);
    Eigen::VectorXd s = env.InitialState();
    double ess_sum = 0.0;
    int ess_count = 0;
    for (int t = 0; t < config.episode_length; ++t) {
      Eigen::VectorXd a;
      try {
        PlanResult plan = Plan(s, phi, posterior, reward, bounds, planner, rng);
        for (const IterationDiagnostics& d : plan.diagnostics) {
          ess_sum += d.effective_sample_size;
          ++ess_count;
        }
        phi = std::move(plan.params);
        a = SelectExecutedSequence(phi, bounds, rng,
                                   config.deterministic_execution)
                .step(0);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kPlanFailed) throw;
        ++record.failed_plans;
        a = Eigen::VectorXd::Zero(env.action_dim());
        if (!bounds.Contains(a)) a = bounds.Midpoint();
      }
      Eigen::VectorXd next = env.Step(s, a);
      record.total_reward += env.Reward(s, a, next);
      state.dataset.Append(s, a, next);
      fresh.Append(s, a, next);
      s = std::move(next);
      phi = WarmStartShift(phi, planner.initial_variance, bounds);
    }
    record.dataset_size = state.dataset.size();
    record.plan_ess_mean = ess_count ? ess_sum / ess_count : 0.0;
    record.validation_nll = EnsembleNll(posterior, fresh);
    state.episodes.push_back(record);
    if (!config.checkpoint_dir.empty()) WriteCheckpoint(dir, state, rng);
    if (on_episode) on_episode(record);
  }
  return state;
}

MbrlResult RunMbrl(const MbrlConfig& config) {
  const std::unique_ptr<Environment> env = MakeEnvironment(config.env);
  return RunMbrl(config, *env);
}

double CoverRatio(const std::vector<Eigen::VectorXd>& points,
                  const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                  int bins) {
  if (bins < 1 || lower.size() != upper.size() ||
      !((upper - lower).array() > 0.0).all()) {
    throw Error(ErrorCode::kInvalidArgument, "bounds",
                "need bins >= 1 and upper > lower");
  }
  const int dim = static_cast<int>(lower.size());
  std::set<std::vector<int>> occupied;
  std::vector<int> cell(dim);
  for (const Eigen::VectorXd& p : points) {
    if (p.size() != dim) {
      throw Error(ErrorCode::kInvalidArgument, "points", "dimension mismatch");
    }
    for (int d = 0; d < dim; ++d) {
      const double u = (p[d] - lower[d]) / (upper[d] - lower[d]);
      cell[d] = std::clamp(static_cast<int>(std::floor(u * bins)), 0, bins - 1);
    }
    occupied.insert(cell);
  }
  return static_cast<double>(occupied.size()) / std::pow(bins, dim);
}

void SaveDataset(const TransitionDataset& data, const std::string& path) {
  std::vector<std::string> header;
  for (int i = 0; i < data.state_dim(); ++i) header.push_back("s" + std::to_string(i));
  for (int i = 0; i < data.action_dim(); ++i) header.push_back("a" + std::to_string(i));
  for (int i = 0; i < data.state_dim(); ++i) header.push_back("next_s" + std::to_string(i));
  CsvWriter out(path, header);
  for (int n = 0; n < data.size(); ++n) {
    for (double v : data.state(n)) out.Add(v);
    for (double v : data.action(n)) out.Add(v);
    for (double v : data.next_state(n)) out.Add(v);
    out.EndRow();
  }
}

TransitionDataset LoadDataset(const std::string& path, int state_dim,
                              int action_dim) {
  const CsvTable table = ReadCsv(path);
  const std::size_t width = 2 * state_dim + action_dim;
  if (table.header.size() != width) {
    throw Error(ErrorCode::kParseError, path, "unexpected dataset width");
  }
  TransitionDataset data(state_dim, action_dim);
  Eigen::VectorXd s(state_dim), a(action_dim), next(state_dim);
  for (const auto& row : table.rows) {
    if (row.size() != width) {
      throw Error(ErrorCode::kParseError, path, "ragged dataset row");
    }
    int c = 0;
    for (int i = 0; i < state_dim; ++i) s[i] = ParseDouble(row[c++], path);
    for (int i = 0; i < action_dim; ++i) a[i] = ParseDouble(row[c++], path);
    for (int i = 0; i < state_dim; ++i) next[i] = ParseDouble(row[c++], path);
    data.Append(s, a, next);
  }
  return data;
}

}  // namespace vimpc
