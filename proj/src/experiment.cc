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

#include "vimpc/experiment.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vimpc/csv.h"
#include "vimpc/parallel.h"

namespace vimpc {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr char kManifestFormat[] = "vimpc-run-manifest";
constexpr char kManifestFile[] = "run_manifest.json";

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Best-effort line lookup for error messages: first occurrence of the key.
class Locator {
 public:
  explicit Locator(const std::string& text) : text_(text) {}

  std::string Where(const std::string& key) const {
    const std::size_t pos = text_.find("\"" + key + "\"");
    if (pos == std::string::npos) return "";
    return " (line " + std::to_string(LineOf(pos)) + ")";
  }

  int LineOf(std::size_t pos) const {
    pos = std::min(pos, text_.size());
    return 1 + static_cast<int>(
                   std::count(text_.begin(), text_.begin() + pos, '\n'));
  }

 private:
  const std::string& text_;
};

[[noreturn]] void Fail(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::kParseError, field, message);
}

double AsDouble(const json& j, const std::string& field) {
  if (!j.is_number()) Fail(field, "expected a number");
  return j.get<double>();
}

int AsInt(const json& j, const std::string& field) {
  if (!j.is_number_integer()) Fail(field, "expected an integer");
  const long long v = j.get<long long>();
  if (v < -(1LL << 31) || v >= (1LL << 31)) Fail(field, "integer out of range");
  return static_cast<int>(v);
}

bool AsBool(const json& j, const std::string& field) {
  if (!j.is_boolean()) Fail(field, "expected true or false");
  return j.get<bool>();
}

std::string AsString(const json& j, const std::string& field) {
  if (!j.is_string()) Fail(field, "expected a string");
  return j.get<std::string>();
}

std::uint64_t AsSeed(const json& j, const std::string& field) {
  if (!j.is_number_unsigned()) Fail(field, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

Eigen::Vector2d AsVector2(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) Fail(field, "expected [x, y]");
  return {AsDouble(j[0], field + "[0]"), AsDouble(j[1], field + "[1]")};
}

// Reads the keys of one JSON object and rejects the ones nobody asked for.
class Reader {
 public:
  Reader(const json& object, std::string path, const Locator& locator)
      : object_(object), path_(std::move(path)), locator_(locator) {
    if (!object_.is_object()) {
      Fail(path_.empty() ? "<root>" : path_, "expected an object");
    }
  }

  std::string Field(const std::string& key) const { return Join(path_, key); }

  const json* Find(const std::string& key) {
    used_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  const json& Require(const std::string& key) {
    const json* j = Find(key);
    if (j == nullptr) Fail(Field(key), "missing required field");
    return *j;
  }

  void Double(const std::string& key, double* out) {
    if (const json* j = Find(key)) *out = AsDouble(*j, Field(key));
  }
  void Int(const std::string& key, int* out) {
    if (const json* j = Find(key)) *out = AsInt(*j, Field(key));
  }
  void Bool(const std::string& key, bool* out) {
    if (const json* j = Find(key)) *out = AsBool(*j, Field(key));
  }

  void Finish() const {
    for (const auto& item : object_.items()) {
      if (!used_.count(item.key())) {
        Fail(Field(item.key()), "unknown key" + locator_.Where(item.key()));
      }
    }
  }

  const Locator& locator() const { return locator_; }

 private:
  const json& object_;
  std::string path_;
  const Locator& locator_;
  std::set<std::string> used_;
};

const std::vector<std::string>& KnownEnvs() {
  static const std::vector<std::string> kinds = {"point_mass", "pendulum",
                                                 "multimodal", "linear_test"};
  return kinds;
}

void ParseTask(const json& j, const Locator& loc, EnvConfig* env) {
  Reader r(j, "task", loc);
  if (env->kind == "point_mass") {
    PointMassTask& task = env->point_mass;
    if (const json* v = r.Find("start")) task.start = AsVector2(*v, "task.start");
    if (const json* v = r.Find("goal")) task.goal = AsVector2(*v, "task.goal");
    r.Double("max_step", &task.max_step);
    r.Double("obstacle_cost", &task.obstacle_cost);
    if (const json* v = r.Find("obstacles")) {
      if (!v->is_array()) Fail("task.obstacles", "expected an array");
      task.obstacles.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        const std::string path = "task.obstacles[" + std::to_string(i) + "]";
        Reader o((*v)[i], path, loc);
        Obstacle obstacle;
        obstacle.center = AsVector2(o.Require("center"), path + ".center");
        obstacle.radius = AsDouble(o.Require("radius"), path + ".radius");
        o.Finish();
        task.obstacles.push_back(obstacle);
      }
    }
  } else if (env->kind == "multimodal") {
    r.Double("action_limit", &env->multimodal_action_limit);
    if (const json* v = r.Find("modes")) {
      if (!v->is_array()) Fail("task.modes", "expected an array");
      env->multimodal.modes.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        const std::string path = "task.modes[" + std::to_string(i) + "]";
        Reader o((*v)[i], path, loc);
        Mode mode;
        mode.center = AsVector2(o.Require("center"), path + ".center");
        mode.height = AsDouble(o.Require("height"), path + ".height");
        mode.width = AsDouble(o.Require("width"), path + ".width");
        o.Finish();
        env->multimodal.modes.push_back(mode);
      }
    }
  } else if (env->kind == "pendulum") {
    r.Double("gravity", &env->pendulum.gravity);
    r.Double("length", &env->pendulum.length);
    r.Double("mass", &env->pendulum.mass);
    r.Double("dt", &env->pendulum.dt);
    r.Double("max_torque", &env->pendulum.max_torque);
  }
  r.Finish();
}

Estimator ParseEstimator(const std::string& text, const std::string& field) {
  if (text == "W_prime") return Estimator::kWPrime;
  if (text == "W") return Estimator::kW;
  Fail(field, "expected \"W_prime\" or \"W\", got \"" + text + "\"");
}

std::string EstimatorName(Estimator e) {
  return e == Estimator::kW ? "W" : "W_prime";
}

void ParsePlanner(const json& j, const Locator& loc, PlannerConfig* p) {
  Reader r(j, "planner", loc);
  const std::string kind = AsString(r.Require("optimality"), r.Field("optimality"));
  try {
    p->optimality.kind = ParseOptimalityKind(kind);
  } catch (const Error&) {
    Fail(r.Field("optimality"), "unknown optimality \"" + kind + "\"");
  }
  p->num_components = ParseDistribution(
      AsString(r.Require("distribution"), r.Field("distribution")));
  p->optimality.max_ent = AsBool(r.Require("max_ent"), r.Field("max_ent"));
  r.Double("kappa", &p->optimality.kappa);
  r.Double("elite_fraction", &p->optimality.elite_fraction);
  r.Double("lambda", &p->optimality.lambda);
  r.Int("K", &p->num_candidates);
  r.Int("P", &p->num_rollouts);
  r.Int("U", &p->iterations);
  r.Int("T", &p->horizon);
  r.Double("initial_variance", &p->initial_variance);
  r.Double("variance_floor", &p->variance_floor);
  r.Double("non_finite_reward", &p->non_finite_reward);
  if (const json* v = r.Find("estimator")) {
    p->estimator = ParseEstimator(AsString(*v, r.Field("estimator")),
                                  r.Field("estimator"));
  }
  r.Finish();
}

void ParseEnsemble(const json& j, const Locator& loc, EnsembleConfig* e) {
  Reader r(j, "ensemble", loc);
  r.Int("E", &e->ensemble_size);
  if (const json* v = r.Find("hidden")) {
    if (!v->is_array()) Fail("ensemble.hidden", "expected an array");
    e->hidden.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      e->hidden.push_back(
          AsInt((*v)[i], "ensemble.hidden[" + std::to_string(i) + "]"));
    }
  }
  r.Double("learning_rate", &e->learning_rate);
  r.Int("batch_size", &e->batch_size);
  r.Int("epochs", &e->epochs);
  r.Double("weight_decay", &e->weight_decay);
  r.Double("log_var_min", &e->log_var_min);
  r.Double("log_var_max", &e->log_var_max);
  r.Finish();
}

void ParseMbrl(const json& j, const Locator& loc, ExperimentConfig* cfg) {
  Reader r(j, "mbrl", loc);
  r.Int("episodes", &cfg->mbrl.episodes);
  r.Int("H", &cfg->mbrl.episode_length);
  r.Bool("deterministic_execution", &cfg->mbrl.deterministic_execution);
  r.Bool("checkpoint", &cfg->checkpoint);
  r.Bool("resume", &cfg->mbrl.resume);
  r.Finish();
}

bool IsSweepParameter(const std::string& name) {
  static const std::set<std::string> names = {
      "kappa", "M", "K", "P", "U", "T", "lambda", "elite_fraction", "E"};
  return names.count(name) > 0;
}

SweepConfig ParseSweep(const json& j, const Locator& loc) {
  Reader r(j, "sweep", loc);
  SweepConfig sweep;
  sweep.mode =
      ParseExperimentMode(AsString(r.Require("mode"), r.Field("mode")));
  if (sweep.mode == ExperimentMode::kSweep) {
    Fail("sweep.mode", "a sweep cannot nest another sweep");
  }
  sweep.parameter = AsString(r.Require("parameter"), r.Field("parameter"));
  if (!IsSweepParameter(sweep.parameter)) {
    Fail("sweep.parameter", "cannot sweep \"" + sweep.parameter + "\"");
  }
  const json& values = r.Require("values");
  if (!values.is_array() || values.empty()) {
    Fail("sweep.values", "expected a non-empty array");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    sweep.values.push_back(
        AsDouble(values[i], "sweep.values[" + std::to_string(i) + "]"));
  }
  r.Finish();
  return sweep;
}

// Turns kInvalidConfig from the library validators into kValidationError.
template <typename Fn>
void Validating(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidConfig ||
        e.code() == ErrorCode::kInvalidArgument ||
        e.code() == ErrorCode::kUnknownKind) {
      throw Error(ErrorCode::kValidationError, e.field(), e.what());
    }
    throw;
  }
}

void ValidateExperimentConfig(const ExperimentConfig& cfg) {
  Validating([&] {
    const std::unique_ptr<Environment> env = cfg.env.Make();
    cfg.mbrl.Validate(env->spec());
  });
}

json Vector2ToJson(const Eigen::Vector2d& v) { return json::array({v[0], v[1]}); }

json TaskToJson(const EnvConfig& env) {
  json task = json::object();
  if (env.kind == "point_mass") {
    const PointMassTask& t = env.point_mass;
    task["start"] = Vector2ToJson(t.start);
    task["goal"] = Vector2ToJson(t.goal);
    task["max_step"] = t.max_step;
    task["obstacle_cost"] = t.obstacle_cost;
    task["obstacles"] = json::array();
    for (const Obstacle& o : t.obstacles) {
      task["obstacles"].push_back(
          {{"center", Vector2ToJson(o.center)}, {"radius", o.radius}});
    }
  } else if (env.kind == "multimodal") {
    task["action_limit"] = env.multimodal_action_limit;
    task["modes"] = json::array();
    for (const Mode& m : env.multimodal.modes) {
      task["modes"].push_back({{"center", Vector2ToJson(m.center)},
                               {"height", m.height},
                               {"width", m.width}});
    }
  } else if (env.kind == "pendulum") {
    const PendulumParams& p = env.pendulum;
    task = {{"gravity", p.gravity},
            {"length", p.length},
            {"mass", p.mass},
            {"dt", p.dt},
            {"max_torque", p.max_torque}};
  }
  return task;
}

std::string SeedTag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

std::string ValueLabel(double v) { return FormatDouble(v); }

// --- per-seed jobs ---------------------------------------------------------

struct JobResult {
  bool ok = false;
  std::string error;
  std::vector<IterationDiagnostics> plan;
  std::vector<EpisodeRecord> episodes;
};

std::vector<std::string> NumberedColumns(const std::string& prefix, int n) {
  std::vector<std::string> cols;
  for (int i = 0; i < n; ++i) cols.push_back(prefix + std::to_string(i));
  return cols;
}

void WriteTrace(const fs::path& path, std::uint64_t seed,
                const std::vector<GmmParams>& trace) {
  const int d = trace.front().dim();
  std::vector<std::string> header = {"seed", "iteration", "component", "pi"};
  for (const auto& c : NumberedColumns("mu_", d)) header.push_back(c);
  for (const auto& c : NumberedColumns("var_", d)) header.push_back(c);
  CsvWriter out(path.string(), header);
  for (std::size_t j = 0; j < trace.size(); ++j) {
    const GmmParams& phi = trace[j];
    for (int m = 0; m < phi.num_components(); ++m) {
      out.Add(static_cast<unsigned long long>(seed))
          .Add(static_cast<int>(j + 1))
          .Add(m)
          .Add(phi.mixture[m]);
      for (int i = 0; i < d; ++i) out.Add(phi.means(m, i));
      for (int i = 0; i < d; ++i) out.Add(phi.variances(m, i));
      out.EndRow();
    }
  }
}

void WritePaths(const fs::path& path, std::uint64_t seed,
                const Environment& env, const GmmParams& phi) {
  std::vector<std::string> header = {"seed", "component", "pi", "t"};
  for (const auto& c : NumberedColumns("s_", env.state_dim())) {
    header.push_back(c);
  }
  CsvWriter out(path.string(), header);
  for (int m = 0; m < phi.num_components(); ++m) {
    ActionSequence actions = phi.Mean(m);
    env.bounds().ClipInPlace(&actions);
    Eigen::VectorXd s = env.InitialState();
    for (int t = 0; t <= phi.horizon; ++t) {
      out.Add(static_cast<unsigned long long>(seed))
          .Add(m)
          .Add(phi.mixture[m])
          .Add(t);
      for (double v : s) out.Add(v);
      out.EndRow();
      if (t < phi.horizon) s = env.Step(s, actions.step(t));
    }
  }
}

JobResult RunPlanJob(const ExperimentConfig& cfg, std::uint64_t seed,
                     int threads, const fs::path& dir) {
  JobResult result;
  const std::unique_ptr<Environment> env = cfg.env.Make();
  const EnsemblePosterior posterior = SingleModelPosterior(env->TrueModel());
  const Environment& e = *env;
  const RewardFn reward = [&e](const Eigen::VectorXd& s,
                               const Eigen::VectorXd& a,
                               const Eigen::VectorXd& next) {
    return e.Reward(s, a, next);
  };
  PlannerConfig planner = cfg.planner;
  planner.threads = threads;
  Rng rng(seed);
  const GmmParams phi =
      InitGmm(planner.num_components, planner.horizon, env->action_dim(),
              planner.initial_variance, rng);
  const PlanResult plan = Plan(env->InitialState(), phi, posterior, reward,
                               env->bounds(), planner, rng);

  const std::string tag = SeedTag(seed);
  WriteTrace(dir / ("trace_" + tag + ".csv"), seed, plan.trace);
  WritePaths(dir / ("paths_" + tag + ".csv"), seed, *env, plan.params);
  CsvWriter diag((dir / ("diagnostics_" + tag + ".csv")).string(),
                 {"seed", "iteration", "best_mean_reward", "mean_reward",
                  "effective_sample_size", "non_finite_rollouts"});
  for (const IterationDiagnostics& d : plan.diagnostics) {
    diag.Add(static_cast<unsigned long long>(seed))
        .Add(d.iteration)
        .Add(d.best_mean_reward)
        .Add(d.mean_reward)
        .Add(d.effective_sample_size)
        .Add(d.non_finite_rollouts);
    diag.EndRow();
  }
  result.plan = plan.diagnostics;
  result.ok = true;
  return result;
}

JobResult RunMbrlJob(const ExperimentConfig& cfg, std::uint64_t seed,
                     int threads, const fs::path& dir, std::ostream& log,
                     std::mutex& log_mutex) {
  JobResult result;
  const std::unique_ptr<Environment> env = cfg.env.Make();
  MbrlConfig mbrl = cfg.mbrl;
  mbrl.env = cfg.env.kind;
  mbrl.planner = cfg.planner;
  mbrl.planner.threads = threads;
  mbrl.ensemble.threads = threads;
  mbrl.seed = seed;
  const std::string tag = SeedTag(seed);
  if (cfg.checkpoint) {
    mbrl.checkpoint_dir = (dir / ("checkpoint_" + tag)).string();
  }
  const MbrlResult run =
      RunMbrl(mbrl, *env, [&](const EpisodeRecord& r) {
        std::lock_guard<std::mutex> lock(log_mutex);
        log << tag << " episode " << r.episode << " reward "
            << FormatDouble(r.total_reward) << '\n';
      });

  CsvWriter curve((dir / ("learning_curve_" + tag + ".csv")).string(),
                  {"seed", "episode", "total_reward", "dataset_size",
                   "plan_ess_mean"});
  CsvWriter model((dir / ("model_" + tag + ".csv")).string(),
                  {"seed", "episode", "validation_nll", "failed_plans"});
  for (const EpisodeRecord& r : run.episodes) {
    curve.Add(static_cast<unsigned long long>(seed))
        .Add(r.episode)
        .Add(r.total_reward)
        .Add(r.dataset_size)
        .Add(r.plan_ess_mean);
    curve.EndRow();
    model.Add(static_cast<unsigned long long>(seed))
        .Add(r.episode)
        .Add(r.validation_nll)
        .Add(r.failed_plans);
    model.EndRow();
  }
  result.episodes = run.episodes;
  result.ok = true;
  return result;
}

void WriteObjectiveGrid(const fs::path& path, const EnvConfig& env) {
  constexpr int kPoints = 81;
  const double limit = env.multimodal_action_limit;
  CsvWriter out(path.string(), {"a_0", "a_1", "value"});
  for (int i = 0; i < kPoints; ++i) {
    for (int j = 0; j < kPoints; ++j) {
      const Eigen::Vector2d a(-limit + 2.0 * limit * i / (kPoints - 1),
                              -limit + 2.0 * limit * j / (kPoints - 1));
      out.Add(a[0]).Add(a[1]).Add(MultimodalEval(a, env.multimodal));
      out.EndRow();
    }
  }
}

// Metric per index (episode or iteration) for each successful seed.
std::vector<std::vector<double>> Metric(const std::vector<JobResult>& jobs,
                                        ExperimentMode mode) {
  std::vector<std::vector<double>> rows;
  for (const JobResult& job : jobs) {
    if (!job.ok) continue;
    const std::size_t n =
        mode == ExperimentMode::kMbrl ? job.episodes.size() : job.plan.size();
    if (rows.size() < n) rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      rows[i].push_back(mode == ExperimentMode::kMbrl
                            ? job.episodes[i].total_reward
                            : job.plan[i].best_mean_reward);
    }
  }
  return rows;
}

double Mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / v.size();
}

void WriteSummary(const fs::path& path, const std::vector<JobResult>& jobs,
                  ExperimentMode mode) {
  if (mode == ExperimentMode::kMbrl) {
    CsvWriter out(path.string(),
                  {"episode", "num_seeds", "total_reward_mean",
                   "total_reward_ci95", "validation_nll_mean"});
    const auto rewards = Metric(jobs, mode);
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      std::vector<double> nll;
      for (const JobResult& job : jobs) {
        if (job.ok && i < job.episodes.size()) {
          nll.push_back(job.episodes[i].validation_nll);
        }
      }
      out.Add(static_cast<int>(i + 1))
          .Add(static_cast<int>(rewards[i].size()))
          .Add(Mean(rewards[i]))
          .Add(ConfidenceHalfWidth(rewards[i]))
          .Add(Mean(nll));
      out.EndRow();
    }
    return;
  }
  CsvWriter out(path.string(),
                {"iteration", "num_seeds", "best_mean_reward_mean",
                 "best_mean_reward_ci95", "effective_sample_size_mean"});
  const auto best = Metric(jobs, mode);
  for (std::size_t i = 0; i < best.size(); ++i) {
    std::vector<double> ess;
    for (const JobResult& job : jobs) {
      if (job.ok && i < job.plan.size()) {
        ess.push_back(job.plan[i].effective_sample_size);
      }
    }
    out.Add(static_cast<int>(i + 1))
        .Add(static_cast<int>(best[i].size()))
        .Add(Mean(best[i]))
        .Add(ConfidenceHalfWidth(best[i]))
        .Add(Mean(ess));
    out.EndRow();
  }
}

void WriteManifest(const ExperimentSpec& spec) {
  json manifest;
  manifest["format"] = kManifestFormat;
  manifest["library_version"] = kLibraryVersion;
  manifest["mode"] = ExperimentModeName(spec.mode);
  manifest["seeds"] = spec.seeds;
  manifest["config"] = json::parse(ConfigToJson(spec.config));
  std::ofstream out(fs::path(spec.output_dir) / kManifestFile);
  if (!out) {
    throw Error(ErrorCode::kIo, spec.output_dir, "cannot write manifest");
  }
  out << manifest.dump(2) << '\n';
}

struct Variant {
  std::string label;
  ExperimentConfig config;
  fs::path dir;
};

}  // namespace

std::string_view ExperimentModeName(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::kPlanOnce:
      return "plan_once";
    case ExperimentMode::kFitObjective:
      return "fit_objective";
    case ExperimentMode::kMbrl:
      return "mbrl";
    case ExperimentMode::kSweep:
      return "sweep";
  }
  return "unknown";
}

ExperimentMode ParseExperimentMode(std::string_view text) {
  if (text == "plan_once" || text == "plan") return ExperimentMode::kPlanOnce;
  if (text == "fit_objective" || text == "fit") {
    return ExperimentMode::kFitObjective;
  }
  if (text == "mbrl") return ExperimentMode::kMbrl;
  if (text == "sweep") return ExperimentMode::kSweep;
  throw Error(ErrorCode::kParseError, "mode",
              "unknown mode \"" + std::string(text) + "\"");
}

std::unique_ptr<Environment> EnvConfig::Make() const {
  if (kind == "point_mass") return std::make_unique<PointMassEnv>(point_mass);
  if (kind == "multimodal") {
    if (!(multimodal_action_limit > 0.0)) {
      throw Error(ErrorCode::kInvalidConfig, "task.action_limit",
                  "must be > 0");
    }
    return std::make_unique<MultimodalEnv>(multimodal,
                                           multimodal_action_limit);
  }
  if (kind == "pendulum") {
    const PendulumParams& p = pendulum;
    if (!(p.gravity >= 0.0 && p.length > 0.0 && p.mass > 0.0 && p.dt > 0.0 &&
          p.max_torque > 0.0)) {
      throw Error(ErrorCode::kInvalidConfig, "task",
                  "pendulum needs gravity >= 0 and positive length, mass, dt, "
                  "max_torque");
    }
    return std::make_unique<PendulumEnv>(pendulum);
  }
  return MakeEnvironment(kind);
}

int ParseDistribution(std::string_view text) {
  if (text == "Gaussian") return 1;
  constexpr std::string_view kPrefix = "GMM(M=";
  if (text.size() > kPrefix.size() + 1 && text.substr(0, kPrefix.size()) == kPrefix &&
      text.back() == ')') {
    const std::string_view digits =
        text.substr(kPrefix.size(), text.size() - kPrefix.size() - 1);
    int m = 0;
    const auto r = std::from_chars(digits.data(), digits.data() + digits.size(), m);
    if (r.ec == std::errc() && r.ptr == digits.data() + digits.size() && m >= 1) {
      return m;
    }
  }
  throw Error(ErrorCode::kParseError, "planner.distribution",
              "expected \"Gaussian\" or \"GMM(M=<n>)\" with n >= 1, got \"" +
                  std::string(text) + "\"");
}

std::string DistributionName(int num_components) {
  return "GMM(M=" + std::to_string(num_components) + ")";
}

ExperimentConfig ParseConfigText(const std::string& text,
                                 const std::string& source) {
  const Locator loc(text);
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, source,
                "line " + std::to_string(loc.LineOf(e.byte == 0 ? 0 : e.byte - 1)) +
                    ": " + e.what());
  }
  ExperimentConfig cfg;
  Reader top(root, "", loc);
  cfg.env.kind = AsString(top.Require("env"), "env");
  if (std::find(KnownEnvs().begin(), KnownEnvs().end(), cfg.env.kind) ==
      KnownEnvs().end()) {
    throw Error(ErrorCode::kValidationError, "env",
                "unknown task \"" + cfg.env.kind + "\"");
  }
  if (const json* task = top.Find("task")) ParseTask(*task, loc, &cfg.env);
  if (const json* seeds = top.Find("seeds")) {
    if (!seeds->is_array() || seeds->empty()) {
      Fail("seeds", "expected a non-empty array");
    }
    cfg.seeds.clear();
    for (std::size_t i = 0; i < seeds->size(); ++i) {
      cfg.seeds.push_back(AsSeed((*seeds)[i], "seeds[" + std::to_string(i) + "]"));
    }
  }
  ParsePlanner(top.Require("planner"), loc, &cfg.planner);
  if (const json* e = top.Find("ensemble")) {
    ParseEnsemble(*e, loc, &cfg.mbrl.ensemble);
  }
  if (const json* m = top.Find("mbrl")) ParseMbrl(*m, loc, &cfg);
  if (const json* s = top.Find("sweep")) cfg.sweep = ParseSweep(*s, loc);
  top.Finish();

  cfg.mbrl.env = cfg.env.kind;
  cfg.mbrl.planner = cfg.planner;
  ValidateExperimentConfig(cfg);
  if (cfg.sweep) {
    for (double v : cfg.sweep->values) {
      ExperimentConfig variant = cfg;
      ApplySweepValue(cfg.sweep->parameter, v, &variant);
      ValidateExperimentConfig(variant);
    }
  }
  return cfg;
}

ExperimentConfig ParseConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, path, "cannot open config");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseConfigText(buffer.str(), path);
}

std::string ConfigToJson(const ExperimentConfig& cfg) {
  const PlannerConfig& p = cfg.planner;
  const EnsembleConfig& e = cfg.mbrl.ensemble;
  json j;
  j["env"] = cfg.env.kind;
  j["task"] = TaskToJson(cfg.env);
  if (j["task"].empty()) j.erase("task");
  j["seeds"] = cfg.seeds;
  j["planner"] = {{"optimality", OptimalityKindName(p.optimality.kind)},
                  {"distribution", DistributionName(p.num_components)},
                  {"max_ent", p.optimality.max_ent},
                  {"kappa", p.optimality.kappa},
                  {"elite_fraction", p.optimality.elite_fraction},
                  {"lambda", p.optimality.lambda},
                  {"K", p.num_candidates},
                  {"P", p.num_rollouts},
                  {"U", p.iterations},
                  {"T", p.horizon},
                  {"initial_variance", p.initial_variance},
                  {"variance_floor", p.variance_floor},
                  {"non_finite_reward", p.non_finite_reward},
                  {"estimator", EstimatorName(p.estimator)}};
  j["ensemble"] = {{"E", e.ensemble_size},
                   {"hidden", e.hidden},
                   {"learning_rate", e.learning_rate},
                   {"batch_size", e.batch_size},
                   {"epochs", e.epochs},
                   {"weight_decay", e.weight_decay},
                   {"log_var_min", e.log_var_min},
                   {"log_var_max", e.log_var_max}};
  j["mbrl"] = {{"episodes", cfg.mbrl.episodes},
               {"H", cfg.mbrl.episode_length},
               {"deterministic_execution", cfg.mbrl.deterministic_execution},
               {"checkpoint", cfg.checkpoint},
               {"resume", cfg.mbrl.resume}};
  if (cfg.sweep) {
    j["sweep"] = {{"mode", ExperimentModeName(cfg.sweep->mode)},
                  {"parameter", cfg.sweep->parameter},
                  {"values", cfg.sweep->values}};
  }
  return j.dump(2);
}

void ApplySweepValue(const std::string& parameter, double value,
                     ExperimentConfig* config) {
  PlannerConfig& p = config->planner;
  auto integer = [&](int* out) {
    if (value != std::floor(value) || std::abs(value) > 1e9) {
      Fail("sweep.values", parameter + " takes integer values");
    }
    *out = static_cast<int>(value);
  };
  if (parameter == "kappa") {
    p.optimality.kappa = value;
  } else if (parameter == "lambda") {
    p.optimality.lambda = value;
  } else if (parameter == "elite_fraction") {
    p.optimality.elite_fraction = value;
  } else if (parameter == "M") {
    integer(&p.num_components);
  } else if (parameter == "K") {
    integer(&p.num_candidates);
  } else if (parameter == "P") {
    integer(&p.num_rollouts);
  } else if (parameter == "U") {
    integer(&p.iterations);
  } else if (parameter == "T") {
    integer(&p.horizon);
  } else if (parameter == "E") {
    integer(&config->mbrl.ensemble.ensemble_size);
  } else {
    Fail("sweep.parameter", "cannot sweep \"" + parameter + "\"");
  }
  config->mbrl.planner = p;
}

void ExperimentSpec::Validate() const {
  if (seeds.empty()) {
    throw Error(ErrorCode::kValidationError, "seeds", "seed list is empty");
  }
  if (threads < 1) {
    throw Error(ErrorCode::kValidationError, "threads", "must be >= 1");
  }
  if (mode == ExperimentMode::kSweep && !config.sweep) {
    throw Error(ErrorCode::kValidationError, "sweep",
                "sweep mode needs a \"sweep\" section");
  }
  const bool fit = mode == ExperimentMode::kFitObjective ||
                   (mode == ExperimentMode::kSweep && config.sweep &&
                    config.sweep->mode == ExperimentMode::kFitObjective);
  if (fit && config.env.kind != "multimodal") {
    throw Error(ErrorCode::kValidationError, "env",
                "fit_objective runs on the multimodal objective");
  }
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec || !fs::is_directory(output_dir)) {
    throw Error(ErrorCode::kValidationError, "out",
                "cannot create output directory " + output_dir);
  }
  const fs::path probe = fs::path(output_dir) / ".vimpc_write_probe";
  {
    std::ofstream test(probe);
    if (!test) {
      throw Error(ErrorCode::kValidationError, "out",
                  "output directory is not writable: " + output_dir);
    }
  }
  fs::remove(probe, ec);
}

ExperimentSpec MakeExperimentSpec(ExperimentMode mode,
                                  const std::string& config_path,
                                  const std::string& output_dir,
                                  const std::vector<std::uint64_t>& seeds,
                                  int threads) {
  ExperimentSpec spec;
  spec.mode = mode;
  spec.config_path = config_path;
  spec.output_dir = output_dir;
  spec.threads = threads;
  spec.config = ParseConfigFile(config_path);
  spec.seeds = seeds.empty() ? spec.config.seeds : seeds;
  spec.config.seeds = spec.seeds;
  return spec;
}

ExperimentSpec SpecFromManifest(const std::string& manifest_path,
                                const std::string& output_dir, int threads) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::kIo, manifest_path, "cannot open manifest");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, manifest_path, e.what());
  }
  if (!manifest.is_object() || manifest.value("format", "") != kManifestFormat) {
    throw Error(ErrorCode::kParseError, manifest_path, "not a run manifest");
  }
  ExperimentSpec spec;
  spec.config_path = manifest_path;
  spec.output_dir = output_dir;
  spec.threads = threads;
  spec.mode = ParseExperimentMode(AsString(manifest.at("mode"), "mode"));
  spec.config = ParseConfigText(manifest.at("config").dump(2), manifest_path);
  spec.seeds = spec.config.seeds;
  return spec;
}

std::vector<std::uint64_t> ParseSeedList(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  auto parse = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
      throw Error(ErrorCode::kParseError, "seeds",
                  "bad seed \"" + std::string(s) + "\"");
    }
    return v;
  };
  while (!text.empty()) {
    const std::size_t comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    const std::size_t dash = item.find('-');
    if (dash == std::string_view::npos) {
      seeds.push_back(parse(item));
    } else {
      const std::uint64_t lo = parse(item.substr(0, dash));
      const std::uint64_t hi = parse(item.substr(dash + 1));
      if (hi < lo || hi - lo > 100000) {
        throw Error(ErrorCode::kParseError, "seeds",
                    "bad seed range \"" + std::string(item) + "\"");
      }
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    }
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (seeds.empty()) {
    throw Error(ErrorCode::kParseError, "seeds", "seed list is empty");
  }
  return seeds;
}

double ConfidenceHalfWidth(const std::vector<double>& values) {
  // Two-sided 95% Student t quantiles for 1..30 degrees of freedom.
  static constexpr double kT[] = {
      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
      2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
      2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double mean = Mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));
  const double t = n - 1 <= 30 ? kT[n - 2] : 1.960;
  return t * sd / std::sqrt(static_cast<double>(n));
}

int RunExperiment(const ExperimentSpec& spec, std::ostream& log) {
  spec.Validate();
  const fs::path out = spec.output_dir;
  ExperimentConfig base = spec.config;
  base.seeds = spec.seeds;
  WriteManifest(spec);

  ExperimentMode mode = spec.mode;
  std::vector<Variant> variants;
  if (mode == ExperimentMode::kSweep) {
    mode = base.sweep->mode;
    for (double v : base.sweep->values) {
      Variant variant;
      variant.label = base.sweep->parameter + "=" + ValueLabel(v);
      variant.config = base;
      ApplySweepValue(base.sweep->parameter, v, &variant.config);
      variant.dir = out / (base.sweep->parameter + "_" + ValueLabel(v));
      fs::create_directories(variant.dir);
      variants.push_back(std::move(variant));
    }
  } else {
    variants.push_back({"", base, out});
  }
  if (mode == ExperimentMode::kFitObjective) {
    WriteObjectiveGrid(out / "objective_grid.csv", base.env);
  }

  const int num_seeds = static_cast<int>(spec.seeds.size());
  const int num_jobs = static_cast<int>(variants.size()) * num_seeds;
  // Independent jobs in parallel; a lone job gets the threads instead.
  const int job_threads = num_jobs > 1 ? spec.threads : 1;
  const int inner_threads = num_jobs > 1 ? 1 : spec.threads;
  std::vector<JobResult> results(num_jobs);
  std::mutex log_mutex;
  ParallelChunks(num_jobs, job_threads, [&](int begin, int end) {
    for (int job = begin; job < end; ++job) {
      const Variant& variant = variants[job / num_seeds];
      const std::uint64_t seed = spec.seeds[job % num_seeds];
      try {
        results[job] =
            mode == ExperimentMode::kMbrl
                ? RunMbrlJob(variant.config, seed, inner_threads, variant.dir,
                             log, log_mutex)
                : RunPlanJob(variant.config, seed, inner_threads, variant.dir);
      } catch (const std::exception& e) {
        results[job].ok = false;
        results[job].error = e.what();
      }
      std::lock_guard<std::mutex> lock(log_mutex);
      log << (variant.label.empty() ? "" : variant.label + " ") << SeedTag(seed)
          << (results[job].ok ? " done" : " FAILED: " + results[job].error)
          << '\n';
    }
  });

  bool all_ok = true;
  std::vector<std::vector<JobResult>> per_variant(variants.size());
  for (int job = 0; job < num_jobs; ++job) {
    all_ok = all_ok && results[job].ok;
    per_variant[job / num_seeds].push_back(std::move(results[job]));
  }
  for (std::size_t v = 0; v < variants.size(); ++v) {
    WriteSummary(variants[v].dir / "summary.csv", per_variant[v], mode);
  }

  if (spec.mode == ExperimentMode::kSweep) {
    const std::string index =
        mode == ExperimentMode::kMbrl ? "episode" : "iteration";
    std::vector<std::string> header = {index};
    std::vector<std::vector<std::vector<double>>> metrics;
    std::size_t rows = 0;
    for (std::size_t v = 0; v < variants.size(); ++v) {
      header.push_back(variants[v].label);
      header.push_back(variants[v].label + "_ci95");
      metrics.push_back(Metric(per_variant[v], mode));
      rows = std::max(rows, metrics.back().size());
    }
    CsvWriter sweep((out / "sweep.csv").string(), header);
    for (std::size_t i = 0; i < rows; ++i) {
      sweep.Add(static_cast<int>(i + 1));
      for (const auto& m : metrics) {
        if (i < m.size()) {
          sweep.Add(Mean(m[i])).Add(ConfidenceHalfWidth(m[i]));
        } else {
          sweep.Add(std::string()).Add(std::string());
        }
      }
      sweep.EndRow();
    }
  }
  return all_ok ? 0 : 1;
}

}  // namespace vimpc
