#pragma once

#include "opes/ars.hpp"
#include "opes/env.hpp"
#include "opes/lqr.hpp"
#include "opes/linear_policy.hpp"
#include "opes/tres.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace opes {

enum class Algorithm { kBrs, kArsV1, kArsV2, kArsV1t, kArsV2t, kOpArs, kTres, kOpTres };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);  // ConfigError on unknown names
bool is_tres(Algorithm a);

struct EnvSpec {
  std::string name = "lqr";  // "lqr" | "pendulum"
  LqrSpec lqr = LqrSpec::benchmark();
  double torque_limit = 2.0;
  double dt = 0.05;
  int pendulum_horizon_cap = 200;

  std::unique_ptr<Env> make() const;  // ConfigError on unknown names
  bool is_lqr() const { return name == "lqr"; }
};

struct ExperimentSpec {
  std::string name = "experiment";
  Algorithm algorithm = Algorithm::kOpArs;
  EnvSpec env;
  ArsConfig ars;
  TresConfig tres;
  std::vector<std::uint64_t> seeds = {0};
  int eval_every = 10;
  int eval_trajectories = 100;
  double reward_threshold = 0.0;
  // When set, the threshold is -factor * (Riccati average cost) on LQR.
  std::optional<double> riccati_threshold_factor;
  // Report evaluation as average reward per step instead of episode return.
  bool eval_per_step = false;
  std::uint64_t max_env_steps = 1'000'000;
  std::size_t noise_table_size = kDefaultNoiseTableSize;
  bool stop_at_threshold = true;

  void validate() const;
  int horizon() const;
  // reward_threshold after resolving riccati_threshold_factor.
  double effective_threshold() const;
};

ExperimentSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec load_spec(const std::string& path);

LqrSpec lqr_spec_from_json(const nlohmann::json& j);
nlohmann::json lqr_spec_to_json(const LqrSpec& spec);

struct RecordRow {
  std::uint64_t iteration = 0;  // iterations completed
  std::uint64_t cumulative_env_steps = 0;
  double eval_reward = 0.0;
  double wall_seconds = 0.0;
};

// Policy after an iteration, on the cumulative training-step axis.
struct PolicyCheckpoint {
  std::uint64_t env_steps = 0;
  Eigen::MatrixXd M;
  RunningStats stats;
  bool normalize = true;

  LinearPolicy policy() const { return LinearPolicy(M, stats, normalize); }
};

struct IterationLog {
  std::uint64_t env_steps = 0;
  int trajectories = 0;
  bool on_policy_ranking = false;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<RecordRow> rows;
  std::optional<std::uint64_t> crossing;  // first cumulative step count at or above threshold
  std::vector<PolicyCheckpoint> checkpoints;  // starts with the step-0 policy
  std::vector<IterationLog> iterations;
};

struct ExperimentRecord {
  ExperimentSpec spec;
  double threshold = 0.0;
  std::vector<SeedRun> runs;  // in spec.seeds order
  std::optional<double> median_crossing;  // lower median over seeds that crossed
  int reach_count = 0;
};

// Lower median (element (k-1)/2 of the sorted values); nullopt when empty.
std::optional<double> lower_median(std::vector<double> values);

// Linear-interpolation quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

// Trains each seed until the threshold is crossed (when stop_at_threshold)
// or max_env_steps is spent, evaluating every eval_every iterations.
// Evaluation rollouts are not counted as training steps. The record is a
// pure function of the spec; `threads` only changes the schedule.
ExperimentRecord run_experiment(const ExperimentSpec& spec, int threads = 1);

// Mean evaluation reward of a policy (no survival subtraction).
double evaluate_policy(const Env& env, const LinearPolicy& policy, int horizon,
                       int trajectories, std::uint64_t seed, bool per_step,
                       int threads = 1);

struct StabilityPoint {
  std::uint64_t budget = 0;
  int stable_seeds = 0;
  int total_seeds = 0;
  double fraction = 0.0;
};

// For each budget, the fraction of seeds whose latest policy within that
// budget stabilizes the LQR system. Throws UnsupportedMetricError for other
// environments.
std::vector<StabilityPoint> frequency_of_stability(std::span<const SeedRun> runs,
                                                   std::span<const std::uint64_t> budgets,
                                                   const EnvSpec& env);

// u = -K x gain of a checkpoint, with normalization folded in.
Eigen::MatrixXd checkpoint_gain(const PolicyCheckpoint& checkpoint);

using SweepGrid = std::vector<std::pair<std::string, std::vector<nlohmann::json>>>;

struct PercentileRow {
  std::size_t eval_index = 0;
  double median_steps = 0.0;
  double low = 0.0;
  double median = 0.0;
  double high = 0.0;
  int count = 0;
};

struct SweepResult {
  std::vector<nlohmann::json> combinations;
  std::vector<ExperimentRecord> records;
  std::vector<PercentileRow> percentiles;
  double low_pct = 10.0;
  double high_pct = 90.0;
};

// Cartesian product of the grid applied to base; keys resolve against the
// spec's top level first, then its "config" and "env" objects.
SweepResult sweep(const SweepGrid& grid, const ExperimentSpec& base, int threads = 1,
                  double low_pct = 10.0, double high_pct = 90.0);

SweepGrid grid_from_json(const nlohmann::json& j);

std::vector<PercentileRow> percentile_summary(std::span<const ExperimentRecord> records,
                                              double low_pct, double high_pct);

// CSV per seed, JSON summary and one policy checkpoint per seed.
void write_record(const ExperimentRecord& record, const std::string& dir);
nlohmann::json summary_json(const ExperimentRecord& record);
void write_sweep(const SweepResult& result, const std::string& dir);

}  // namespace opes
