#include "opes/harness.hpp"

#include "opes/error.hpp"
#include "opes/parallel.hpp"
#include "opes/pendulum.hpp"
#include "opes/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace opes {

using nlohmann::json;

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kBrs: return "BRS";
    case Algorithm::kArsV1: return "ARS-V1";
    case Algorithm::kArsV2: return "ARS-V2";
    case Algorithm::kArsV1t: return "ARS-V1t";
    case Algorithm::kArsV2t: return "ARS-V2t";
    case Algorithm::kOpArs: return "OP-ARS";
    case Algorithm::kTres: return "TRES";
    case Algorithm::kOpTres: return "OP-TRES";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::kBrs, Algorithm::kArsV1, Algorithm::kArsV2, Algorithm::kArsV1t,
                      Algorithm::kArsV2t, Algorithm::kOpArs, Algorithm::kTres,
                      Algorithm::kOpTres}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown algorithm: " + name);
}

bool is_tres(Algorithm a) { return a == Algorithm::kTres || a == Algorithm::kOpTres; }

namespace {

ArsVariant variant_for(Algorithm a) {
  switch (a) {
    case Algorithm::kBrs: return ArsVariant::kBrs;
    case Algorithm::kArsV1: return ArsVariant::kV1;
    case Algorithm::kArsV2: return ArsVariant::kV2;
    case Algorithm::kArsV1t: return ArsVariant::kV1t;
    case Algorithm::kArsV2t: return ArsVariant::kV2t;
    default: return ArsVariant::kOffPolicy;
  }
}

}  // namespace

std::unique_ptr<Env> EnvSpec::make() const {
  if (name == "lqr") return lqr_env(lqr);
  if (name == "pendulum") return std::make_unique<PendulumEnv>(torque_limit, dt, pendulum_horizon_cap);
  throw ConfigError("unknown environment: " + name);
}

void ExperimentSpec::validate() const {
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (eval_trajectories < 1) throw ConfigError("eval_trajectories must be >= 1");
  if (noise_table_size == 0) throw ConfigError("noise_table_size must be positive");
  if (is_tres(algorithm)) {
    tres.validate();
  } else {
    ars.validate();
  }
  if (riccati_threshold_factor && !env.is_lqr()) {
    throw ConfigError("riccati_threshold_factor requires the lqr environment");
  }
  if (env.is_lqr()) {
    env.lqr.validate();
  } else if (env.name != "pendulum") {
    throw ConfigError("unknown environment: " + env.name);
  }
}

int ExperimentSpec::horizon() const { return is_tres(algorithm) ? tres.horizon : ars.horizon; }

double ExperimentSpec::effective_threshold() const {
  if (!riccati_threshold_factor) return reward_threshold;
  const double cost = riccati_optimal(env.lqr).optimal_avg_cost;
  const double per_step = -*riccati_threshold_factor * cost;
  return eval_per_step ? per_step : per_step * horizon();
}

// ---------------------------------------------------------------------------
// JSON

namespace {

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                                 const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows * cols) {
    throw ConfigError(std::string("LQR: ") + what + " must be a row-major array of " +
                      std::to_string(rows * cols) + " numbers");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r * cols + c].get<double>();
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  }
  return arr;
}

double number_or_inf(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    throw ConfigError("expected a number or \"-inf\", got " + s);
  }
  return j.get<double>();
}

json threshold_to_json(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  return v;
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

LqrSpec lqr_spec_from_json(const json& j) {
  LqrSpec spec = LqrSpec::benchmark();
  if (j.contains("A")) {
    const auto n = j.at("n").get<Eigen::Index>();
    const auto m = j.at("m").get<Eigen::Index>();
    spec.A = matrix_from_json(j.at("A"), n, n, "A");
    spec.B = matrix_from_json(j.at("B"), n, m, "B");
    spec.Q = matrix_from_json(j.at("Q"), n, n, "Q");
    spec.R = matrix_from_json(j.at("R"), m, m, "R");
  }
  read_opt(j, "process_noise_std", spec.process_noise_std);
  read_opt(j, "init_state_std", spec.init_state_std);
  read_opt(j, "horizon_cap", spec.horizon_cap);
  spec.validate();
  return spec;
}

json lqr_spec_to_json(const LqrSpec& spec) {
  return {{"name", "lqr"},
          {"n", spec.state_dim()},
          {"m", spec.action_dim()},
          {"A", matrix_to_json(spec.A)},
          {"B", matrix_to_json(spec.B)},
          {"Q", matrix_to_json(spec.Q)},
          {"R", matrix_to_json(spec.R)},
          {"process_noise_std", spec.process_noise_std},
          {"init_state_std", spec.init_state_std},
          {"horizon_cap", spec.horizon_cap}};
}

ExperimentSpec spec_from_json(const json& j) {
  try {
    ExperimentSpec spec;
    read_opt(j, "name", spec.name);
    if (j.contains("algorithm")) spec.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());

    if (j.contains("env")) {
      const json& e = j.at("env");
      spec.env.name = e.value("name", std::string("lqr"));
      if (spec.env.name == "lqr") {
        spec.env.lqr = lqr_spec_from_json(e);
      } else if (spec.env.name == "pendulum") {
        read_opt(e, "torque_limit", spec.env.torque_limit);
        read_opt(e, "dt", spec.env.dt);
        read_opt(e, "horizon_cap", spec.env.pendulum_horizon_cap);
      } else {
        throw ConfigError("unknown environment: " + spec.env.name);
      }
    }

    if (j.contains("config")) {
      const json& c = j.at("config");
      read_opt(c, "alpha", spec.ars.alpha);
      read_opt(c, "N", spec.ars.N);
      read_opt(c, "b", spec.ars.b);
      read_opt(c, "nu", spec.ars.nu);
      read_opt(c, "horizon", spec.ars.horizon);
      read_opt(c, "h", spec.ars.h);
      read_opt(c, "n_b", spec.ars.n_b);
      read_opt(c, "interleave_period", spec.ars.interleave_period);
      read_opt(c, "subtract_survival", spec.ars.subtract_survival);
      spec.tres.alpha = spec.ars.alpha;
      spec.tres.N = spec.ars.N;
      spec.tres.b = spec.ars.b;
      spec.tres.horizon = spec.ars.horizon;
      spec.tres.h = spec.ars.h;
      spec.tres.n_b = spec.ars.n_b;
      spec.tres.subtract_survival = spec.ars.subtract_survival;
      read_opt(c, "sigma", spec.tres.sigma);
      read_opt(c, "K", spec.tres.K);
      read_opt(c, "lambda", spec.tres.lambda);
    }
    spec.ars.variant = variant_for(spec.algorithm);
    spec.tres.off_policy = spec.algorithm == Algorithm::kOpTres;

    read_opt(j, "seeds", spec.seeds);
    read_opt(j, "eval_every", spec.eval_every);
    read_opt(j, "eval_trajectories", spec.eval_trajectories);
    if (j.contains("reward_threshold")) spec.reward_threshold = number_or_inf(j.at("reward_threshold"));
    if (j.contains("riccati_threshold_factor") && !j.at("riccati_threshold_factor").is_null()) {
      spec.riccati_threshold_factor = j.at("riccati_threshold_factor").get<double>();
    }
    read_opt(j, "eval_per_step", spec.eval_per_step);
    read_opt(j, "max_env_steps", spec.max_env_steps);
    read_opt(j, "noise_table_size", spec.noise_table_size);
    read_opt(j, "stop_at_threshold", spec.stop_at_threshold);
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

json spec_to_json(const ExperimentSpec& spec) {
  json config;
  if (is_tres(spec.algorithm)) {
    const auto& t = spec.tres;
    config = {{"alpha", t.alpha}, {"N", t.N}, {"b", t.b}, {"horizon", t.horizon},
              {"sigma", t.sigma}, {"K", t.K}, {"lambda", t.lambda},
              {"subtract_survival", t.subtract_survival}};
    if (t.off_policy) {
      config["h"] = t.h;
      config["n_b"] = t.n_b;
    }
  } else {
    const auto& a = spec.ars;
    config = {{"alpha", a.alpha}, {"N", a.N}, {"b", a.b}, {"nu", a.nu},
              {"horizon", a.horizon}, {"subtract_survival", a.subtract_survival}};
    if (a.variant == ArsVariant::kOffPolicy) {
      config["h"] = a.h;
      config["n_b"] = a.n_b;
      config["interleave_period"] = a.interleave_period;
    }
  }
  json env;
  if (spec.env.is_lqr()) {
    env = lqr_spec_to_json(spec.env.lqr);
  } else {
    env = {{"name", spec.env.name},
           {"torque_limit", spec.env.torque_limit},
           {"dt", spec.env.dt},
           {"horizon_cap", spec.env.pendulum_horizon_cap}};
  }
  json j = {{"name", spec.name},
            {"algorithm", to_string(spec.algorithm)},
            {"env", env},
            {"config", config},
            {"seeds", spec.seeds},
            {"eval_every", spec.eval_every},
            {"eval_trajectories", spec.eval_trajectories},
            {"reward_threshold", threshold_to_json(spec.reward_threshold)},
            {"eval_per_step", spec.eval_per_step},
            {"max_env_steps", spec.max_env_steps},
            {"noise_table_size", spec.noise_table_size},
            {"stop_at_threshold", spec.stop_at_threshold}};
  if (spec.riccati_threshold_factor) j["riccati_threshold_factor"] = *spec.riccati_threshold_factor;
  return j;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return spec_from_json(j);
}

// ---------------------------------------------------------------------------
// Statistics helpers

std::optional<double> lower_median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ConfigError("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

// ---------------------------------------------------------------------------
// Training

double evaluate_policy(const Env& env, const LinearPolicy& policy, int horizon,
                       int trajectories, std::uint64_t seed, bool per_step, int threads) {
  std::vector<double> scores(static_cast<std::size_t>(trajectories));
  const Policy act = policy.as_callable();
  parallel_for(scores.size(), threads, [&](std::size_t k) {
    auto local = env.clone();
    const Trajectory traj = rollout(*local, act, horizon, derive_seed(seed, k), 0.0);
    scores[k] = per_step ? traj.total_reward / static_cast<double>(traj.size())
                         : traj.total_reward;
  });
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

namespace {

SeedRun run_seed(const ExperimentSpec& spec, std::uint64_t seed, double threshold,
                 int threads) {
  const auto start = std::chrono::steady_clock::now();
  const auto env = spec.env.make();
  const NoiseTable noise(derive_seed(seed, seeds::kNoise), spec.noise_table_size);
  const IterationContext ctx{env.get(), &noise, seed, threads};
  const int p = env->action_dim();
  const int n = env->state_dim();
  const bool tres = is_tres(spec.algorithm);
  const bool normalize = !tres && normalizes_states(spec.ars.variant);

  ArsState ars = ArsState::initial(p, n);
  TresState tres_state = TresState::initial(p, n);
  auto current = [&]() -> PolicyCheckpoint {
    if (tres) return {0, tres_state.policy_matrix(), RunningStats(n), false};
    return {0, ars.M, ars.stats, normalize};
  };

  SeedRun run;
  run.seed = seed;
  run.checkpoints.push_back(current());

  std::uint64_t cumulative = 0;
  std::uint64_t iteration = 0;
  while (cumulative < spec.max_env_steps) {
    IterationLog log;
    if (tres) {
      const TresOutcome out = tres_iteration(tres_state, spec.tres, ctx);
      log = {out.env_steps_used, out.trajectories_used, !spec.tres.off_policy};
    } else {
      const IterationOutcome out = ars_iteration(ars, spec.ars, ctx);
      log = {out.env_steps_used, out.trajectories_used, out.on_policy_ranking};
    }
    cumulative += log.env_steps;
    ++iteration;
    run.iterations.push_back(log);
    PolicyCheckpoint cp = current();
    cp.env_steps = cumulative;
    run.checkpoints.push_back(cp);

    if (iteration % static_cast<std::uint64_t>(spec.eval_every) == 0) {
      const double reward =
          evaluate_policy(*env, cp.policy(), spec.horizon(), spec.eval_trajectories,
                          derive_seed(seed, seeds::kEval, iteration), spec.eval_per_step,
                          threads);
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      run.rows.push_back({iteration, cumulative, reward, wall});
      if (!run.crossing && reward >= threshold) {
        run.crossing = cumulative;
        if (spec.stop_at_threshold) break;
      }
    }
  }
  return run;
}

}  // namespace

ExperimentRecord run_experiment(const ExperimentSpec& spec, int threads) {
  spec.validate();
  ExperimentRecord record;
  record.spec = spec;
  record.threshold = spec.effective_threshold();
  record.runs.resize(spec.seeds.size());

  const int outer = std::max(1, threads);
  const int inner = std::max(1, outer / static_cast<int>(spec.seeds.size()));
  parallel_for(spec.seeds.size(), outer, [&](std::size_t i) {
    record.runs[i] = run_seed(spec, spec.seeds[i], record.threshold, inner);
  });

  std::vector<double> crossings;
  for (const auto& run : record.runs) {
    if (run.crossing) crossings.push_back(static_cast<double>(*run.crossing));
  }
  record.reach_count = static_cast<int>(crossings.size());
  record.median_crossing = lower_median(crossings);
  return record;
}

// ---------------------------------------------------------------------------
// Stability

Eigen::MatrixXd checkpoint_gain(const PolicyCheckpoint& checkpoint) {
  return -checkpoint.policy().raw_gain();
}

std::vector<StabilityPoint> frequency_of_stability(std::span<const SeedRun> runs,
                                                   std::span<const std::uint64_t> budgets,
                                                   const EnvSpec& env) {
  if (!env.is_lqr()) {
    throw UnsupportedMetricError("frequency of stability is defined for LQR only");
  }
  std::vector<StabilityPoint> curve;
  for (std::uint64_t budget : budgets) {
    StabilityPoint point;
    point.budget = budget;
    for (const auto& run : runs) {
      const PolicyCheckpoint* latest = nullptr;
      for (const auto& cp : run.checkpoints) {
        if (cp.env_steps <= budget) latest = &cp;
      }
      if (latest == nullptr) continue;
      ++point.total_seeds;
      if (stability_check(env.lqr, checkpoint_gain(*latest)).stable) ++point.stable_seeds;
    }
    point.fraction = point.total_seeds == 0
                         ? 0.0
                         : static_cast<double>(point.stable_seeds) / point.total_seeds;
    curve.push_back(point);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Sweeps

SweepGrid grid_from_json(const json& j) {
  const json& g = j.contains("grid") ? j.at("grid") : j;
  if (!g.is_object() || g.empty()) throw ConfigError("sweep grid must be a non-empty object");
  SweepGrid grid;
  for (const auto& [key, values] : g.items()) {
    if (!values.is_array() || values.empty()) {
      throw ConfigError("sweep grid entry " + key + " must be a non-empty array");
    }
    grid.emplace_back(key, std::vector<json>(values.begin(), values.end()));
  }
  return grid;
}

namespace {

void apply_override(json& spec, const std::string& key, const json& value) {
  if (spec.contains(key)) {
    spec[key] = value;
  } else if (spec.at("config").contains(key) || key == "h" || key == "n_b" ||
             key == "interleave_period") {
    spec["config"][key] = value;
  } else if (spec.at("env").contains(key)) {
    spec["env"][key] = value;
  } else {
    throw ConfigError("sweep key not found in spec: " + key);
  }
}

}  // namespace

std::vector<PercentileRow> percentile_summary(std::span<const ExperimentRecord> records,
                                              double low_pct, double high_pct) {
  std::vector<PercentileRow> rows;
  for (std::size_t idx = 0;; ++idx) {
    std::vector<double> rewards, steps;
    for (const auto& rec : records) {
      for (const auto& run : rec.runs) {
        if (idx < run.rows.size()) {
          rewards.push_back(run.rows[idx].eval_reward);
          steps.push_back(static_cast<double>(run.rows[idx].cumulative_env_steps));
        }
      }
    }
    if (rewards.empty()) break;
    PercentileRow row;
    row.eval_index = idx;
    row.count = static_cast<int>(rewards.size());
    row.median_steps = quantile(steps, 0.5);
    row.low = quantile(rewards, low_pct / 100.0);
    row.median = quantile(rewards, 0.5);
    row.high = quantile(rewards, high_pct / 100.0);
    rows.push_back(row);
  }
  return rows;
}

SweepResult sweep(const SweepGrid& grid, const ExperimentSpec& base, int threads,
                  double low_pct, double high_pct) {
  if (grid.empty()) throw ConfigError("sweep grid must be non-empty");
  SweepResult result;
  result.low_pct = low_pct;
  result.high_pct = high_pct;
  const json base_json = spec_to_json(base);

  std::vector<std::size_t> index(grid.size(), 0);
  while (true) {
    json combo = json::object();
    json spec_json = base_json;
    std::string suffix;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto& [key, values] = grid[g];
      combo[key] = values[index[g]];
      apply_override(spec_json, key, values[index[g]]);
      suffix += "_" + key + "-" + values[index[g]].dump();
    }
    ExperimentSpec spec = spec_from_json(spec_json);
    spec.name = base.name + suffix;
    result.combinations.push_back(combo);
    result.records.push_back(run_experiment(spec, threads));

    // Odometer increment, last key fastest.
    std::size_t g = grid.size();
    while (g > 0) {
      --g;
      if (++index[g] < grid[g].second.size()) break;
      index[g] = 0;
      if (g == 0) {
        result.percentiles = percentile_summary(result.records, low_pct, high_pct);
        return result;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Output

json summary_json(const ExperimentRecord& record) {
  const auto& spec = record.spec;
  json per_seed = json::array();
  for (const auto& run : record.runs) {
    json s = {{"seed", run.seed},
              {"crossing", run.crossing ? json(*run.crossing) : json("not reached")},
              {"iterations", run.iterations.size()},
              {"final_env_steps", run.checkpoints.back().env_steps}};
    if (!run.rows.empty()) s["final_eval_reward"] = run.rows.back().eval_reward;
    per_seed.push_back(s);
  }
  json metadata = {{"prng", kPrngName},
                   {"noise_table_size", spec.noise_table_size},
                   {"eval_every", spec.eval_every},
                   {"eval_trajectories", spec.eval_trajectories},
                   {"eval_per_step", spec.eval_per_step},
                   {"step_unit", "raw environment steps of training rollouts, "
                                 "behavior trajectories included, evaluation excluded"},
                   {"median_convention", "lower median over seeds that crossed"},
                   {"std_floor", kStdFloor},
                   {"sigma_floor", 1e-8}};
  if (spec.env.is_lqr()) {
    metadata["lqr_process_noise_std"] = spec.env.lqr.process_noise_std;
    metadata["lqr_init_state_std"] = spec.env.lqr.init_state_std;
    metadata["lqr_divergence_bound"] = kDivergenceBound;
  }
  if (is_tres(spec.algorithm)) {
    metadata["tres_value_estimate"] =
        "sample return minus mean return of all rolled-out samples";
  }
  return {{"name", spec.name},
          {"spec", spec_to_json(spec)},
          {"threshold", threshold_to_json(record.threshold)},
          {"per_seed", per_seed},
          {"median_crossing",
           record.median_crossing ? json(*record.median_crossing) : json("not reached")},
          {"reach_count", record.reach_count},
          {"seed_count", record.runs.size()},
          {"metadata", metadata}};
}

void write_record(const ExperimentRecord& record, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string stem = (std::filesystem::path(dir) / record.spec.name).string();
  for (const auto& run : record.runs) {
    const std::string base = stem + "_seed" + std::to_string(run.seed);
    std::ofstream csv(base + ".csv");
    if (!csv) throw FormatError("cannot write " + base + ".csv");
    csv.precision(std::numeric_limits<double>::max_digits10);
    csv << "iteration,cumulative_env_steps,eval_reward,wall_seconds\n";
    for (const auto& row : run.rows) {
      csv << row.iteration << ',' << row.cumulative_env_steps << ',' << row.eval_reward << ','
          << row.wall_seconds << '\n';
    }
    save_checkpoint(base + ".policy", run.checkpoints.back().policy());
  }
  std::ofstream summary(stem + "_summary.json");
  if (!summary) throw FormatError("cannot write " + stem + "_summary.json");
  summary << summary_json(record).dump(2) << '\n';
}

void write_sweep(const SweepResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  json combos = json::array();
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    write_record(result.records[i], dir);
    combos.push_back({{"overrides", result.combinations[i]},
                      {"name", result.records[i].spec.name},
                      {"median_crossing", result.records[i].median_crossing
                                              ? json(*result.records[i].median_crossing)
                                              : json("not reached")},
                      {"reach_count", result.records[i].reach_count}});
  }
  std::ofstream out((std::filesystem::path(dir) / "sweep_summary.json").string());
  if (!out) throw FormatError("cannot write sweep_summary.json");
  json bands = json::array();
  for (const auto& r : result.percentiles) {
    bands.push_back({{"eval_index", r.eval_index},
                     {"median_steps", r.median_steps},
                     {"low", r.low},
                     {"median", r.median},
                     {"high", r.high},
                     {"count", r.count}});
  }
  out << json{{"combinations", combos},
              {"band_percentiles", {result.low_pct, result.high_pct}},
              {"quantile_convention", "linear interpolation"},
              {"percentiles", bands}}
             .dump(2)
      << '\n';
}

}  // namespace opes
