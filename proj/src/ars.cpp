#include "opes/ars.hpp"

#include "opes/error.hpp"
#include "opes/linear_policy.hpp"
#include "opes/parallel.hpp"
#include "opes/rng.hpp"

#include <cmath>
#include <numeric>

namespace opes {

std::string to_string(ArsVariant v) {
  switch (v) {
    case ArsVariant::kBrs: return "BRS";
    case ArsVariant::kV1: return "V1";
    case ArsVariant::kV2: return "V2";
    case ArsVariant::kV1t: return "V1t";
    case ArsVariant::kV2t: return "V2t";
    case ArsVariant::kOffPolicy: return "OP";
  }
  return "?";
}

ArsVariant parse_ars_variant(const std::string& name) {
  if (name == "BRS") return ArsVariant::kBrs;
  if (name == "V1") return ArsVariant::kV1;
  if (name == "V2") return ArsVariant::kV2;
  if (name == "V1t") return ArsVariant::kV1t;
  if (name == "V2t") return ArsVariant::kV2t;
  if (name == "OP") return ArsVariant::kOffPolicy;
  throw ConfigError("unknown ARS variant: " + name);
}

bool uses_top_b(ArsVariant v) {
  return v == ArsVariant::kV1t || v == ArsVariant::kV2t || v == ArsVariant::kOffPolicy;
}

bool scales_by_sigma(ArsVariant v) { return v != ArsVariant::kBrs; }

bool normalizes_states(ArsVariant v) {
  return v == ArsVariant::kV2 || v == ArsVariant::kV2t || v == ArsVariant::kOffPolicy;
}

void ArsConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (N < 1) throw ConfigError("N must be >= 1");
  if (b < 1 || b > N) throw ConfigError("b must satisfy 1 <= b <= N");
  if (!(nu > 0.0)) throw ConfigError("nu must be > 0");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (variant == ArsVariant::kOffPolicy) {
    if (!(h > 0.0)) throw ConfigError("h must be > 0");
    if (n_b < 1) throw ConfigError("n_b must be >= 1");
  }
  if (interleave_period < 0) throw ConfigError("interleave_period must be >= 0");
}

ArsState ArsState::initial(int action_dim, int state_dim) {
  return {Eigen::MatrixXd::Zero(action_dim, state_dim), RunningStats(state_dim), 0, 0};
}

double returns_scale(std::span<const double> returns, bool scale_by_sigma) {
  if (!scale_by_sigma || returns.empty()) return 1.0;
  const double n = static_cast<double>(returns.size());
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= n;
  double ss = 0.0;
  for (double r : returns) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / n);
  return sd < 1e-8 ? 1.0 : sd;
}

Eigen::MatrixXd ars_update(const Eigen::MatrixXd& M,
                           std::span<const Eigen::MatrixXd> top_directions,
                           std::span<const double> returns_plus,
                           std::span<const double> returns_minus, double alpha,
                           bool scale_by_sigma) {
  const std::size_t b = top_directions.size();
  if (b == 0 || returns_plus.size() != b || returns_minus.size() != b) {
    throw ConfigError("ars_update: need b >= 1 directions and b returns of each sign");
  }
  std::vector<double> all;
  all.reserve(2 * b);
  for (std::size_t k = 0; k < b; ++k) {
    all.push_back(returns_plus[k]);
    all.push_back(returns_minus[k]);
  }
  const double sigma = returns_scale(all, scale_by_sigma);

  Eigen::MatrixXd step = Eigen::MatrixXd::Zero(M.rows(), M.cols());
  for (std::size_t k = 0; k < b; ++k) {
    if (top_directions[k].rows() != M.rows() || top_directions[k].cols() != M.cols()) {
      throw ConfigError("ars_update: direction shape does not match M");
    }
    step += (returns_plus[k] - returns_minus[k]) * top_directions[k];
  }
  return M + (alpha / (static_cast<double>(b) * sigma)) * step;
}

namespace seeds {

std::vector<std::uint64_t> for_iteration(std::uint64_t run_seed, std::uint64_t iteration,
                                         std::uint64_t stream, int count) {
  std::vector<std::uint64_t> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[i] = derive_seed(run_seed, stream, iteration, i);
  return out;
}

}  // namespace seeds

namespace {

std::vector<Eigen::MatrixXd> sample_directions(const NoiseTable& noise, std::uint64_t cursor,
                                               int count, int rows, int cols) {
  std::vector<Eigen::MatrixXd> dirs;
  dirs.reserve(static_cast<std::size_t>(count));
  const std::uint64_t stride = static_cast<std::uint64_t>(rows) * cols;
  for (int k = 0; k < count; ++k) {
    dirs.push_back(noise.sample_direction(cursor + k * stride, rows, cols));
  }
  return dirs;
}

std::uint64_t steps_in(std::span<const Trajectory> trajs) {
  std::uint64_t n = 0;
  for (const auto& t : trajs) n += t.size();
  return n;
}

void collect_states(std::span<const Trajectory> trajs, std::vector<Eigen::VectorXd>& out) {
  for (const auto& t : trajs) {
    for (const auto& tr : t.transitions) out.push_back(tr.state);
  }
}

// Applies the update for the chosen pairs (already rolled out, in rank order)
// and fills the bookkeeping fields of the outcome.
void finish_update(ArsState& state, const ArsConfig& config,
                   std::span<const Eigen::MatrixXd> dirs, std::span<const int> chosen,
                   const PairedRollouts& pairs, bool scale, IterationOutcome& out) {
  std::vector<Eigen::MatrixXd> top;
  std::vector<double> plus, minus;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    top.push_back(dirs[chosen[i]]);
    plus.push_back(pairs.plus[i].total_reward);
    minus.push_back(pairs.minus[i].total_reward);
    out.update_returns.push_back(plus.back());
    out.update_returns.push_back(minus.back());
  }
  out.sigma_R = returns_scale(out.update_returns, scale);
  out.new_M = ars_update(state.M, top, plus, minus, config.alpha, scale);
}

void advance(ArsState& state, const IterationOutcome& out, int directions) {
  state.M = out.new_M;
  state.noise_cursor += static_cast<std::uint64_t>(directions) * state.M.rows() * state.M.cols();
  ++state.iteration;
}

void check_context(const IterationContext& ctx, const ArsState& state) {
  if (ctx.env == nullptr || ctx.noise == nullptr) {
    throw ConfigError("iteration context needs an environment and a noise table");
  }
  if (state.M.rows() != ctx.env->action_dim() || state.M.cols() != ctx.env->state_dim()) {
    throw ConfigError("policy matrix shape does not match the environment");
  }
}

}  // namespace

IterationOutcome classic_ars_iteration(ArsState& state, const ArsConfig& config,
                                       const IterationContext& ctx) {
  config.validate();
  check_context(ctx, state);
  if (config.variant == ArsVariant::kOffPolicy) {
    throw ConfigError("classic_ars_iteration called with the off-policy variant");
  }
  const int p = static_cast<int>(state.M.rows());
  const int n = static_cast<int>(state.M.cols());
  const auto dirs = sample_directions(*ctx.noise, state.noise_cursor, config.N, p, n);
  const bool normalize = normalizes_states(config.variant);
  const RunningStats snapshot = state.stats;

  RolloutSeeds pair_seeds{seeds::for_iteration(ctx.run_seed, state.iteration, seeds::kPair,
                                               config.N)};
  OnPolicyRanking ranking = rank_directions_onpolicy(
      dirs, *ctx.env, state.M, config.nu, snapshot, normalize, config.horizon, pair_seeds,
      config.subtract_survival, ctx.threads);

  IterationOutcome out;
  out.ranked = ranking.ranked;
  out.on_policy_ranking = true;
  out.trajectories_used = 2 * config.N;
  out.env_steps_used = steps_in(ranking.rollouts.plus) + steps_in(ranking.rollouts.minus);

  std::vector<int> chosen;
  PairedRollouts used;
  if (uses_top_b(config.variant)) {
    chosen.assign(out.ranked.order.begin(), out.ranked.order.begin() + config.b);
  } else {
    chosen.resize(static_cast<std::size_t>(config.N));
    std::iota(chosen.begin(), chosen.end(), 0);
  }
  for (int k : chosen) {
    used.plus.push_back(ranking.rollouts.plus[k]);
    used.minus.push_back(ranking.rollouts.minus[k]);
  }
  finish_update(state, config, dirs, chosen, used, scales_by_sigma(config.variant), out);

  if (normalize) {
    std::vector<Eigen::VectorXd> states;
    collect_states(ranking.rollouts.plus, states);
    collect_states(ranking.rollouts.minus, states);
    state.stats.update(states);
  }
  advance(state, out, config.N);
  return out;
}

IterationOutcome op_ars_iteration(ArsState& state, const ArsConfig& config,
                                  const IterationContext& ctx) {
  config.validate();
  check_context(ctx, state);
  if (config.variant != ArsVariant::kOffPolicy) {
    throw ConfigError("op_ars_iteration requires the off-policy variant");
  }
  const int p = static_cast<int>(state.M.rows());
  const int n = static_cast<int>(state.M.cols());
  const auto dirs = sample_directions(*ctx.noise, state.noise_cursor, config.N, p, n);
  const RunningStats snapshot = state.stats;
  const auto pair_seeds =
      seeds::for_iteration(ctx.run_seed, state.iteration, seeds::kPair, config.N);

  IterationOutcome out;
  std::vector<int> chosen;
  PairedRollouts used;

  const bool interleave = config.interleave_period > 0 &&
                          state.iteration % static_cast<std::uint64_t>(config.interleave_period) == 0;
  if (interleave) {
    OnPolicyRanking ranking = rank_directions_onpolicy(
        dirs, *ctx.env, state.M, config.nu, snapshot, true, config.horizon,
        RolloutSeeds{pair_seeds}, config.subtract_survival, ctx.threads);
    out.ranked = ranking.ranked;
    out.on_policy_ranking = true;
    out.trajectories_used = 2 * config.N;
    out.env_steps_used = steps_in(ranking.rollouts.plus) + steps_in(ranking.rollouts.minus);
    chosen.assign(out.ranked.order.begin(), out.ranked.order.begin() + config.b);
    for (int k : chosen) {
      used.plus.push_back(ranking.rollouts.plus[k]);
      used.minus.push_back(ranking.rollouts.minus[k]);
    }
  } else {
    // Behavior data from the current policy.
    const auto behavior_seeds =
        seeds::for_iteration(ctx.run_seed, state.iteration, seeds::kBehavior, config.n_b);
    const LinearPolicy behavior(state.M, snapshot, true);
    std::vector<Trajectory> behavior_trajs(static_cast<std::size_t>(config.n_b));
    parallel_for(behavior_trajs.size(), ctx.threads, [&](std::size_t i) {
      auto local = ctx.env->clone();
      behavior_trajs[i] = rollout(*local, behavior.as_callable(), config.horizon,
                                  behavior_seeds[i], config.subtract_survival);
    });
    const BehaviorBatch batch = build_behavior_batch(behavior_trajs, snapshot);
    out.ranked = rank_directions(dirs, batch, config.nu, config.h);
    chosen.assign(out.ranked.order.begin(), out.ranked.order.begin() + config.b);
    used = rollout_pairs(dirs, chosen, *ctx.env, state.M, config.nu, snapshot, true,
                         config.horizon, pair_seeds, config.subtract_survival, ctx.threads);
    out.trajectories_used = config.n_b + 2 * config.b;
    out.env_steps_used =
        steps_in(behavior_trajs) + steps_in(used.plus) + steps_in(used.minus);
  }

  finish_update(state, config, dirs, chosen, used, true, out);

  std::vector<Eigen::VectorXd> states;
  collect_states(used.plus, states);
  collect_states(used.minus, states);
  state.stats.update(states);

  advance(state, out, config.N);
  return out;
}

IterationOutcome ars_iteration(ArsState& state, const ArsConfig& config,
                               const IterationContext& ctx) {
  return config.variant == ArsVariant::kOffPolicy ? op_ars_iteration(state, config, ctx)
                                                  : classic_ars_iteration(state, config, ctx);
}

}  // namespace opes
