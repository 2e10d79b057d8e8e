#include "opes/tres.hpp"

#include "opes/error.hpp"
#include "opes/linear_policy.hpp"
#include "opes/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace opes {

void TresConfig::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (K < 0) throw ConfigError("K must be >= 0");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (N < 1) throw ConfigError("N must be >= 1");
  if (b < 1 || b > N) throw ConfigError("b must satisfy 1 <= b <= N");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (off_policy) {
    if (!(h > 0.0)) throw ConfigError("h must be > 0");
    if (n_b < 1) throw ConfigError("n_b must be >= 1");
  }
}

SampleSet SampleSet::antithetic(const Eigen::VectorXd& theta,
                                const std::vector<Eigen::VectorXd>& eps, double sigma) {
  SampleSet set;
  set.theta = theta;
  for (const auto& e : eps) {
    if (e.size() != theta.size()) throw ConfigError("SampleSet: noise dimension mismatch");
    set.xs.push_back(theta + sigma * e);
    set.mirrored.push_back(2.0 * theta - set.xs.back());
  }
  set.returns_x.assign(eps.size(), std::nullopt);
  set.returns_mirror.assign(eps.size(), std::nullopt);
  return set;
}

Eigen::VectorXd antithetic_gradient(const SampleSet& set, double sigma) {
  const std::size_t n = set.xs.size();
  if (n == 0) throw ConfigError("antithetic_gradient: empty sample set");
  if (set.returns_x.size() != n || set.returns_mirror.size() != n) {
    throw ConfigError("antithetic_gradient: missing returns");
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(set.theta.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!set.returns_x[i] || !set.returns_mirror[i]) {
      throw ConfigError("antithetic_gradient: missing return for sample " + std::to_string(i));
    }
    grad += (*set.returns_x[i] - *set.returns_mirror[i]) * (set.xs[i] - set.theta);
  }
  return grad / (2.0 * static_cast<double>(n) * sigma * sigma);
}

double marginal_ratio(double x_i, double theta_i, double theta_new_i, double sigma) {
  const double old_gap = x_i - theta_i;
  const double new_gap = x_i - theta_new_i;
  return std::exp((old_gap * old_gap - new_gap * new_gap) / (2.0 * sigma * sigma));
}

void estimate_values(SampleSet& set) {
  set.value_estimates.clear();
  double sum = 0.0;
  for (std::size_t i = 0; i < set.xs.size(); ++i) {
    if (set.returns_x[i]) {
      set.value_estimates.push_back({set.xs[i], *set.returns_x[i]});
      sum += *set.returns_x[i];
    }
    if (set.returns_mirror[i]) {
      set.value_estimates.push_back({set.mirrored[i], *set.returns_mirror[i]});
      sum += *set.returns_mirror[i];
    }
  }
  if (set.value_estimates.empty()) return;
  const double mean = sum / static_cast<double>(set.value_estimates.size());
  for (auto& v : set.value_estimates) v.value -= mean;
}

SurrogateResult clipped_surrogate(const SampleSet& set, const Eigen::VectorXd& theta_new,
                                  double sigma, double lambda) {
  const auto d = set.theta.size();
  if (theta_new.size() != d) throw ConfigError("clipped_surrogate: theta dimension mismatch");
  SurrogateResult res;
  res.gradient = Eigen::VectorXd::Zero(d);
  if (set.value_estimates.empty()) return res;

  const double var = sigma * sigma;
  for (const auto& sample : set.value_estimates) {
    const double v = sample.value;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double r = marginal_ratio(sample.x[i], set.theta[i], theta_new[i], sigma);
      const double clipped = std::clamp(r, 1.0 - lambda, 1.0 + lambda);
      const double unclipped_term = r * v;
      const double clipped_term = clipped * v;
      res.value += std::min(unclipped_term, clipped_term);
      const bool inside = r >= 1.0 - lambda && r <= 1.0 + lambda;
      if (inside || unclipped_term <= clipped_term) {
        res.gradient[i] += v * r * (sample.x[i] - theta_new[i]) / var;
      }
    }
  }
  const double count = static_cast<double>(set.value_estimates.size());
  res.value /= count;
  res.gradient /= count;
  return res;
}

TresState TresState::initial(int action_dim, int state_dim) {
  TresState s;
  s.theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(action_dim) * state_dim);
  s.action_dim = action_dim;
  s.state_dim = state_dim;
  return s;
}

Eigen::MatrixXd TresState::policy_matrix() const {
  return unflatten_row_major(theta, action_dim, state_dim);
}

Eigen::VectorXd flatten_row_major(const Eigen::MatrixXd& M) {
  Eigen::VectorXd v(M.size());
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) v[r * M.cols() + c] = M(r, c);
  }
  return v;
}

Eigen::MatrixXd unflatten_row_major(const Eigen::VectorXd& v, int rows, int cols) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols) {
    throw ConfigError("unflatten_row_major: size mismatch");
  }
  Eigen::MatrixXd M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) M(r, c) = v[r * cols + c];
  }
  return M;
}

namespace {

std::uint64_t steps_in(const std::vector<Trajectory>& trajs) {
  std::uint64_t n = 0;
  for (const auto& t : trajs) n += t.size();
  return n;
}

}  // namespace

TresOutcome tres_iteration(TresState& state, const TresConfig& config,
                           const IterationContext& ctx) {
  config.validate();
  if (ctx.env == nullptr || ctx.noise == nullptr) {
    throw ConfigError("iteration context needs an environment and a noise table");
  }
  const int p = state.action_dim;
  const int n = state.state_dim;
  if (p != ctx.env->action_dim() || n != ctx.env->state_dim()) {
    throw ConfigError("TRES parameter shape does not match the environment");
  }
  const int d = p * n;

  std::vector<Eigen::VectorXd> eps;
  std::vector<Eigen::MatrixXd> directions;  // sigma * eps, as p x n matrices
  for (int i = 0; i < config.N; ++i) {
    eps.push_back(ctx.noise->slice(state.noise_cursor + static_cast<std::uint64_t>(i) * d, d));
    directions.push_back(unflatten_row_major(config.sigma * eps.back(), p, n));
  }
  SampleSet set = SampleSet::antithetic(state.theta, eps, config.sigma);

  const Eigen::MatrixXd M = state.policy_matrix();
  const RunningStats identity(n);
  const auto pair_seeds =
      seeds::for_iteration(ctx.run_seed, state.iteration, seeds::kPair, config.N);

  TresOutcome out;
  std::vector<int> chosen;
  PairedRollouts used;
  if (config.off_policy) {
    const auto behavior_seeds =
        seeds::for_iteration(ctx.run_seed, state.iteration, seeds::kBehavior, config.n_b);
    const LinearPolicy behavior(M);
    std::vector<Trajectory> behavior_trajs(static_cast<std::size_t>(config.n_b));
    parallel_for(behavior_trajs.size(), ctx.threads, [&](std::size_t i) {
      auto local = ctx.env->clone();
      behavior_trajs[i] = rollout(*local, behavior.as_callable(), config.horizon,
                                  behavior_seeds[i], config.subtract_survival);
    });
    const BehaviorBatch batch = build_behavior_batch(behavior_trajs, identity);
    out.ranked = rank_directions(directions, batch, 1.0, config.h);
    chosen.assign(out.ranked.order.begin(), out.ranked.order.begin() + config.b);
    used = rollout_pairs(directions, chosen, *ctx.env, M, 1.0, identity, false,
                         config.horizon, pair_seeds, config.subtract_survival, ctx.threads);
    out.trajectories_used = config.n_b + 2 * config.b;
    out.env_steps_used = steps_in(behavior_trajs) + steps_in(used.plus) + steps_in(used.minus);
  } else {
    OnPolicyRanking ranking = rank_directions_onpolicy(
        directions, *ctx.env, M, 1.0, identity, false, config.horizon,
        RolloutSeeds{pair_seeds}, config.subtract_survival, ctx.threads);
    out.ranked = ranking.ranked;
    chosen.assign(out.ranked.order.begin(), out.ranked.order.begin() + config.b);
    for (int k : chosen) {
      used.plus.push_back(ranking.rollouts.plus[k]);
      used.minus.push_back(ranking.rollouts.minus[k]);
    }
    out.trajectories_used = 2 * config.N;
    out.env_steps_used =
        steps_in(ranking.rollouts.plus) + steps_in(ranking.rollouts.minus);
  }

  for (std::size_t i = 0; i < chosen.size(); ++i) {
    set.returns_x[chosen[i]] = used.plus[i].total_reward;
    set.returns_mirror[chosen[i]] = used.minus[i].total_reward;
    out.update_returns.push_back(used.plus[i].total_reward);
    out.update_returns.push_back(used.minus[i].total_reward);
  }
  estimate_values(set);

  Eigen::VectorXd theta = state.theta;
  for (int epoch = 0; epoch < config.K; ++epoch) {
    theta += config.alpha * clipped_surrogate(set, theta, config.sigma, config.lambda).gradient;
  }
  out.new_theta = theta;

  state.theta = std::move(theta);
  state.noise_cursor += static_cast<std::uint64_t>(config.N) * d;
  ++state.iteration;
  return out;
}

}  // namespace opes
