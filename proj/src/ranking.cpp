#include "opes/ranking.hpp"

#include "opes/error.hpp"
#include "opes/linear_policy.hpp"
#include "opes/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace opes {

double kernel_weight(const Eigen::VectorXd& a, const Eigen::VectorXd& a_target, double h) {
  if (!(h > 0.0)) throw ConfigError("kernel bandwidth h must be > 0");
  if (a.size() != a_target.size()) throw ConfigError("kernel_weight: size mismatch");
  return std::exp(-(a - a_target).squaredNorm() / (h * h));
}

BehaviorBatch build_behavior_batch(std::span<const Trajectory> trajectories,
                                   const RunningStats& stats) {
  BehaviorBatch batch;
  double reward_sum = 0.0;
  for (std::size_t id = 0; id < trajectories.size(); ++id) {
    const auto& traj = trajectories[id];
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const auto& tr = traj.transitions[t];
      batch.transitions.push_back({normalize_state(stats, tr.state), tr.action, tr.reward,
                                   static_cast<int>(id), static_cast<int>(t)});
      reward_sum += tr.reward;
    }
  }
  if (batch.transitions.empty()) {
    throw ConfigError("build_behavior_batch: all behavior trajectories are empty");
  }
  const auto n = static_cast<Eigen::Index>(batch.transitions.size());
  batch.eta_hat = reward_sum / static_cast<double>(n);

  // Backward accumulation per trajectory; transitions of one trajectory are
  // contiguous and ordered by step_index.
  batch.q_values.resize(n);
  double running = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const auto& tr = batch.transitions[static_cast<std::size_t>(t)];
    const bool last_of_traj =
        t == n - 1 || batch.transitions[static_cast<std::size_t>(t + 1)].trajectory_id !=
                          tr.trajectory_id;
    if (last_of_traj) running = 0.0;
    running += tr.reward - batch.eta_hat;
    batch.q_values[t] = running;
  }
  return batch;
}

double fitness_score(const Eigen::MatrixXd& delta, const BehaviorBatch& batch, double nu,
                     double h) {
  if (!(h > 0.0)) throw ConfigError("kernel bandwidth h must be > 0");
  if (batch.transitions.empty()) throw ConfigError("fitness_score: empty behavior batch");
  const double h2 = h * h;
  double sum = 0.0;
  for (std::size_t t = 0; t < batch.transitions.size(); ++t) {
    const auto& s = batch.transitions[t].normalized_state;
    if (delta.cols() != s.size()) throw ConfigError("fitness_score: delta/state shape mismatch");
    const double gap2 = (nu * (delta * s)).squaredNorm();
    sum += std::exp(-gap2 / h2) * batch.q_values[static_cast<Eigen::Index>(t)];
  }
  return sum / static_cast<double>(batch.transitions.size());
}

RankedDirections rank_by_scores(std::vector<double> scores) {
  RankedDirections ranked;
  ranked.order.resize(scores.size());
  std::iota(ranked.order.begin(), ranked.order.end(), 0);
  std::stable_sort(ranked.order.begin(), ranked.order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  ranked.scores = std::move(scores);
  return ranked;
}

RankedDirections rank_directions(std::span<const Eigen::MatrixXd> directions,
                                 const BehaviorBatch& batch, double nu, double h) {
  if (directions.empty()) throw ConfigError("rank_directions: no directions");
  std::vector<double> scores;
  scores.reserve(directions.size());
  for (const auto& d : directions) scores.push_back(fitness_score(d, batch, nu, h));
  return rank_by_scores(std::move(scores));
}

PairedRollouts rollout_pairs(std::span<const Eigen::MatrixXd> directions,
                             std::span<const int> which, const Env& env,
                             const Eigen::MatrixXd& M, double nu,
                             const RunningStats& stats, bool normalize, int horizon,
                             std::span<const std::uint64_t> seeds,
                             double subtract_survival, int threads) {
  if (seeds.size() != directions.size()) {
    throw ConfigError("rollout_pairs: one seed per direction required");
  }
  const std::size_t count = which.size();
  PairedRollouts out;
  out.plus.resize(count);
  out.minus.resize(count);
  // Task 2i is the + member of pair i, 2i+1 the - member.
  parallel_for(2 * count, threads, [&](std::size_t task) {
    const std::size_t i = task / 2;
    const int sign = task % 2 == 0 ? 1 : -1;
    const int k = which[i];
    const LinearPolicy policy = perturbed_policy(M, directions[k], nu, sign, stats, normalize);
    auto local = env.clone();
    Trajectory traj = rollout(*local, policy.as_callable(), horizon, seeds[k], subtract_survival);
    (sign > 0 ? out.plus : out.minus)[i] = std::move(traj);
  });
  return out;
}

OnPolicyRanking rank_directions_onpolicy(std::span<const Eigen::MatrixXd> directions,
                                         const Env& env, const Eigen::MatrixXd& M,
                                         double nu, const RunningStats& stats,
                                         bool normalize, int horizon,
                                         const RolloutSeeds& seeds,
                                         double subtract_survival, int threads) {
  if (directions.empty()) throw ConfigError("rank_directions_onpolicy: no directions");
  std::vector<int> all(directions.size());
  std::iota(all.begin(), all.end(), 0);
  OnPolicyRanking result;
  result.rollouts = rollout_pairs(directions, all, env, M, nu, stats, normalize, horizon,
                                  seeds.per_direction, subtract_survival, threads);
  std::vector<double> scores(directions.size());
  for (std::size_t k = 0; k < directions.size(); ++k) {
    scores[k] = std::max(result.rollouts.plus[k].total_reward,
                         result.rollouts.minus[k].total_reward);
  }
  result.ranked = rank_by_scores(std::move(scores));
  return result;
}

}  // namespace opes
