#pragma once

#include "opes/env.hpp"
#include "opes/rollout.hpp"
#include "opes/running_stats.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace opes {

// exp(-|a - a_target|^2 / h^2). Throws ConfigError when h <= 0.
double kernel_weight(const Eigen::VectorXd& a, const Eigen::VectorXd& a_target, double h);

struct BehaviorTransition {
  Eigen::VectorXd normalized_state;
  Eigen::VectorXd action;
  double reward = 0.0;
  int trajectory_id = 0;
  int step_index = 0;
};

// Data from the behavior policy with returns-to-go Q estimates measured
// against the average per-step reward eta_hat:
//   q[t] = sum_{k >= t, same trajectory} (r_k - eta_hat).
struct BehaviorBatch {
  std::vector<BehaviorTransition> transitions;
  Eigen::VectorXd q_values;
  double eta_hat = 0.0;

  std::size_t size() const noexcept { return transitions.size(); }
};

// States are normalized with the supplied snapshot. Throws ConfigError when
// every trajectory is empty.
BehaviorBatch build_behavior_batch(std::span<const Trajectory> trajectories,
                                   const RunningStats& stats);

// Kernel-smoothed off-policy fitness of a perturbation direction:
//   (1/N_d) sum_t exp(-|nu * delta * s_t|^2 / h^2) q[t]
// with s_t the stored normalized state, accumulated in transition order.
double fitness_score(const Eigen::MatrixXd& delta, const BehaviorBatch& batch,
                     double nu, double h);

struct RankedDirections {
  std::vector<int> order;  // direction indices, best first
  std::vector<double> scores;
};

// Stable descending sort of scores; equal scores keep ascending index order.
RankedDirections rank_by_scores(std::vector<double> scores);

RankedDirections rank_directions(std::span<const Eigen::MatrixXd> directions,
                                 const BehaviorBatch& batch, double nu, double h);

// Rollouts of the +/- policy pair for every direction, keyed by direction.
struct PairedRollouts {
  std::vector<Trajectory> plus;
  std::vector<Trajectory> minus;
};

struct OnPolicyRanking {
  RankedDirections ranked;
  PairedRollouts rollouts;
};

// Environment seeds for the +/- pair of direction k. Both members of a pair
// share the same seed (common random numbers).
struct RolloutSeeds {
  std::vector<std::uint64_t> per_direction;
};

// 2N rollouts; direction k scores max(return(+), return(-)).
// `env` is cloned per worker.
OnPolicyRanking rank_directions_onpolicy(std::span<const Eigen::MatrixXd> directions,
                                         const Env& env, const Eigen::MatrixXd& M,
                                         double nu, const RunningStats& stats,
                                         bool normalize, int horizon,
                                         const RolloutSeeds& seeds,
                                         double subtract_survival = 0.0,
                                         int threads = 1);

// The same pair rollouts for a chosen subset of directions, in the given order.
PairedRollouts rollout_pairs(std::span<const Eigen::MatrixXd> directions,
                             std::span<const int> which, const Env& env,
                             const Eigen::MatrixXd& M, double nu,
                             const RunningStats& stats, bool normalize, int horizon,
                             std::span<const std::uint64_t> seeds,
                             double subtract_survival, int threads);

}  // namespace opes
