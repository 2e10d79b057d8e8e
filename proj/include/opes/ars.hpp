#pragma once

#include "opes/env.hpp"
#include "opes/noise_table.hpp"
#include "opes/ranking.hpp"
#include "opes/running_stats.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace opes {

enum class ArsVariant { kBrs, kV1, kV2, kV1t, kV2t, kOffPolicy };

std::string to_string(ArsVariant v);
ArsVariant parse_ars_variant(const std::string& name);

// Whether the variant ranks directions and keeps only the top b.
bool uses_top_b(ArsVariant v);
bool scales_by_sigma(ArsVariant v);
bool normalizes_states(ArsVariant v);

struct ArsConfig {
  double alpha = 0.02;
  int N = 8;
  int b = 4;
  double nu = 0.03;
  int horizon = 100;
  ArsVariant variant = ArsVariant::kV2t;
  double h = 0.25;
  int n_b = 1;
  int interleave_period = 0;
  double subtract_survival = 0.0;

  // Throws ConfigError.
  void validate() const;
};

// Mutable state of one training run.
struct ArsState {
  Eigen::MatrixXd M;
  RunningStats stats;
  std::uint64_t noise_cursor = 0;
  std::uint64_t iteration = 0;

  static ArsState initial(int action_dim, int state_dim);
};

struct IterationOutcome {
  Eigen::MatrixXd new_M;
  std::uint64_t env_steps_used = 0;
  int trajectories_used = 0;
  RankedDirections ranked;
  std::vector<double> update_returns;  // r+(1), r-(1), r+(2), ...
  double sigma_R = 1.0;
  bool on_policy_ranking = false;
};

// Population standard deviation of the update returns, or 1 when it is
// below 1e-8 or scaling is off.
double returns_scale(std::span<const double> returns, bool scale_by_sigma);

// M + alpha / (b sigma_R) * sum_k (r+_k - r-_k) delta_k, summed in k order.
Eigen::MatrixXd ars_update(const Eigen::MatrixXd& M,
                           std::span<const Eigen::MatrixXd> top_directions,
                           std::span<const double> returns_plus,
                           std::span<const double> returns_minus, double alpha,
                           bool scale_by_sigma);

// Everything an iteration needs besides the algorithm state.
struct IterationContext {
  const Env* env = nullptr;
  const NoiseTable* noise = nullptr;
  std::uint64_t run_seed = 0;
  int threads = 1;
};

// One iteration of the off-policy variant: behavior rollouts, kernel ranking,
// 2b update rollouts. Every interleave_period-th iteration (when enabled)
// falls back to on-policy ranking and reuses its rollouts. Advances `state`.
IterationOutcome op_ars_iteration(ArsState& state, const ArsConfig& config,
                                  const IterationContext& ctx);

// BRS / V1 / V2 / V1t / V2t: 2N rollouts per iteration. Advances `state`.
IterationOutcome classic_ars_iteration(ArsState& state, const ArsConfig& config,
                                       const IterationContext& ctx);

// Dispatches on config.variant.
IterationOutcome ars_iteration(ArsState& state, const ArsConfig& config,
                               const IterationContext& ctx);

// Deterministic seed helpers shared with the tres module.
namespace seeds {
inline constexpr std::uint64_t kBehavior = 1;
inline constexpr std::uint64_t kPair = 2;
inline constexpr std::uint64_t kEval = 3;
inline constexpr std::uint64_t kNoise = 4;

std::vector<std::uint64_t> for_iteration(std::uint64_t run_seed, std::uint64_t iteration,
                                         std::uint64_t stream, int count);
}  // namespace seeds

}  // namespace opes
