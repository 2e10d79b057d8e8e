#pragma once

#include "opes/ars.hpp"
#include "opes/env.hpp"
#include "opes/noise_table.hpp"
#include "opes/ranking.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

namespace opes {

struct TresConfig {
  double sigma = 0.03;
  double alpha = 0.02;
  int K = 5;
  double lambda = 0.2;
  int N = 8;
  int b = 4;
  double h = 0.25;
  int n_b = 1;
  int horizon = 100;
  bool off_policy = true;
  double subtract_survival = 0.0;

  void validate() const;
};

// A sampled point with its value estimate V.
struct ValueSample {
  Eigen::VectorXd x;
  double value = 0.0;
};

// Antithetic samples around theta: xs[i] ~ N(theta, sigma^2 I) and
// mirrored[i] = 2 theta - xs[i]. Returns are present only for rolled-out
// members.
struct SampleSet {
  Eigen::VectorXd theta;
  std::vector<Eigen::VectorXd> xs;
  std::vector<Eigen::VectorXd> mirrored;
  std::vector<std::optional<double>> returns_x;
  std::vector<std::optional<double>> returns_mirror;
  std::vector<ValueSample> value_estimates;

  // xs[i] = theta + sigma * eps[i]; mirrored[i] = 2 theta - xs[i].
  static SampleSet antithetic(const Eigen::VectorXd& theta,
                              const std::vector<Eigen::VectorXd>& eps, double sigma);
};

// (1 / (2 N sigma^2)) sum_i (eta(x_i) - eta(mirror_i)) (x_i - theta).
// Throws ConfigError if any return is missing.
Eigen::VectorXd antithetic_gradient(const SampleSet& set, double sigma);

// Per-dimension Gaussian density ratio p_new(x_i) / p_old(x_i).
double marginal_ratio(double x_i, double theta_i, double theta_new_i, double sigma);

// Fills set.value_estimates from every sample with a return. Each value is
// the sample's own return minus the mean return of all rolled-out samples.
void estimate_values(SampleSet& set);

struct SurrogateResult {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

// Clipped surrogate mean_x sum_i min(r_i V, clip(r_i, 1 - lambda, 1 + lambda) V)
// over set.value_estimates, with its (sub)gradient in theta_new. A dimension
// contributes no gradient when the clipped branch is selected and r_i lies
// outside [1 - lambda, 1 + lambda].
SurrogateResult clipped_surrogate(const SampleSet& set, const Eigen::VectorXd& theta_new,
                                  double sigma, double lambda);

struct TresState {
  Eigen::VectorXd theta;
  std::uint64_t noise_cursor = 0;
  std::uint64_t iteration = 0;
  int action_dim = 0;
  int state_dim = 0;

  static TresState initial(int action_dim, int state_dim);
  Eigen::MatrixXd policy_matrix() const;  // theta reshaped row-major to p x n
};

struct TresOutcome {
  Eigen::VectorXd new_theta;
  std::uint64_t env_steps_used = 0;
  int trajectories_used = 0;
  RankedDirections ranked;
  std::vector<double> update_returns;
};

// OP-TRES when config.off_policy, otherwise TRES with on-policy ranking of
// all 2N antithetic samples. Both keep the top-b pairs for K epochs of
// clipped-surrogate ascent. Policies act on raw states. Advances `state`.
TresOutcome tres_iteration(TresState& state, const TresConfig& config,
                           const IterationContext& ctx);

Eigen::VectorXd flatten_row_major(const Eigen::MatrixXd& M);
Eigen::MatrixXd unflatten_row_major(const Eigen::VectorXd& v, int rows, int cols);

}  // namespace opes
