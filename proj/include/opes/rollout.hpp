#pragma once

#include "opes/env.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

namespace opes {

using Policy = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;  // after survival subtraction
  Eigen::VectorXd next_state;
};

struct Trajectory {
  std::vector<Transition> transitions;
  bool terminated_early = false;
  double total_reward = 0.0;

  std::size_t size() const noexcept { return transitions.size(); }
  bool empty() const noexcept { return transitions.empty(); }
};

// Runs one episode of at most min(horizon, env.horizon_cap()) steps.
// subtract_survival is removed from every per-step reward (training only).
// Throws ConfigError if the policy output does not match env.action_dim().
Trajectory rollout(Env& env, const Policy& policy, int horizon,
                   std::uint64_t seed, double subtract_survival = 0.0);

}  // namespace opes
