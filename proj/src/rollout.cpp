#include "opes/rollout.hpp"

#include "opes/error.hpp"

#include <algorithm>
#include <string>

namespace opes {

Trajectory rollout(Env& env, const Policy& policy, int horizon, std::uint64_t seed,
                   double subtract_survival) {
  if (horizon < 1) throw ConfigError("rollout horizon must be >= 1");
  const int steps = std::min(horizon, env.horizon_cap());

  Trajectory traj;
  traj.transitions.reserve(static_cast<std::size_t>(steps));
  Eigen::VectorXd state = env.reset(seed);
  for (int t = 0; t < steps; ++t) {
    Eigen::VectorXd action = policy(state);
    if (action.size() != env.action_dim()) {
      throw ConfigError("policy produced an action of size " +
                        std::to_string(action.size()) + ", environment expects " +
                        std::to_string(env.action_dim()));
    }
    StepResult res = env.step(state, action);
    const double reward = res.reward - subtract_survival;
    traj.total_reward += reward;
    traj.transitions.push_back({state, std::move(action), reward, res.next_state});
    if (res.terminated) {
      traj.terminated_early = true;
      break;
    }
    state = std::move(res.next_state);
  }
  return traj;
}

}  // namespace opes
