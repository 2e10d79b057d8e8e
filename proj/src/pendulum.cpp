#include "opes/pendulum.hpp"

#include "opes/error.hpp"
#include "opes/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace opes {
namespace {

double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  a = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  return a <= -kPi ? a + 2.0 * kPi : a;
}

}  // namespace

PendulumEnv::PendulumEnv(double torque_limit, double dt, int horizon_cap)
    : torque_limit_(torque_limit), dt_(dt), horizon_cap_(horizon_cap) {
  if (!(torque_limit > 0.0)) throw ConfigError("pendulum: torque_limit must be > 0");
  if (!(dt > 0.0 && dt <= 0.1)) throw ConfigError("pendulum: dt must be in (0, 0.1]");
  if (horizon_cap < 1) throw ConfigError("pendulum: horizon_cap must be >= 1");
}

Eigen::VectorXd PendulumEnv::reset(std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, 0x9E1u));
  Eigen::VectorXd s(2);
  s[0] = wrap_angle(std::numbers::pi * (2.0 * rng.uniform() - 1.0));
  s[1] = 2.0 * rng.uniform() - 1.0;
  return s;
}

StepResult PendulumEnv::step(const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
  const double angle = s[0];
  const double velocity = s[1];
  const double torque = std::clamp(a[0], -torque_limit_, torque_limit_);

  StepResult res;
  res.reward = -(angle * angle + 0.1 * velocity * velocity + 0.001 * torque * torque);
  const double next_velocity = velocity + dt_ * (kGravity * std::sin(angle) + torque);
  res.next_state.resize(2);
  res.next_state[0] = wrap_angle(angle + dt_ * next_velocity);
  res.next_state[1] = next_velocity;
  return res;
}

std::unique_ptr<Env> PendulumEnv::clone() const {
  return std::make_unique<PendulumEnv>(*this);
}

std::unique_ptr<Env> pendulum_env(double torque_limit, double dt) {
  return std::make_unique<PendulumEnv>(torque_limit, dt);
}

}  // namespace opes
