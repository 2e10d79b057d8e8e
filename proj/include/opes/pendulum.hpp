#pragma once

#include "opes/env.hpp"

#include <memory>

namespace opes {

// Torque-limited pendulum; angle is measured from upright and wrapped into
// (-pi, pi]. Unit mass and length, g = 10, semi-implicit Euler step.
// reward = -(angle^2 + 0.1 velocity^2 + 0.001 torque^2) with the clamped torque.
class PendulumEnv final : public Env {
 public:
  PendulumEnv(double torque_limit, double dt, int horizon_cap = 200);

  std::string name() const override { return "pendulum"; }
  int state_dim() const override { return 2; }
  int action_dim() const override { return 1; }
  int horizon_cap() const override { return horizon_cap_; }

  Eigen::VectorXd reset(std::uint64_t seed) override;
  StepResult step(const Eigen::VectorXd& state,
                  const Eigen::VectorXd& action) override;
  std::unique_ptr<Env> clone() const override;

  double torque_limit() const noexcept { return torque_limit_; }
  double dt() const noexcept { return dt_; }

  static constexpr double kGravity = 10.0;

 private:
  double torque_limit_;
  double dt_;
  int horizon_cap_;
};

std::unique_ptr<Env> pendulum_env(double torque_limit, double dt);

}  // namespace opes
