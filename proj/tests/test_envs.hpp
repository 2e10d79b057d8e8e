#pragma once

#include "opes/env.hpp"

#include <memory>

namespace opes::testing {

// Constant per-step reward; optionally terminates after `terminate_after` steps.
class ConstantRewardEnv final : public Env {
 public:
  ConstantRewardEnv(double reward, int state_dim = 2, int action_dim = 1,
                    int terminate_after = -1, int horizon_cap = 1000)
      : reward_(reward), n_(state_dim), p_(action_dim),
        terminate_after_(terminate_after), cap_(horizon_cap) {}

  std::string name() const override { return "constant"; }
  int state_dim() const override { return n_; }
  int action_dim() const override { return p_; }
  int horizon_cap() const override { return cap_; }

  Eigen::VectorXd reset(std::uint64_t seed) override {
    steps_ = 0;
    return Eigen::VectorXd::Constant(n_, static_cast<double>(seed % 7) + 1.0);
  }
  StepResult step(const Eigen::VectorXd& s, const Eigen::VectorXd&) override {
    ++steps_;
    return {s * 0.5, reward_, terminate_after_ > 0 && steps_ >= terminate_after_};
  }
  std::unique_ptr<Env> clone() const override {
    return std::make_unique<ConstantRewardEnv>(*this);
  }

 private:
  double reward_;
  int n_, p_, terminate_after_, cap_;
  int steps_ = 0;
};

// Reward -|s + a - target|^2 with s held fixed: a one-step bandit in disguise.
class TargetEnv final : public Env {
 public:
  explicit TargetEnv(Eigen::VectorXd target, int horizon_cap = 5)
      : target_(std::move(target)), cap_(horizon_cap) {}

  std::string name() const override { return "target"; }
  int state_dim() const override { return static_cast<int>(target_.size()); }
  int action_dim() const override { return static_cast<int>(target_.size()); }
  int horizon_cap() const override { return cap_; }

  Eigen::VectorXd reset(std::uint64_t) override {
    return Eigen::VectorXd::Ones(target_.size());
  }
  StepResult step(const Eigen::VectorXd& s, const Eigen::VectorXd& a) override {
    return {s, -(a - target_).squaredNorm(), false};
  }
  std::unique_ptr<Env> clone() const override { return std::make_unique<TargetEnv>(*this); }

 private:
  Eigen::VectorXd target_;
  int cap_;
};

}  // namespace opes::testing
