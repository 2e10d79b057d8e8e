#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <string>

namespace opes {

struct StepResult {
  Eigen::VectorXd next_state;
  double reward = 0.0;
  bool terminated = false;
};

// Episodic environment. reset(seed) draws the initial state and re-keys the
// internal noise stream, so an episode is a pure function of the seed and
// the actions taken. Instances are single-owner; use clone() per worker.
class Env {
 public:
  virtual ~Env() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual int horizon_cap() const = 0;

  virtual Eigen::VectorXd reset(std::uint64_t seed) = 0;
  virtual StepResult step(const Eigen::VectorXd& state,
                          const Eigen::VectorXd& action) = 0;

  virtual std::unique_ptr<Env> clone() const = 0;
};

}  // namespace opes
