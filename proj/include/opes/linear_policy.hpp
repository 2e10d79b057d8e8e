#pragma once

#include "opes/rollout.hpp"
#include "opes/running_stats.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <string>

namespace opes {

// Floor on the per-coordinate standard deviation used for normalization.
inline constexpr double kStdFloor = 1e-8;

// (s - mean) / max(sqrt(var), kStdFloor), coordinatewise.
Eigen::VectorXd normalize_state(const RunningStats& stats, const Eigen::VectorXd& s);

// Deterministic linear policy a = M s_hat. The normalization statistics are
// copied at construction, so later updates to the source RunningStats do not
// change the policy.
class LinearPolicy {
 public:
  LinearPolicy(Eigen::MatrixXd M, const RunningStats& stats, bool normalize = true);
  explicit LinearPolicy(Eigen::MatrixXd M);

  Eigen::VectorXd operator()(const Eigen::VectorXd& s) const;

  const Eigen::MatrixXd& matrix() const noexcept { return M_; }
  bool normalizes() const noexcept { return normalize_; }
  const RunningStats& stats() const noexcept { return stats_; }

  // Equivalent affine map on raw states: a = gain * s + offset.
  Eigen::MatrixXd raw_gain() const;
  Eigen::VectorXd raw_offset() const;

  Policy as_callable() const;

 private:
  Eigen::MatrixXd M_;
  bool normalize_;
  RunningStats stats_;
  Eigen::VectorXd inv_std_;
};

// (M + sign * nu * delta) applied to normalized states.
LinearPolicy perturbed_policy(const Eigen::MatrixXd& M, const Eigen::MatrixXd& delta,
                              double nu, int sign, const RunningStats& stats,
                              bool normalize = true);

// Plain-text checkpoint:
//   opes-policy v1
//   <p> <n> <count> <normalize 0|1>
//   M row-major (p lines), mean (1 line), diag var (1 line)
// Values are written with max_digits10 so a round trip is exact.
void write_checkpoint(std::ostream& out, const LinearPolicy& policy);
LinearPolicy read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const LinearPolicy& policy);
LinearPolicy load_checkpoint(const std::string& path);

}  // namespace opes
