#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>

namespace opes {

// Streaming per-coordinate mean and population variance (ddof = 0).
// Before any state is ingested the statistics are mean 0, variance 1.
class RunningStats {
 public:
  RunningStats() = default;
  explicit RunningStats(int dim);

  int dim() const noexcept { return static_cast<int>(mean_.size()); }
  std::uint64_t count() const noexcept { return count_; }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  Eigen::VectorXd diag_var() const;
  Eigen::VectorXd stddev() const;

  void push(const Eigen::VectorXd& state);

  // Batch statistics are accumulated on their own, then merged with the
  // pairwise update of Chan, Golub and LeVeque.
  void update(std::span<const Eigen::VectorXd> states);

  // Restore from a checkpoint.
  static RunningStats from_moments(std::uint64_t count, Eigen::VectorXd mean,
                                   const Eigen::VectorXd& diag_var);

 private:
  void merge(std::uint64_t n, const Eigen::VectorXd& mean,
             const Eigen::VectorXd& m2);

  std::uint64_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;  // sum of squared deviations
};

}  // namespace opes
