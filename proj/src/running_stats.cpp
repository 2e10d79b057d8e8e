#include "opes/running_stats.hpp"

#include "opes/error.hpp"

namespace opes {

RunningStats::RunningStats(int dim)
    : mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::VectorXd::Zero(dim)) {}

Eigen::VectorXd RunningStats::diag_var() const {
  if (count_ == 0) return Eigen::VectorXd::Ones(mean_.size());
  return m2_ / static_cast<double>(count_);
}

Eigen::VectorXd RunningStats::stddev() const { return diag_var().cwiseSqrt(); }

void RunningStats::push(const Eigen::VectorXd& state) {
  update(std::span<const Eigen::VectorXd>(&state, 1));
}

void RunningStats::update(std::span<const Eigen::VectorXd> states) {
  if (states.empty()) return;
  const auto dim = mean_.size();
  Eigen::VectorXd batch_mean = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd batch_m2 = Eigen::VectorXd::Zero(dim);
  std::uint64_t n = 0;
  for (const auto& s : states) {
    if (s.size() != dim) throw ConfigError("RunningStats: state dimension mismatch");
    ++n;
    const Eigen::VectorXd delta = s - batch_mean;
    batch_mean += delta / static_cast<double>(n);
    batch_m2 += delta.cwiseProduct(s - batch_mean);
  }
  merge(n, batch_mean, batch_m2);
}

void RunningStats::merge(std::uint64_t n, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& m2) {
  if (count_ == 0) {
    count_ = n;
    mean_ = mean;
    m2_ = m2;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(n);
  const double total = na + nb;
  const Eigen::VectorXd delta = mean - mean_;
  mean_ += delta * (nb / total);
  m2_ += m2 + delta.cwiseAbs2() * (na * nb / total);
  count_ += n;
}

RunningStats RunningStats::from_moments(std::uint64_t count, Eigen::VectorXd mean,
                                        const Eigen::VectorXd& diag_var) {
  if (mean.size() != diag_var.size()) {
    throw ConfigError("RunningStats: mean and variance sizes differ");
  }
  RunningStats stats(static_cast<int>(mean.size()));
  stats.count_ = count;
  stats.mean_ = std::move(mean);
  stats.m2_ = count == 0 ? Eigen::VectorXd::Zero(diag_var.size())
                         : Eigen::VectorXd(diag_var * static_cast<double>(count));
  return stats;
}

}  // namespace opes
