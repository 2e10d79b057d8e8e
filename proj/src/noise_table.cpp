#include "opes/noise_table.hpp"

#include "opes/error.hpp"
#include "opes/rng.hpp"

namespace opes {

NoiseTable::NoiseTable(std::uint64_t master_seed, std::size_t length)
    : master_seed_(master_seed) {
  if (length == 0) throw ConfigError("noise table length must be positive");
  entries_.resize(length);
  CounterRng rng(master_seed);
  for (double& e : entries_) e = rng.normal();
}

Eigen::MatrixXd NoiseTable::sample_direction(std::uint64_t index, int rows,
                                             int cols) const {
  Eigen::MatrixXd delta(rows, cols);
  const std::size_t n = entries_.size();
  std::size_t pos = index % n;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      delta(r, c) = entries_[pos];
      if (++pos == n) pos = 0;
    }
  }
  return delta;
}

Eigen::VectorXd NoiseTable::slice(std::uint64_t index, int length) const {
  Eigen::VectorXd v(length);
  const std::size_t n = entries_.size();
  std::size_t pos = index % n;
  for (int i = 0; i < length; ++i) {
    v[i] = entries_[pos];
    if (++pos == n) pos = 0;
  }
  return v;
}

}  // namespace opes
