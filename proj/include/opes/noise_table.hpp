#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace opes {

inline constexpr std::size_t kDefaultNoiseTableSize = 10'000'000;

// Shared table of standard-normal entries. Perturbations are addressed by a
// start index instead of being copied around; indices wrap modulo size().
class NoiseTable {
 public:
  NoiseTable(std::uint64_t master_seed, std::size_t length = kDefaultNoiseTableSize);

  std::size_t size() const noexcept { return entries_.size(); }
  std::uint64_t master_seed() const noexcept { return master_seed_; }
  double operator[](std::size_t i) const noexcept { return entries_[i % entries_.size()]; }
  std::span<const double> entries() const noexcept { return entries_; }

  // rows x cols matrix filled row-major from entries [index, index + rows*cols).
  Eigen::MatrixXd sample_direction(std::uint64_t index, int rows, int cols) const;

  // Flat vector of `length` consecutive entries starting at index.
  Eigen::VectorXd slice(std::uint64_t index, int length) const;

 private:
  std::uint64_t master_seed_;
  std::vector<double> entries_;
};

}  // namespace opes
