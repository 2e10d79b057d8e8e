#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace opes {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Output i of a stream with
// key k is mix64(k + (i + 1) * kGolden), so any position can be computed
// directly from (key, counter). All arithmetic is on uint64_t and therefore
// bit-exact on every platform.
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t counter_u64(std::uint64_t key,
                                    std::uint64_t counter) noexcept {
  return mix64(key + (counter + 1) * kGolden);
}

// Hash a list of words into one seed. Used to derive per-rollout and
// per-table seeds from an experiment seed.
template <typename... Words>
constexpr std::uint64_t derive_seed(std::uint64_t base, Words... words) noexcept {
  std::uint64_t h = mix64(base ^ 0x6A09E667F3BCC909ULL);
  ((h = mix64(h + kGolden + static_cast<std::uint64_t>(words))), ...);
  return h;
}

// Counter-mode SplitMix64 stream with Box-Muller normals.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key = 0) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept { return counter_u64(key_, counter_++); }

  // Uniform in (0, 1): top 53 bits, offset by half an ulp so log() is finite.
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Box-Muller; one pair of uniforms per normal (the sine branch is dropped
  // so that each normal depends on a fixed counter pair).
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline constexpr const char* kPrngName = "splitmix64-counter/box-muller";

}  // namespace opes
