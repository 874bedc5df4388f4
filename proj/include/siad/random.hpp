#pragma once

#include <cstdint>
#include <initializer_list>

namespace siad {

// Counter-based keyed random stream: every draw is a pure function of
// (key, counter), so independent streams can be generated in any order.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : key_(mix(seed ^ 0x5deece66dULL)) {}

  // Child stream keyed on this stream's key and a list of labels.
  RandomStream derive(std::initializer_list<std::uint64_t> labels) const;

  std::uint64_t key() const noexcept { return key_; }

  std::uint64_t bits_at(std::uint64_t counter) const noexcept { return mix(key_ + (counter + 1) * kGamma); }
  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform_at(std::uint64_t counter) const noexcept;
  // Standard normal via the inverse CDF of uniform_at(counter).
  double normal_at(std::uint64_t counter) const;

  double uniform() noexcept { return uniform_at(counter_++); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_at(counter_++); }
  std::uint64_t counter() const noexcept { return counter_; }

  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace siad
