#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace peps {

/// A seeded random stream. Copies are independent and replay identically.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  double normal() { return normal_(engine_); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Index drawn from a probability vector. Mass is not required to sum to
  /// exactly 1; the last positive entry absorbs rounding.
  std::size_t categorical(std::span<const double> probs);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a, stable across platforms (unlike std::hash).
std::uint64_t stable_hash(std::string_view text);

/// Seed for an independent substream identified by (master, tag, index).
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t index);

}  // namespace peps
