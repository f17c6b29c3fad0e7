#pragma once

#include <cstdint>
#include <string_view>

namespace mapl {

/// Purposes that own an independent random stream. The numeric values are part
/// of the reproducibility contract: changing them changes every simulated dataset.
enum class Stream : std::uint64_t {
  kFeatures = 1,
  kBetas = 2,
  kChoices = 3,
  kOracle = 4,
  kSplit = 5,
  kInit = 6,
  kDropout = 7,
  kTrainDraws = 8,
  kEvalDraws = 9,
  kTest = 100,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Order-sensitive combination of two 64-bit values.
constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept {
  return mix64(seed ^ mix64(value + 0x632be59bd9b4e019ULL));
}

/// FNV-1a over bytes; stable across platforms.
std::uint64_t hash_string(std::string_view s) noexcept;

/// Counter-based generator: output n is a pure function of (key, n), where the key
/// is derived from (seed, stream, index). Any stream can be replayed in isolation
/// and streams never overlap in practice.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) noexcept;

  /// Raw 64-bit output at an explicit counter position; does not advance.
  std::uint64_t at(std::uint64_t counter) const noexcept;

  std::uint64_t next_u64() noexcept { return at(counter_++); }

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform() noexcept;

  /// Uniform on [lo, hi].
  double uniform(double lo, double hi) noexcept;

  /// Standard normal via inverse-CDF of an open-interval uniform.
  double normal() noexcept;

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Maps a raw 64-bit word to the open interval (0, 1) on a grid of 2^52 midpoints.
/// (A 53-bit midpoint grid would round its top point up to exactly 1.)
constexpr double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

}  // namespace mapl
