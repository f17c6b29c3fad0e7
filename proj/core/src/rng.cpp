#include "mapl/rng.hpp"

#include "mapl/numeric.hpp"

namespace mapl {

std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

CounterRng::CounterRng(std::uint64_t seed, Stream stream, std::uint64_t index) noexcept
    : key_(hash_combine(hash_combine(mix64(seed), static_cast<std::uint64_t>(stream)), index)) {}

std::uint64_t CounterRng::at(std::uint64_t counter) const noexcept {
  // Two rounds so that adjacent keys and counters decorrelate.
  return mix64(key_ ^ mix64(counter * 0xd1b54a32d192ed03ULL + key_));
}

double CounterRng::uniform() noexcept { return to_open_unit(next_u64()); }

double CounterRng::uniform(double lo, double hi) noexcept {
  // 53-bit grid including both endpoints.
  const double t = static_cast<double>(next_u64() >> 11) * 0x1.0p-53 * (1.0 + 0x1.0p-53);
  const double v = lo + (hi - lo) * t;
  return v > hi ? hi : v;
}

double CounterRng::normal() noexcept { return normal_quantile(uniform()); }

std::uint64_t CounterRng::below(std::uint64_t n) noexcept {
  // Rejection keeps the result exactly uniform.
  const std::uint64_t threshold = (0 - n) % n;
  while (true) {
    const std::uint64_t x = next_u64();
    if (x >= threshold) return x % n;
  }
}

}  // namespace mapl
