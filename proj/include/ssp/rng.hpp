#pragma once

#include <cmath>
#include <cstdint>

namespace ssp {

// Counter-based deterministic random stream. Values depend only on
// (key, counter), so streams can be split across threads and replayed
// bit-identically regardless of scheduling.
namespace rng_detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

}  // namespace rng_detail

// Derives a child key from a parent key and an index; repeated application
// gives the splittable seed tree used for per-replication seeds.
inline std::uint64_t derive_seed(std::uint64_t key, std::uint64_t index) {
  return rng_detail::mix64(key + rng_detail::kGolden * (index + 1));
}

inline std::uint64_t derive_seed(std::uint64_t key, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(key, a), b);
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() {
    return rng_detail::mix64(key_ + rng_detail::kGolden * (++counter_));
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1]; safe as a log() argument.
  double next_double_open() { return 1.0 - next_double(); }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Box-Muller; consumes two uniforms per variate, no cached state.
  double next_normal() {
    const double u1 = next_double_open();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Sign variable, +1 or -1 with equal probability.
  double next_sign() { return (next_u64() & 1u) ? 1.0 : -1.0; }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace ssp
