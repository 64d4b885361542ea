#pragma once

#include <cstdint>

namespace watersearch {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 output finalizer. Also used as the avalanche hash for token ids.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Output of a SplitMix64 generator whose state is `x`, after one step.
constexpr std::uint64_t splitmix64_once(std::uint64_t x) noexcept {
  return mix64(x + kGoldenGamma);
}

// Maps 64 random bits onto [0, 1) with 53-bit resolution.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// SplitMix64 stream. Bit-exact across platforms; cheap to copy.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += kGoldenGamma;
    return mix64(state_);
  }
  constexpr std::uint64_t operator()() noexcept { return next(); }

  // Uniform double in [0, 1).
  constexpr double uniform() noexcept { return to_unit(next()); }

  // Modulo-reduced draw in [0, bound). Bias is below bound / 2^64.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept { return next() % bound; }

  constexpr std::uint64_t state() const noexcept { return state_; }

  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

 private:
  std::uint64_t state_;
};

// Independent substream keyed by (base, a, b). Used so that every
// (chunk, candidate) pair draws from its own stream regardless of the
// order in which work is scheduled.
constexpr SplitMix64 substream(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) noexcept {
  std::uint64_t s = mix64(base ^ 0x5851F42D4C957F2DULL);
  s = mix64(s ^ (a + 0x14057B7EF767814FULL));
  s = mix64(s ^ (b + 0x2545F4914F6CDD1DULL));
  return SplitMix64(s);
}

}  // namespace watersearch
