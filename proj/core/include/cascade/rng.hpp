#pragma once

#include <cstdint>

namespace cascade {

/// splitmix64 finalizer. Used to derive independent seeds from a parent seed.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a child seed from a parent seed and a stream label.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label) noexcept;

/// Deterministic generator with a platform-independent output stream.
///
/// Algorithm: xorshift64* (Vigna 2016).
///   x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27;
///   out = x * 0x2545F4914F6CDD1D
/// The 64-bit state is initialised as mix64(seed); a zero state is replaced
/// by 0x9E3779B97F4A7C15. Not suitable for cryptographic use.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;
  std::uint32_t next_u32() noexcept { return static_cast<std::uint32_t>(next_u64() >> 32); }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double next_unit() noexcept;

  /// Unbiased uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform(std::uint64_t bound) noexcept;

  bool next_bit() noexcept { return (next_u64() >> 63) != 0; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace cascade
