#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <variant>
#include <vector>

#include "cascade/errors.hpp"
#include "cascade/interval.hpp"
#include "cascade/rng.hpp"

namespace cascade {

using Bit = std::uint8_t;

/// A party's key material: an ordered sequence of bits, one byte per bit.
class BitFrame {
 public:
  BitFrame() = default;
  explicit BitFrame(std::size_t length) : bits_(length, 0) {}
  explicit BitFrame(std::vector<Bit> bits);
  BitFrame(std::initializer_list<int> bits);

  static BitFrame random(std::size_t length, SeededRng& rng);

  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }

  Bit operator[](std::size_t i) const { return bits_[i]; }
  Bit at(std::size_t i) const { return bits_.at(i); }
  void set(std::size_t i, Bit value);
  void flip(std::size_t i) { bits_.at(i) ^= 1U; }

  std::span<const Bit> bits() const noexcept { return bits_; }
  std::span<const Bit> slice(const Interval& iv) const;

  friend bool operator==(const BitFrame&, const BitFrame&) = default;

 private:
  std::vector<Bit> bits_;
};

/// XOR fold of all bits. The empty sequence has parity 0.
Bit parity(std::span<const Bit> bits) noexcept;
inline Bit parity(const BitFrame& frame) noexcept { return parity(frame.bits()); }

std::size_t hamming_distance(const BitFrame& a, const BitFrame& b);

/// A bijection on [0, n). Source index i is sent to target mapping()[i].
class Permutation {
 public:
  Permutation() = default;
  /// Throws ConfigError unless `mapping` is a bijection on [0, mapping.size()).
  explicit Permutation(std::vector<std::size_t> mapping);

  static Permutation identity(std::size_t length);

  std::size_t size() const noexcept { return mapping_.size(); }
  std::size_t operator[](std::size_t i) const { return mapping_[i]; }
  std::span<const std::size_t> mapping() const noexcept { return mapping_; }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> mapping_;
};

/// out[p[i]] = in[i].
BitFrame apply_permutation(const BitFrame& frame, const Permutation& p);
Permutation invert_permutation(const Permutation& p);
/// Permutation equivalent to applying `first` and then `second`.
Permutation compose(const Permutation& first, const Permutation& second);

/// One perfect out-shuffle: the first ceil(n/2) elements are interleaved with
/// the rest, so mapping = [0, h, 1, h+1, ...] with h = ceil(n/2).
Permutation out_shuffle_permutation(std::size_t length);

/// Number of out-shuffle applications used for a round: round + 1 + seed % 7.
std::size_t shuffle_repetitions(std::size_t round, std::uint64_t seed) noexcept;

/// Round permutation built by repeating the out-shuffle
/// shuffle_repetitions(round, rng.seed()) times.
Permutation gen_shuffle_permutation(std::size_t length, std::size_t round, const SeededRng& rng);

struct LcgParams {
  std::uint64_t a = 1664525;
  std::uint64_t c = 1013904223;
  std::uint64_t m = std::uint64_t{1} << 32;
};

/// Sort keys k_i = LCG^(i+1)(seed) for i in [0, length).
std::vector<std::uint64_t> lcg_keys(std::size_t length, std::uint64_t seed, const LcgParams& params = {});

/// mapping = stable argsort of lcg_keys(length, seed).
Permutation lcg_permutation(std::size_t length, std::uint64_t seed, const LcgParams& params = {});

/// LCG seed for a round: low 32 bits of derive_seed(rng.seed(), round).
std::uint64_t lcg_round_seed(std::size_t round, const SeededRng& rng) noexcept;

Permutation gen_lcg_permutation(std::size_t length, std::size_t round, const SeededRng& rng);

enum class PermutationKind : std::uint8_t { Shuffle = 0, Lcg = 1 };

Permutation gen_round_permutation(PermutationKind kind, std::size_t length, std::size_t round,
                                  const SeededRng& rng);

// ---------------------------------------------------------------------------
// Channel noise

struct BscNoise {
  double qber = 0.0;
};

struct FixedErrors {
  std::size_t count = 0;
};

using NoiseSpec = std::variant<BscNoise, FixedErrors>;

void validate_noise(const NoiseSpec& spec, std::size_t frame_length);

struct NoiseResult {
  BitFrame frame;
  std::size_t flipped = 0;
};

template <typename R>
concept UnitSource = requires(R& r, std::uint64_t bound) {
  { r.next_unit() } -> std::convertible_to<double>;
  { r.uniform(bound) } -> std::convertible_to<std::uint64_t>;
};

/// BSC flips every bit independently with probability qber. FixedErrors flips
/// exactly `count` distinct positions drawn uniformly (partial Fisher-Yates).
template <UnitSource R>
NoiseResult apply_noise(const BitFrame& frame, const NoiseSpec& spec, R& rng) {
  validate_noise(spec, frame.size());
  NoiseResult out{frame, 0};
  if (const auto* bsc = std::get_if<BscNoise>(&spec)) {
    for (std::size_t i = 0; i < frame.size(); ++i) {
      if (rng.next_unit() < bsc->qber) {
        out.frame.flip(i);
        ++out.flipped;
      }
    }
    return out;
  }
  const std::size_t count = std::get<FixedErrors>(spec).count;
  std::vector<std::size_t> order(frame.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.uniform(order.size() - k));
    std::swap(order[k], order[j]);
    out.frame.flip(order[k]);
  }
  out.flipped = count;
  return out;
}

}  // namespace cascade
