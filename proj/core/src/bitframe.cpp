#include "cascade/bitframe.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace cascade {

namespace {
__extension__ using u128 = unsigned __int128;
}  // namespace

BitFrame::BitFrame(std::vector<Bit> bits) : bits_(std::move(bits)) {
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] > 1) throw ConfigError("bit " + std::to_string(i) + " is not 0 or 1");
  }
}

BitFrame::BitFrame(std::initializer_list<int> bits) {
  bits_.reserve(bits.size());
  for (int b : bits) {
    if (b != 0 && b != 1) throw ConfigError("bit value must be 0 or 1");
    bits_.push_back(static_cast<Bit>(b));
  }
}

BitFrame BitFrame::random(std::size_t length, SeededRng& rng) {
  BitFrame frame(length);
  std::size_t i = 0;
  while (i < length) {
    std::uint64_t word = rng.next_u64();
    for (int b = 0; b < 64 && i < length; ++b, ++i) {
      frame.bits_[i] = static_cast<Bit>((word >> b) & 1U);
    }
  }
  return frame;
}

void BitFrame::set(std::size_t i, Bit value) {
  if (value > 1) throw ConfigError("bit value must be 0 or 1");
  bits_.at(i) = value;
}

std::span<const Bit> BitFrame::slice(const Interval& iv) const {
  if (iv.hi > bits_.size() || iv.lo > iv.hi) throw ConfigError("slice out of range");
  return std::span<const Bit>(bits_).subspan(iv.lo, iv.size());
}

Bit parity(std::span<const Bit> bits) noexcept {
  Bit acc = 0;
  for (Bit b : bits) acc ^= b;
  return acc;
}

std::size_t hamming_distance(const BitFrame& a, const BitFrame& b) {
  if (a.size() != b.size()) {
    throw ConfigError("hamming_distance: length mismatch (" + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()) + ")");
  }
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
  return d;
}

Permutation::Permutation(std::vector<std::size_t> mapping) : mapping_(std::move(mapping)) {
  std::vector<bool> seen(mapping_.size(), false);
  for (std::size_t target : mapping_) {
    if (target >= mapping_.size() || seen[target]) {
      throw ConfigError("permutation mapping is not a bijection");
    }
    seen[target] = true;
  }
}

Permutation Permutation::identity(std::size_t length) {
  std::vector<std::size_t> m(length);
  std::iota(m.begin(), m.end(), std::size_t{0});
  return Permutation(std::move(m));
}

BitFrame apply_permutation(const BitFrame& frame, const Permutation& p) {
  if (p.size() != frame.size()) {
    throw ConfigError("apply_permutation: permutation length " + std::to_string(p.size()) +
                      " does not match frame length " + std::to_string(frame.size()));
  }
  std::vector<Bit> out(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) out[p[i]] = frame[i];
  return BitFrame(std::move(out));
}

Permutation invert_permutation(const Permutation& p) {
  std::vector<std::size_t> inv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) inv[p[i]] = i;
  return Permutation(std::move(inv));
}

Permutation compose(const Permutation& first, const Permutation& second) {
  if (first.size() != second.size()) throw ConfigError("compose: length mismatch");
  std::vector<std::size_t> m(first.size());
  for (std::size_t i = 0; i < first.size(); ++i) m[i] = second[first[i]];
  return Permutation(std::move(m));
}

Permutation out_shuffle_permutation(std::size_t length) {
  const std::size_t half = (length + 1) / 2;
  std::vector<std::size_t> m;
  m.reserve(length);
  for (std::size_t t = 0; t < half; ++t) {
    m.push_back(t);
    if (half + t < length) m.push_back(half + t);
  }
  return Permutation(std::move(m));
}

std::size_t shuffle_repetitions(std::size_t round, std::uint64_t seed) noexcept {
  return round + 1 + static_cast<std::size_t>(seed % 7);
}

Permutation gen_shuffle_permutation(std::size_t length, std::size_t round, const SeededRng& rng) {
  if (length == 0) throw ConfigError("permutation length must be >= 1");
  const Permutation once = out_shuffle_permutation(length);
  Permutation result = Permutation::identity(length);
  for (std::size_t k = shuffle_repetitions(round, rng.seed()); k > 0; --k) {
    result = compose(result, once);
  }
  return result;
}

std::vector<std::uint64_t> lcg_keys(std::size_t length, std::uint64_t seed, const LcgParams& params) {
  if (params.m == 0) throw ConfigError("LCG modulus must be positive");
  std::vector<std::uint64_t> keys(length);
  // 128-bit product keeps a*x exact for any modulus up to 2^64.
  u128 x = seed % params.m;
  for (std::size_t i = 0; i < length; ++i) {
    x = (static_cast<u128>(params.a) * x + params.c) % params.m;
    keys[i] = static_cast<std::uint64_t>(x);
  }
  return keys;
}

Permutation lcg_permutation(std::size_t length, std::uint64_t seed, const LcgParams& params) {
  if (length == 0) throw ConfigError("permutation length must be >= 1");
  const auto keys = lcg_keys(length, seed, params);
  std::vector<std::size_t> order(length);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return Permutation(std::move(order));
}

std::uint64_t lcg_round_seed(std::size_t round, const SeededRng& rng) noexcept {
  return derive_seed(rng.seed(), round) & 0xFFFFFFFFULL;
}

Permutation gen_lcg_permutation(std::size_t length, std::size_t round, const SeededRng& rng) {
  return lcg_permutation(length, lcg_round_seed(round, rng));
}

Permutation gen_round_permutation(PermutationKind kind, std::size_t length, std::size_t round,
                                  const SeededRng& rng) {
  switch (kind) {
    case PermutationKind::Shuffle:
      return gen_shuffle_permutation(length, round, rng);
    case PermutationKind::Lcg:
      return gen_lcg_permutation(length, round, rng);
  }
  throw ConfigError("unknown permutation kind");
}

void validate_noise(const NoiseSpec& spec, std::size_t frame_length) {
  if (const auto* bsc = std::get_if<BscNoise>(&spec)) {
    if (!(bsc->qber > 0.0 && bsc->qber < 0.5)) {
      throw ConfigError("BSC qber must lie in (0, 0.5), got " + std::to_string(bsc->qber));
    }
    return;
  }
  const auto& fixed = std::get<FixedErrors>(spec);
  if (fixed.count > frame_length) {
    throw ConfigError("fixed error count " + std::to_string(fixed.count) +
                      " exceeds frame length " + std::to_string(frame_length));
  }
}

}  // namespace cascade
