#pragma once

#include <compare>
#include <cstddef>
#include <ostream>

namespace cascade {

/// Half-open index range [lo, hi).
struct Interval {
  std::size_t lo = 0;
  std::size_t hi = 0;

  constexpr std::size_t size() const noexcept { return hi > lo ? hi - lo : 0; }
  constexpr bool empty() const noexcept { return hi <= lo; }
  constexpr bool contains(std::size_t pos) const noexcept { return pos >= lo && pos < hi; }
  constexpr bool contains(const Interval& other) const noexcept {
    return other.lo >= lo && other.hi <= hi;
  }
  constexpr bool overlaps(const Interval& other) const noexcept {
    return lo < other.hi && other.lo < hi;
  }

  friend constexpr auto operator<=>(const Interval&, const Interval&) = default;
};

/// Split point shared by the parity tree and BINARY: ceil((lo + hi) / 2).
/// Odd intervals put the larger part on the left.
constexpr std::size_t split_point(const Interval& iv) noexcept {
  return iv.lo + (iv.size() + 1) / 2;
}

constexpr Interval left_half(const Interval& iv) noexcept { return {iv.lo, split_point(iv)}; }
constexpr Interval right_half(const Interval& iv) noexcept { return {split_point(iv), iv.hi}; }

inline std::ostream& operator<<(std::ostream& os, const Interval& iv) {
  return os << '[' << iv.lo << ',' << iv.hi << ')';
}

}  // namespace cascade
