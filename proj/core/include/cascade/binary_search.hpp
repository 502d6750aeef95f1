#pragma once

#include <cstddef>
#include <optional>

#include "cascade/bitframe.hpp"
#include "cascade/interval.hpp"

namespace cascade {

/// Where the remote first-half parity of a step came from.
enum class ParitySource : std::uint8_t {
  Disclosed,  // read off the channel: counts toward leakage
  Reused,     // stored or inferred locally: free
};

/// BINARY as an explicit state machine. Each step consumes the parity of the
/// first half of the current interval on both sides and moves into the half
/// with mismatched parity. The second half's parity is never exchanged.
class BinarySearch {
 public:
  enum class Status : std::uint8_t { Running, Found };

  /// Running over `interval`, or Found immediately for a singleton.
  /// Throws ConfigError on an empty interval.
  static BinarySearch start(const Interval& interval);

  /// As above, but also rejects blocks whose parities agree: BINARY requires
  /// an odd number of differing bits. Throws ProtocolError in that case.
  static BinarySearch start(const Interval& interval, Bit local_parity, Bit remote_parity);

  /// Advances one bisection. Throws ProtocolError when already Found.
  BinarySearch step(Bit local_half_parity, Bit remote_half_parity,
                    ParitySource source = ParitySource::Disclosed) const;

  Status status() const noexcept { return status_; }
  bool found() const noexcept { return status_ == Status::Found; }
  bool running() const noexcept { return status_ == Status::Running; }

  const Interval& current_interval() const noexcept { return current_; }
  /// The interval whose parity the next step needs.
  Interval query_interval() const noexcept { return left_half(current_); }

  /// Position of the located error; only meaningful when found().
  std::size_t position() const noexcept { return current_.lo; }

  std::size_t disclosed_count() const noexcept { return disclosed_; }
  std::size_t steps() const noexcept { return steps_; }

 private:
  BinarySearch(const Interval& iv, Status s) : current_(iv), status_(s) {}

  Interval current_;
  Status status_;
  std::size_t disclosed_ = 0;
  std::size_t steps_ = 0;
};

/// ceil(log2 n) for n >= 1.
std::size_t ceil_log2(std::size_t n) noexcept;

}  // namespace cascade
