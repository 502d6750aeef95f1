#include "cascade/binary_search.hpp"

#include <sstream>

#include "cascade/errors.hpp"

namespace cascade {

BinarySearch BinarySearch::start(const Interval& interval) {
  if (interval.empty()) throw ConfigError("BINARY cannot start on an empty interval");
  return BinarySearch(interval, interval.size() == 1 ? Status::Found : Status::Running);
}

BinarySearch BinarySearch::start(const Interval& interval, Bit local_parity, Bit remote_parity) {
  if (local_parity == remote_parity) {
    std::ostringstream msg;
    msg << "BINARY started on " << interval << " whose parities agree";
    throw ProtocolError(msg.str());
  }
  return start(interval);
}

BinarySearch BinarySearch::step(Bit local_half_parity, Bit remote_half_parity,
                                ParitySource source) const {
  if (status_ != Status::Running) throw ProtocolError("BINARY step on a finished search");
  BinarySearch next = *this;
  next.current_ = local_half_parity != remote_half_parity ? left_half(current_) : right_half(current_);
  if (source == ParitySource::Disclosed) ++next.disclosed_;
  ++next.steps_;
  if (next.current_.size() == 1) next.status_ = Status::Found;
  return next;
}

std::size_t ceil_log2(std::size_t n) noexcept {
  std::size_t bits = 0;
  std::size_t v = 1;
  while (v < n) {
    v <<= 1;
    ++bits;
  }
  return bits;
}

}  // namespace cascade
