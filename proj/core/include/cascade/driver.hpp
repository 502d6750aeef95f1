#pragma once

#include "cascade/channel.hpp"
#include "cascade/engine.hpp"

namespace cascade {

enum class Scheduling : std::uint8_t {
  Lockstep,    // one thread, parties take turns draining their inbox
  Concurrent,  // one thread per party, blocking receives
};

/// Runs both parties to completion over `channel`. The protocol keeps at
/// most one message in flight, so both schedulings yield the same
/// transcript. The first exception raised by either party closes the
/// channel and is rethrown here.
void run_parties(Party& initiator, Party& responder, Channel& channel,
                 Scheduling scheduling = Scheduling::Lockstep);

}  // namespace cascade
