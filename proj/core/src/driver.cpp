#include "cascade/driver.hpp"

#include <exception>
#include <mutex>
#include <thread>

#include "cascade/errors.hpp"

namespace cascade {

namespace {

Direction inbound_of(const Party& p) {
  return p.outbound() == Direction::InitiatorToResponder ? Direction::ResponderToInitiator
                                                         : Direction::InitiatorToResponder;
}

void send_all(Channel& channel, const Party& from, std::vector<Message> messages) {
  for (auto& m : messages) channel.send(from.outbound(), std::move(m));
}

void run_lockstep(Party& a, Party& b, Channel& channel) {
  send_all(channel, a, a.start());
  send_all(channel, b, b.start());
  while (!(a.finished() && b.finished())) {
    bool progressed = false;
    for (Party* p : {&b, &a}) {
      while (auto m = channel.try_recv(inbound_of(*p))) {
        send_all(channel, *p, p->on_message(*m));
        progressed = true;
      }
    }
    if (!progressed) throw ProtocolError("session stalled: no message in flight and parties not finished");
  }
}

void run_concurrent(Party& a, Party& b, Channel& channel) {
  std::mutex mutex;
  std::exception_ptr failure;

  auto body = [&](Party& p) {
    try {
      send_all(channel, p, p.start());
      while (!p.finished()) {
        auto m = channel.recv(inbound_of(p));
        if (!m) throw TransportError("channel closed before the session finished");
        send_all(channel, p, p.on_message(*m));
      }
    } catch (...) {
      {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
      }
      channel.close();
    }
  };

  std::thread tb(body, std::ref(b));
  body(a);
  tb.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

void run_parties(Party& initiator, Party& responder, Channel& channel, Scheduling scheduling) {
  if (scheduling == Scheduling::Concurrent) {
    run_concurrent(initiator, responder, channel);
  } else {
    run_lockstep(initiator, responder, channel);
  }
}

}  // namespace cascade
