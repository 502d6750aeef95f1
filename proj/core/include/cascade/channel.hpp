#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "cascade/message.hpp"

namespace cascade {

struct TranscriptRecord {
  Direction direction = Direction::InitiatorToResponder;
  std::uint64_t seq = 0;
  std::vector<std::uint8_t> bytes;  // encode(message)

  Message message() const { return decode(bytes); }

  friend bool operator==(const TranscriptRecord&, const TranscriptRecord&) = default;
};

/// Ordered record of every message that crossed the channel.
///
/// File layout: the 4 bytes "CSCT", u8 version (1), then one record per
/// message: u8 direction | u64 seq | u32 length | `length` encoded bytes.
/// Integers are little-endian.
class Transcript {
 public:
  void append(TranscriptRecord record) { records_.push_back(std::move(record)); }

  const std::vector<TranscriptRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  /// Decoded messages travelling in `direction`, in order.
  std::vector<Message> messages(Direction direction) const;

  /// Throws DecodeError unless sequence numbers are gapless from 0 per direction.
  void check_sequence() const;

  std::vector<std::uint8_t> serialize() const;
  static Transcript deserialize(std::span<const std::uint8_t> bytes);

  void write(const std::filesystem::path& path) const;
  static Transcript read(const std::filesystem::path& path);

  friend bool operator==(const Transcript&, const Transcript&) = default;

 private:
  std::vector<TranscriptRecord> records_;
};

struct LeakageReport {
  std::size_t parity_bits_disclosed = 0;
  std::size_t messages_initiator = 0;  // sent by Alice
  std::size_t messages_responder = 0;  // sent by Bob
  std::map<std::uint32_t, std::size_t> parity_bits_per_round;

  std::size_t messages_total() const noexcept { return messages_initiator + messages_responder; }
};

/// Parity bits = sum of BlockParities lengths + sum of ParityAnswer entries.
LeakageReport leakage(const Transcript& transcript);

/// Passive observer attached to a channel. Receives a copy of every encoded
/// message; may be called from either party's thread.
class ChannelTap {
 public:
  virtual ~ChannelTap() = default;
  virtual void observe(Direction direction, std::span<const std::uint8_t> bytes) = 0;
};

/// The eavesdropper: decodes everything she sees and tallies revealed parities.
class Eve : public ChannelTap {
 public:
  void observe(Direction direction, std::span<const std::uint8_t> bytes) override;

  std::size_t parity_bits() const;
  std::size_t messages() const;
  std::vector<Message> observed() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Message> seen_;
  std::size_t parity_bits_ = 0;
};

/// Lossless in-process classical channel, FIFO per direction. Payloads are
/// encoded on send and decoded on receive; the channel itself never looks
/// inside them. Safe to use from one thread per party.
class Channel {
 public:
  void add_tap(std::shared_ptr<ChannelTap> tap);

  /// Stamps the next per-direction sequence number onto the message, records
  /// it, notifies taps, and queues it. Throws TransportError once closed.
  void send(Direction direction, Message message);

  std::optional<Message> try_recv(Direction direction);
  /// Blocks until a message arrives; nullopt once closed and drained.
  std::optional<Message> recv(Direction direction);

  void close();
  bool closed() const;

  Transcript transcript() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<std::vector<std::uint8_t>> queues_[2];
  std::uint64_t next_seq_[2] = {0, 0};
  bool closed_ = false;
  Transcript transcript_;
  std::vector<std::shared_ptr<ChannelTap>> taps_;
};

}  // namespace cascade
