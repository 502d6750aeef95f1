#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cascade/bitframe.hpp"
#include "cascade/interval.hpp"
#include "cascade/schedule.hpp"

namespace cascade {

/// Wire schema version written into every encoded message.
inline constexpr std::uint8_t kSchemaVersion = 1;

enum class Direction : std::uint8_t {
  InitiatorToResponder = 0,  // Alice -> Bob
  ResponderToInitiator = 1,  // Bob -> Alice
};

enum class SessionStatus : std::uint8_t {
  Ready = 0,
  Success = 1,
  Failure = 2,
  ConfigMismatch = 3,
  Aborted = 4,
};

const char* to_string(SessionStatus s) noexcept;
const char* to_string(Direction d) noexcept;

/// Everything both parties must agree on. Sent by the initiator.
struct InitMsg {
  std::uint64_t frame_length = 0;
  BlockScheduleConfig schedule;
  BreakCondition break_condition;
  PermutationKind permutation_kind = PermutationKind::Lcg;
  std::uint64_t seed = 0;
  bool aggregation = false;
  bool parity_reuse = false;

  friend bool operator==(const InitMsg&, const InitMsg&) = default;
};

/// Initiator's parities of every block of one round, in block order.
struct BlockParitiesMsg {
  std::uint32_t round = 0;
  std::vector<Bit> parities;

  friend bool operator==(const BlockParitiesMsg&, const BlockParitiesMsg&) = default;
};

/// An interval of the permuted frame of `round`.
struct QueryEntry {
  std::uint32_t round = 0;
  Interval interval;

  friend bool operator==(const QueryEntry&, const QueryEntry&) = default;
};

struct ParityQueryMsg {
  std::uint32_t round = 0;  // current protocol round
  std::vector<QueryEntry> intervals;

  friend bool operator==(const ParityQueryMsg&, const ParityQueryMsg&) = default;
};

struct AnswerEntry {
  std::uint32_t round = 0;
  Interval interval;
  Bit parity = 0;

  friend bool operator==(const AnswerEntry&, const AnswerEntry&) = default;
};

struct ParityAnswerMsg {
  std::uint32_t round = 0;
  std::vector<AnswerEntry> entries;

  friend bool operator==(const ParityAnswerMsg&, const ParityAnswerMsg&) = default;
};

struct RoundDoneMsg {
  std::uint32_t round = 0;
  std::uint64_t corrected = 0;

  friend bool operator==(const RoundDoneMsg&, const RoundDoneMsg&) = default;
};

struct FinalizeMsg {
  std::uint64_t fingerprint = 0;

  friend bool operator==(const FinalizeMsg&, const FinalizeMsg&) = default;
};

struct ResultMsg {
  SessionStatus status = SessionStatus::Ready;
  std::uint64_t corrected = 0;
  std::uint64_t disclosed = 0;

  friend bool operator==(const ResultMsg&, const ResultMsg&) = default;
};

using Payload = std::variant<InitMsg, BlockParitiesMsg, ParityQueryMsg, ParityAnswerMsg, RoundDoneMsg,
                             FinalizeMsg, ResultMsg>;

/// Tagged wire unit. `seq` is assigned by the channel, per direction.
struct Message {
  std::uint64_t seq = 0;
  Payload payload;

  friend bool operator==(const Message&, const Message&) = default;
};

const char* message_name(const Payload& payload) noexcept;

/// Parity bits a message reveals: BlockParities list length plus
/// ParityAnswer entry count. Every other variant reveals none.
std::size_t parity_bit_count(const Payload& payload) noexcept;

/// Canonical little-endian, field-ordered, length-prefixed layout:
///
///   u8 version | u8 tag | u64 seq | body
///
///   tag 0 Init          u64 frame_length
///                       u8 schedule (0 static: u32 k, f64 qber | 1 dynamic: f64 qber)
///                       u8 break (0 probabilistic | 1 threshold | 2 static), u64 param
///                       u8 permutation (0 shuffle | 1 lcg), u64 seed,
///                       u8 aggregation, u8 parity_reuse
///   tag 1 BlockParities u32 round, u64 count, ceil(count/8) bytes packed LSB first
///   tag 2 ParityQuery   u32 round, u32 count, count x (u32 round, u64 lo, u64 hi)
///   tag 3 ParityAnswer  u32 round, u32 count, count x (u32 round, u64 lo, u64 hi, u8 bit)
///   tag 4 RoundDone     u32 round, u64 corrected
///   tag 5 Finalize      u64 fingerprint
///   tag 6 Result        u8 status, u64 corrected, u64 disclosed
///
/// f64 values are written as their IEEE-754 bit pattern.
std::vector<std::uint8_t> encode(const Message& message);

/// Throws DecodeError naming the offending field.
Message decode(std::span<const std::uint8_t> bytes);

/// One-line human-readable form used in logs.
std::string to_text(const Message& message);

}  // namespace cascade
