#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "cascade/binary_search.hpp"
#include "cascade/bitframe.hpp"
#include "cascade/message.hpp"
#include "cascade/parity_tree.hpp"
#include "cascade/schedule.hpp"

namespace cascade {

enum class Role : std::uint8_t { Initiator, Responder };

/// Full protocol parameterization. Both parties must hold identical values
/// for every field except `role`; the init handshake checks this.
struct SessionConfig {
  std::size_t frame_length = 0;
  Role role = Role::Initiator;
  PermutationKind permutation_kind = PermutationKind::Lcg;
  BlockScheduleConfig schedule = StaticSchedule{2, 0.02};
  BreakCondition break_condition = StaticBreak{4};
  bool aggregation = false;
  bool parity_reuse = true;
  std::uint64_t seed = 0;
};

void validate(const SessionConfig& config);
InitMsg to_init(const SessionConfig& config);

/// Sessions stop after this many rounds even if the break condition never
/// fires (e.g. a threshold of 0).
inline constexpr std::size_t kMaxRounds = 64;

/// One bit fixed on the responder.
struct CorrectionEvent {
  std::uint32_t round = 0;           // round whose block was searched
  std::uint32_t protocol_round = 0;  // round in progress when it was found
  std::size_t original_position = 0;
  std::size_t permuted_position = 0;  // in `round`'s permuted frame
  std::size_t disclosed_bits = 0;     // parities read off the channel by this search

  friend bool operator==(const CorrectionEvent&, const CorrectionEvent&) = default;
};

struct FinalStatus {
  SessionStatus status = SessionStatus::Aborted;
  std::size_t corrected_total = 0;
  std::size_t disclosed_bits = 0;
  std::size_t rounds = 0;
};

/// Seed-keyed polynomial fingerprint over GF(p), p = 2^61 - 1.
///
/// The frame is cut into 32-bit little-endian chunks c_0..c_{m-1} (bit i of
/// the frame is bit i % 32 of chunk i / 32). With key
/// r = 1 + (mix64(seed ^ 0x5CA1AB1E) mod (p - 1)) the value is Horner's
/// evaluation h = n; h = h * r + c_i (mod p). Two different frames of equal
/// length collide with probability at most m / p over the key; frames that
/// differ in a single bit never collide.
std::uint64_t frame_fingerprint(const BitFrame& frame, std::uint64_t seed);

/// Per-round data both parties derive from (seed, round, history).
struct RoundLayout {
  Permutation permutation;
  Permutation inverse;
  RoundPlan plan;

  std::size_t block_of(std::size_t permuted_position) const noexcept {
    return permuted_position / plan.block_size;
  }
};

RoundLayout make_round_layout(const SessionConfig& config, std::size_t round,
                              std::span<const std::size_t> history);

/// A party: a sequential state machine that reacts to inbound messages and
/// produces outbound ones. Parties share nothing but the channel.
class Party {
 public:
  virtual ~Party() = default;

  /// Messages to send before anything has been received.
  virtual std::vector<Message> start() = 0;
  virtual std::vector<Message> on_message(const Message& message) = 0;
  virtual bool finished() const = 0;
  virtual FinalStatus final_status() const = 0;
  virtual Direction outbound() const = 0;
};

/// Alice. Holds the reference frame and answers parity requests.
class InitiatorSession final : public Party {
 public:
  InitiatorSession(SessionConfig config, BitFrame frame);

  std::vector<Message> start() override;
  std::vector<Message> on_message(const Message& message) override;
  bool finished() const override { return state_ == State::Done; }
  FinalStatus final_status() const override { return final_; }
  Direction outbound() const override { return Direction::InitiatorToResponder; }

  const BitFrame& frame() const noexcept { return frame_; }
  const SessionConfig& config() const noexcept { return config_; }
  const std::vector<std::size_t>& history() const noexcept { return history_; }
  std::size_t disclosed_bits() const noexcept { return disclosed_; }
  std::size_t rounds_started() const noexcept { return rounds_.size(); }
  const RoundLayout& layout(std::size_t round) const { return rounds_.at(round).layout; }

 private:
  enum class State { Idle, AwaitReady, InRound, AwaitResult, Done };

  struct Round {
    RoundLayout layout;
    std::vector<Bit> prefix;  // prefix[i] = parity of permuted[0, i)
  };

  Message begin_round();
  Bit parity_of(std::uint32_t round, const Interval& iv) const;

  SessionConfig config_;
  BitFrame frame_;
  State state_ = State::Idle;
  std::vector<Round> rounds_;
  std::vector<std::size_t> history_;
  std::size_t disclosed_ = 0;
  FinalStatus final_;
};

/// Bob. Holds the noisy frame, runs BINARY on mismatching blocks and
/// cascades every correction back into the other rounds' trees.
class ResponderSession final : public Party {
 public:
  ResponderSession(SessionConfig config, BitFrame frame);

  std::vector<Message> start() override { return {}; }
  std::vector<Message> on_message(const Message& message) override;
  bool finished() const override { return state_ == State::Done; }
  FinalStatus final_status() const override { return final_; }
  Direction outbound() const override { return Direction::ResponderToInitiator; }

  const BitFrame& frame() const noexcept { return frame_; }
  const SessionConfig& config() const noexcept { return config_; }
  const std::vector<std::size_t>& history() const noexcept { return history_; }
  const std::vector<CorrectionEvent>& corrections() const noexcept { return corrections_; }
  std::size_t disclosed_bits() const noexcept { return disclosed_; }
  std::size_t rounds_started() const noexcept { return rounds_.size(); }
  const RoundLayout& layout(std::size_t round) const { return rounds_.at(round).layout; }
  const std::vector<ColoredTree>& trees(std::size_t round) const { return rounds_.at(round).trees; }

  /// Stored initiator parity for `interval` of `round`'s permuted frame.
  /// Always nullopt when parity reuse is off. Never changes leakage counters.
  std::optional<Bit> reuse_parity_lookup(const Interval& interval, std::uint32_t round) const;

  /// Original positions whose values the transcript pins down: every
  /// position located by a BINARY search (the yellow leaves).
  std::set<std::size_t> compromised_positions() const;

  /// Number of parity searches completed; bounded by frame_length.
  std::size_t searches() const noexcept { return corrections_.size(); }

 private:
  enum class State { AwaitInit, AwaitRound, InRound, AwaitFinalize, Done };

  /// XOR Fenwick tree over one round's permuted copy of Bob's frame.
  class ParityIndex {
   public:
    explicit ParityIndex(std::span<const Bit> bits);
    void flip(std::size_t i);
    Bit prefix(std::size_t end) const;  // parity of [0, end)
    Bit parity(const Interval& iv) const { return prefix(iv.hi) ^ prefix(iv.lo); }

   private:
    std::vector<Bit> tree_;
  };

  struct Round {
    RoundLayout layout;
    ParityIndex index;
    std::vector<ColoredTree> trees;  // one per block
  };

  struct Target {
    std::uint32_t round = 0;
    std::size_t block = 0;
    Interval node;          // minimal mismatched red node; used for ordering
    Interval start;         // where BINARY starts (node or an inferred child)
    Bit start_parity = 0;   // initiator parity of `start`
  };

  struct Search {
    std::uint32_t round = 0;
    std::size_t block = 0;
    BinarySearch state;
    Bit remote_parity = 0;  // initiator parity of state.current_interval()
    ColoredTree learned;
    bool awaiting = false;
  };

  struct DirtyBlock {
    bool fresh = false;                  // root not yet compared this round
    std::vector<std::size_t> positions;  // flips (tree coordinates) since last clean
  };

  std::vector<Message> handle_init(const InitMsg& init);
  std::vector<Message> handle_block_parities(const BlockParitiesMsg& msg);
  std::vector<Message> handle_answer(const ParityAnswerMsg& msg);
  std::vector<Message> handle_finalize(const FinalizeMsg& msg);

  /// Drives the current wave until a query must be sent or the round ends.
  std::vector<Message> pump();
  bool plan_wave();
  void finish_wave();

  std::vector<Target> targets_full_scan(std::uint32_t round, std::size_t block, const DirtyBlock& d) const;
  std::vector<Target> targets_along_paths(std::uint32_t round, std::size_t block, const DirtyBlock& d) const;
  bool mismatched(std::uint32_t round, const ParityNode& node) const;

  /// Advances by inference until the search needs a disclosed parity.
  void advance(Search& s);
  void apply_parity(Search& s, Bit remote_left, ParitySource source);

  void cascade_correct(const CorrectionEvent& event);

  SessionConfig config_;
  BitFrame frame_;
  State state_ = State::AwaitInit;
  std::vector<Round> rounds_;
  std::vector<std::size_t> history_;
  std::vector<CorrectionEvent> corrections_;
  std::size_t corrected_this_round_ = 0;
  std::size_t disclosed_ = 0;
  FinalStatus final_;

  std::map<std::pair<std::uint32_t, std::size_t>, DirtyBlock> dirty_;
  std::vector<Search> wave_;
  std::size_t serial_cursor_ = 0;
  std::vector<std::size_t> pending_;  // indices into wave_ covered by the outstanding query
  std::vector<std::uint32_t> claim_;  // wave stamp per original position
  std::uint32_t wave_stamp_ = 0;
};

}  // namespace cascade
