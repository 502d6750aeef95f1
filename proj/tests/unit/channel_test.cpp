#include "cascade/channel.hpp"

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "cascade/errors.hpp"
#include "cascade/message.hpp"
#include "cascade/rng.hpp"

namespace cascade {
namespace {

using ::testing::HasSubstr;

Interval random_interval(SeededRng& rng) {
  const std::uint64_t lo = rng.uniform(1ULL << 40);
  return {lo, lo + 1 + rng.uniform(1000)};
}

Payload random_payload(std::size_t tag, SeededRng& rng) {
  switch (tag) {
    case 0: {
      InitMsg m;
      m.frame_length = rng.next_u64();
      if (rng.next_bit()) {
        m.schedule = StaticSchedule{static_cast<std::uint32_t>(2 + rng.uniform(9)), rng.next_unit() * 0.5};
      } else {
        m.schedule = DynamicSchedule{rng.next_unit() * 0.5};
      }
      switch (rng.uniform(3)) {
        case 0: m.break_condition = ProbabilisticBreak{rng.uniform(100)}; break;
        case 1: m.break_condition = ThresholdBreak{rng.uniform(100)}; break;
        default: m.break_condition = StaticBreak{rng.uniform(100)};
      }
      m.permutation_kind = rng.next_bit() ? PermutationKind::Lcg : PermutationKind::Shuffle;
      m.seed = rng.next_u64();
      m.aggregation = rng.next_bit();
      m.parity_reuse = rng.next_bit();
      return m;
    }
    case 1: {
      BlockParitiesMsg m{rng.next_u32(), {}};
      for (std::size_t i = rng.uniform(70); i > 0; --i) m.parities.push_back(rng.next_bit());
      return m;
    }
    case 2: {
      ParityQueryMsg m{rng.next_u32(), {}};
      for (std::size_t i = rng.uniform(10); i > 0; --i) m.intervals.push_back({rng.next_u32(), random_interval(rng)});
      return m;
    }
    case 3: {
      ParityAnswerMsg m{rng.next_u32(), {}};
      for (std::size_t i = rng.uniform(10); i > 0; --i) {
        m.entries.push_back({rng.next_u32(), random_interval(rng), static_cast<Bit>(rng.next_bit())});
      }
      return m;
    }
    case 4: return RoundDoneMsg{rng.next_u32(), rng.next_u64()};
    case 5: return FinalizeMsg{rng.next_u64()};
    default:
      return ResultMsg{static_cast<SessionStatus>(rng.uniform(5)), rng.next_u64(), rng.next_u64()};
  }
}

TEST(Codec, RoundTripEveryVariant) {
  SeededRng rng(1234);
  for (int i = 0; i < 3000; ++i) {
    const Message m{rng.next_u64(), random_payload(static_cast<std::size_t>(i % 7), rng)};
    const auto bytes = encode(m);
    ASSERT_EQ(decode(bytes), m) << to_text(m);
    ASSERT_EQ(encode(m), bytes);
  }
}

TEST(Codec, TruncationNamesField) {
  SeededRng rng(5);
  for (std::size_t tag = 0; tag < 7; ++tag) {
    const auto bytes = encode(Message{9, random_payload(tag, rng)});
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
      try {
        decode(std::span(bytes).first(cut));
        FAIL() << "decoded a truncated buffer of tag " << tag;
      } catch (const DecodeError& e) {
        EXPECT_FALSE(e.field().empty());
      }
    }
  }
}

TEST(Codec, RejectsMalformedBuffers) {
  auto bytes = encode(Message{0, FinalizeMsg{7}});
  auto bad_version = bytes;
  bad_version[0] = 9;
  try {
    decode(bad_version);
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.field(), "version");
  }
  auto bad_tag = bytes;
  bad_tag[1] = 42;
  EXPECT_THROW(decode(bad_tag), DecodeError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode(trailing), DecodeError);

  auto parities = encode(Message{0, BlockParitiesMsg{0, {1, 0, 1}}});
  parities.back() |= 0x80;  // padding bit
  try {
    decode(parities);
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_THAT(e.field(), HasSubstr("BlockParities"));
  }

  auto answer = encode(Message{0, ParityAnswerMsg{0, {{0, {0, 4}, 1}}}});
  answer.back() = 2;
  try {
    decode(answer);
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_THAT(e.field(), HasSubstr("ParityAnswer.entries[0]"));
  }
}

TEST(Codec, ParityBitCount) {
  EXPECT_EQ(parity_bit_count(BlockParitiesMsg{0, {1, 0, 1, 1, 0}}), 5u);
  EXPECT_EQ(parity_bit_count(ParityAnswerMsg{0, {{0, {0, 1}, 1}, {0, {1, 2}, 0}}}), 2u);
  EXPECT_EQ(parity_bit_count(ParityQueryMsg{0, {{0, {0, 1}}}}), 0u);
  EXPECT_EQ(parity_bit_count(InitMsg{}), 0u);
  EXPECT_EQ(parity_bit_count(FinalizeMsg{}), 0u);
}

TEST(Leakage, SumsParitiesOnly) {
  Channel ch;
  ch.send(Direction::InitiatorToResponder, {0, InitMsg{}});
  ch.send(Direction::InitiatorToResponder, {0, BlockParitiesMsg{0, {1, 0, 1, 1, 0}}});
  ch.send(Direction::ResponderToInitiator, {0, ParityQueryMsg{0, {{0, {0, 2}}, {0, {4, 6}}, {0, {8, 9}}}}});
  ch.send(Direction::InitiatorToResponder, {0, ParityAnswerMsg{0, {{0, {0, 2}, 1}, {0, {4, 6}, 0}, {0, {8, 9}, 1}}}});
  ch.send(Direction::ResponderToInitiator, {0, RoundDoneMsg{0, 2}});
  const LeakageReport r = leakage(ch.transcript());
  EXPECT_EQ(r.parity_bits_disclosed, 8u);
  EXPECT_EQ(r.messages_initiator, 3u);
  EXPECT_EQ(r.messages_responder, 2u);
  EXPECT_EQ(r.parity_bits_per_round.at(0), 8u);
  EXPECT_EQ(leakage(Transcript{}).parity_bits_disclosed, 0u);
}

TEST(Channel, LosslessFifoPerDirection) {
  Channel ch;
  const Message a{0, RoundDoneMsg{1, 5}};
  const Message b{0, FinalizeMsg{99}};
  ch.send(Direction::InitiatorToResponder, a);
  ch.send(Direction::InitiatorToResponder, b);
  ch.send(Direction::ResponderToInitiator, a);
  EXPECT_EQ(ch.try_recv(Direction::ResponderToInitiator)->payload, a.payload);
  const auto first = ch.try_recv(Direction::InitiatorToResponder);
  const auto second = ch.try_recv(Direction::InitiatorToResponder);
  EXPECT_EQ(first->payload, a.payload);
  EXPECT_EQ(first->seq, 0u);
  EXPECT_EQ(second->payload, b.payload);
  EXPECT_EQ(second->seq, 1u);
  EXPECT_FALSE(ch.try_recv(Direction::InitiatorToResponder).has_value());
  EXPECT_NO_THROW(ch.transcript().check_sequence());
}

TEST(Channel, SendAfterCloseIsTransportError) {
  Channel ch;
  ch.send(Direction::InitiatorToResponder, {0, FinalizeMsg{1}});
  ch.close();
  EXPECT_TRUE(ch.closed());
  EXPECT_THROW(ch.send(Direction::InitiatorToResponder, {0, FinalizeMsg{2}}), TransportError);
  EXPECT_TRUE(ch.recv(Direction::InitiatorToResponder).has_value());  // drains what was queued
  EXPECT_FALSE(ch.recv(Direction::InitiatorToResponder).has_value());
}

TEST(Channel, EveSeesIdenticalCopies) {
  Channel ch;
  auto eve = std::make_shared<Eve>();
  ch.add_tap(eve);
  ch.send(Direction::InitiatorToResponder, {0, BlockParitiesMsg{3, {1, 1, 0}}});
  ch.send(Direction::ResponderToInitiator, {0, ParityQueryMsg{3, {{3, {0, 4}}}}});
  ch.send(Direction::InitiatorToResponder, {0, ParityAnswerMsg{3, {{3, {0, 4}, 0}}}});
  EXPECT_EQ(eve->messages(), 3u);
  EXPECT_EQ(eve->parity_bits(), 4u);
  EXPECT_EQ(eve->parity_bits(), leakage(ch.transcript()).parity_bits_disclosed);
  const auto seen = eve->observed();
  EXPECT_EQ(seen[0], ch.try_recv(Direction::InitiatorToResponder));
}

TEST(Channel, ConcurrentProducerConsumer) {
  Channel ch;
  constexpr std::uint64_t kCount = 2000;
  std::thread producer([&] {
    for (std::uint64_t i = 0; i < kCount; ++i) ch.send(Direction::InitiatorToResponder, {0, FinalizeMsg{i}});
  });
  for (std::uint64_t i = 0; i < kCount; ++i) {
    const auto m = ch.recv(Direction::InitiatorToResponder);
    ASSERT_TRUE(m.has_value());
    ASSERT_EQ(m->seq, i);
    ASSERT_EQ(std::get<FinalizeMsg>(m->payload).fingerprint, i);
  }
  producer.join();
}

TEST(Transcript, SerializeRoundTripAndFile) {
  Channel ch;
  SeededRng rng(77);
  for (int i = 0; i < 40; ++i) {
    ch.send(i % 3 ? Direction::InitiatorToResponder : Direction::ResponderToInitiator,
            {0, random_payload(static_cast<std::size_t>(i % 7), rng)});
  }
  const Transcript t = ch.transcript();
  EXPECT_EQ(Transcript::deserialize(t.serialize()), t);
  const auto path = std::filesystem::temp_directory_path() / "cascade_channel_test.csct";
  t.write(path);
  EXPECT_EQ(Transcript::read(path), t);
  std::filesystem::remove(path);
  EXPECT_EQ(t.messages(Direction::ResponderToInitiator).size(), 14u);
}

TEST(Transcript, DetectsCorruption) {
  Transcript t;
  t.append({Direction::InitiatorToResponder, 0, encode({0, FinalizeMsg{1}})});
  t.append({Direction::InitiatorToResponder, 2, encode({2, FinalizeMsg{1}})});
  EXPECT_THROW(t.check_sequence(), DecodeError);
  auto bytes = t.serialize();
  bytes[0] = 'X';
  EXPECT_THROW(Transcript::deserialize(bytes), DecodeError);
  auto cut = t.serialize();
  cut.pop_back();
  EXPECT_THROW(Transcript::deserialize(cut), DecodeError);
}

}  // namespace
}  // namespace cascade
