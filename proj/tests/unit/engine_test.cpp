#include "cascade/engine.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "cascade/channel.hpp"
#include "cascade/driver.hpp"
#include "cascade/errors.hpp"
#include "cascade/harness.hpp"
#include "cascade/rng.hpp"

namespace cascade {
namespace {

SessionConfig make_config(std::size_t n, double estimate, std::uint64_t seed) {
  SessionConfig c;
  c.frame_length = n;
  c.schedule = StaticSchedule{2, estimate};
  c.seed = seed;
  return c;
}

SessionConfig as_responder(SessionConfig c) {
  c.role = Role::Responder;
  return c;
}

struct Session {
  InitiatorSession alice;
  ResponderSession bob;
  Channel channel;

  Session(const SessionConfig& config, const BitFrame& a, const BitFrame& b)
      : alice(config, a), bob(as_responder(config), b) {}

  void run(Scheduling s = Scheduling::Lockstep) { run_parties(alice, bob, channel, s); }
  Transcript transcript() const { return channel.transcript(); }
};

std::size_t total_blocks(const ResponderSession& bob) {
  std::size_t sum = 0;
  for (std::size_t r = 0; r < bob.rounds_started(); ++r) sum += bob.layout(r).plan.block_intervals.size();
  return sum;
}

BitFrame with_flips(BitFrame f, std::initializer_list<std::size_t> positions) {
  for (auto p : positions) f.flip(p);
  return f;
}

TEST(Handshake, MismatchedSeedEndsInConfigMismatch) {
  SeededRng rng(1);
  const BitFrame a = BitFrame::random(64, rng);
  auto cfg = make_config(64, 0.1, 3);
  InitiatorSession alice(cfg, a);
  auto other = as_responder(cfg);
  other.seed = 4;
  ResponderSession bob(other, a);
  Channel ch;
  run_parties(alice, bob, ch);
  EXPECT_EQ(alice.final_status().status, SessionStatus::ConfigMismatch);
  EXPECT_EQ(bob.final_status().status, SessionStatus::ConfigMismatch);
  EXPECT_EQ(leakage(ch.transcript()).parity_bits_disclosed, 0u);
}

TEST(Handshake, MismatchedSettingsEndInConfigMismatch) {
  SeededRng rng(2);
  const BitFrame a = BitFrame::random(64, rng);
  const auto cfg = make_config(64, 0.1, 3);
  std::vector<SessionConfig> variants(5, as_responder(cfg));
  variants[0].aggregation = true;
  variants[1].parity_reuse = false;
  variants[2].permutation_kind = PermutationKind::Shuffle;
  variants[3].schedule = StaticSchedule{3, 0.1};
  variants[4].break_condition = StaticBreak{5};
  for (const auto& v : variants) {
    InitiatorSession alice(cfg, a);
    ResponderSession bob(v, a);
    Channel ch;
    run_parties(alice, bob, ch);
    EXPECT_EQ(alice.final_status().status, SessionStatus::ConfigMismatch);
  }
}

TEST(Handshake, FrameLengthMustMatchConfig) {
  const auto cfg = make_config(64, 0.1, 3);
  EXPECT_THROW(InitiatorSession(cfg, BitFrame(63)), ConfigError);
  EXPECT_THROW(ResponderSession(as_responder(cfg), BitFrame(65)), ConfigError);
  auto bad = cfg;
  bad.frame_length = 0;
  EXPECT_THROW(validate(bad), ConfigError);
}

TEST(Engine, NoErrorsDisclosesOneParityPerBlock) {
  SeededRng rng(3);
  const BitFrame a = BitFrame::random(1000, rng);
  Session s(make_config(1000, 0.02, 9), a, a);
  s.run();
  EXPECT_EQ(s.bob.final_status().status, SessionStatus::Success);
  EXPECT_TRUE(s.bob.corrections().empty());
  EXPECT_EQ(s.bob.rounds_started(), 4u);
  EXPECT_EQ(s.bob.disclosed_bits(), total_blocks(s.bob));
  EXPECT_EQ(s.alice.disclosed_bits(), total_blocks(s.bob));
  EXPECT_EQ(leakage(s.transcript()).parity_bits_disclosed, total_blocks(s.bob));
}

TEST(Engine, SingleErrorCostsLogBlockSizeWithoutReuse) {
  SeededRng rng(4);
  const BitFrame a = BitFrame::random(256, rng);
  for (std::size_t pos : {0u, 77u, 255u}) {
    auto cfg = make_config(256, 1.0 / 16, 11);
    cfg.parity_reuse = false;
    Session s(cfg, a, with_flips(a, {pos}));
    s.run();
    ASSERT_EQ(s.bob.corrections().size(), 1u);
    const auto& ev = s.bob.corrections()[0];
    EXPECT_EQ(ev.original_position, pos);
    EXPECT_EQ(ev.round, 0u);
    EXPECT_EQ(ev.disclosed_bits, 4u);
    // block parity plus four halvings of a 16-bit block
    EXPECT_EQ(s.bob.disclosed_bits(), total_blocks(s.bob) + 4);
    EXPECT_EQ(s.bob.final_status().status, SessionStatus::Success);
  }
}

TEST(Engine, TwoErrorsInOneBlockAreCaughtByLaterRounds) {
  SeededRng rng(5);
  const BitFrame a = BitFrame::random(256, rng);
  auto cfg = make_config(256, 1.0 / 16, 21);
  const RoundLayout l0 = make_round_layout(cfg, 0, {});
  const std::size_t p = l0.inverse[32];
  const std::size_t q = l0.inverse[40];
  Session s(cfg, a, with_flips(a, {p, q}));
  s.run();
  EXPECT_EQ(s.bob.final_status().status, SessionStatus::Success);
  ASSERT_EQ(s.bob.corrections().size(), 2u);
  for (const auto& ev : s.bob.corrections()) EXPECT_GE(ev.protocol_round, 1u);
  EXPECT_EQ(s.bob.history().at(0), 0u);
}

TEST(Engine, CascadeNeverRequeriesBlockParities) {
  SeededRng rng(6);
  std::size_t cascaded = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const BitFrame a = BitFrame::random(512, rng);
    NoiseSpec noise = FixedErrors{24};
    auto cfg = make_config(512, 24.0 / 512, seed);
    Session s(cfg, a, apply_noise(a, noise, rng).frame);
    s.run();
    for (const auto& ev : s.bob.corrections()) cascaded += ev.round < ev.protocol_round;
    for (const auto& m : s.transcript().messages(Direction::ResponderToInitiator)) {
      const auto* q = std::get_if<ParityQueryMsg>(&m.payload);
      if (q == nullptr) continue;
      for (const auto& iv : q->intervals) {
        const auto& blocks = s.bob.layout(iv.round).plan.block_intervals;
        EXPECT_EQ(std::count(blocks.begin(), blocks.end(), iv.interval), 0);
      }
    }
  }
  EXPECT_GT(cascaded, 0u);
}

TEST(Engine, ReuseLookupReturnsInitiatorParities) {
  SeededRng rng(7);
  const BitFrame a = BitFrame::random(512, rng);
  NoiseSpec noise = BscNoise{0.05};
  const BitFrame b = apply_noise(a, noise, rng).frame;
  for (bool reuse : {true, false}) {
    auto cfg = make_config(512, 0.05, 8);
    cfg.parity_reuse = reuse;
    Session s(cfg, a, b);
    s.run();
    const std::size_t disclosed = s.bob.disclosed_bits();
    for (std::uint32_t r = 0; r < s.bob.rounds_started(); ++r) {
      const BitFrame permuted = apply_permutation(a, s.bob.layout(r).permutation);
      for (const auto& block : s.bob.layout(r).plan.block_intervals) {
        const auto got = s.bob.reuse_parity_lookup(block, r);
        if (!reuse) {
          EXPECT_FALSE(got.has_value());
          continue;
        }
        ASSERT_TRUE(got.has_value());
        EXPECT_EQ(*got, parity(std::span(permuted.bits()).subspan(block.lo, block.size())));
      }
    }
    EXPECT_EQ(s.bob.disclosed_bits(), disclosed);
  }
}

TEST(Fingerprint, EverySingleBitFlipChangesIt) {
  SeededRng rng(8);
  for (std::size_t n : {1u, 31u, 32u, 33u, 64u, 100u, 257u}) {
    const BitFrame f = BitFrame::random(n, rng);
    const auto base = frame_fingerprint(f, 42);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_NE(frame_fingerprint(with_flips(f, {i}), 42), base) << n << " " << i;
    }
  }
  EXPECT_NE(frame_fingerprint(BitFrame(32), 1), frame_fingerprint(BitFrame(33), 1));
}

struct PropertyCase {
  bool aggregation;
  bool reuse;
  PermutationKind kind;
};

class EngineProperties : public ::testing::TestWithParam<PropertyCase> {};

TEST_P(EngineProperties, RandomSessionsHoldInvariants) {
  const auto param = GetParam();
  SeededRng rng(100 + param.aggregation * 2 + param.reuse);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 64 + rng.uniform(1500);
    const double qber = 0.005 + rng.next_unit() * 0.08;
    const BitFrame a = BitFrame::random(n, rng);
    NoiseSpec noise = BscNoise{qber};
    const BitFrame b = apply_noise(a, noise, rng).frame;
    auto cfg = make_config(n, qber, rng.next_u64());
    cfg.aggregation = param.aggregation;
    cfg.parity_reuse = param.reuse;
    cfg.permutation_kind = param.kind;
    Session s(cfg, a, b);
    s.run();

    const auto status = s.bob.final_status();
    EXPECT_EQ(status.status, s.alice.final_status().status);
    if (status.status == SessionStatus::Success) EXPECT_EQ(hamming_distance(a, s.bob.frame()), 0u);
    EXPECT_EQ(hamming_distance(b, s.bob.frame()), s.bob.corrections().size());

    std::set<std::size_t> fixed;
    for (const auto& ev : s.bob.corrections()) {
      EXPECT_NE(a[ev.original_position], b[ev.original_position]);
      EXPECT_TRUE(fixed.insert(ev.original_position).second);
      EXPECT_EQ(s.bob.layout(ev.round).permutation[ev.original_position], ev.permuted_position);
      EXPECT_LE(ev.round, ev.protocol_round);
    }
    const auto compromised = s.bob.compromised_positions();
    EXPECT_TRUE(std::includes(fixed.begin(), fixed.end(), compromised.begin(), compromised.end()));

    ASSERT_EQ(s.alice.rounds_started(), s.bob.rounds_started());
    for (std::size_t r = 0; r < s.bob.rounds_started(); ++r) {
      EXPECT_EQ(s.alice.layout(r).permutation, s.bob.layout(r).permutation);
      EXPECT_EQ(s.alice.layout(r).plan.block_intervals, s.bob.layout(r).plan.block_intervals);
    }
    EXPECT_EQ(s.alice.history(), s.bob.history());
    const std::size_t leaked = leakage(s.transcript()).parity_bits_disclosed;
    EXPECT_EQ(s.alice.disclosed_bits(), leaked);
    EXPECT_EQ(s.bob.disclosed_bits(), leaked);
    EXPECT_NO_THROW(s.transcript().check_sequence());
  }
}

INSTANTIATE_TEST_SUITE_P(Modes, EngineProperties,
                         ::testing::Values(PropertyCase{false, true, PermutationKind::Lcg},
                                           PropertyCase{false, false, PermutationKind::Lcg},
                                           PropertyCase{true, true, PermutationKind::Lcg},
                                           PropertyCase{true, false, PermutationKind::Shuffle}));

TEST(Driver, ConcurrentMatchesLockstepTranscript) {
  SeededRng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const BitFrame a = BitFrame::random(2048, rng);
    NoiseSpec noise = BscNoise{0.04};
    const BitFrame b = apply_noise(a, noise, rng).frame;
    auto cfg = make_config(2048, 0.04, rng.next_u64());
    cfg.aggregation = trial % 2 == 0;
    Session lock(cfg, a, b);
    lock.run(Scheduling::Lockstep);
    Session conc(cfg, a, b);
    conc.run(Scheduling::Concurrent);
    EXPECT_EQ(lock.transcript().serialize(), conc.transcript().serialize());
    EXPECT_EQ(lock.bob.frame(), conc.bob.frame());
  }
}

TEST(Driver, ReplayingInitiatorMessagesReproducesResponder) {
  SeededRng rng(10);
  const BitFrame a = BitFrame::random(3000, rng);
  NoiseSpec noise = BscNoise{0.03};
  const BitFrame b = apply_noise(a, noise, rng).frame;
  const auto cfg = make_config(3000, 0.03, 55);
  Session s(cfg, a, b);
  s.run();

  ResponderSession replay(as_responder(cfg), b);
  std::vector<Message> produced;
  for (const auto& m : s.transcript().messages(Direction::InitiatorToResponder)) {
    for (auto& out : replay.on_message(m)) produced.push_back(std::move(out));
  }
  EXPECT_TRUE(replay.finished());
  EXPECT_EQ(replay.frame(), s.bob.frame());
  EXPECT_EQ(replay.corrections(), s.bob.corrections());
  const auto original = s.transcript().messages(Direction::ResponderToInitiator);
  ASSERT_EQ(produced.size(), original.size());
  for (std::size_t i = 0; i < produced.size(); ++i) EXPECT_EQ(produced[i].payload, original[i].payload);
}

TEST(Driver, PartyExceptionPropagatesInBothSchedulings) {
  class Broken final : public Party {
   public:
    std::vector<Message> start() override { return {}; }
    std::vector<Message> on_message(const Message&) override { throw ProtocolError("broken"); }
    bool finished() const override { return false; }
    FinalStatus final_status() const override { return {}; }
    Direction outbound() const override { return Direction::ResponderToInitiator; }
  };
  for (auto sched : {Scheduling::Lockstep, Scheduling::Concurrent}) {
    InitiatorSession alice(make_config(16, 0.25, 1), BitFrame(16));
    Broken bob;
    Channel ch;
    EXPECT_THROW(run_parties(alice, bob, ch, sched), ProtocolError);
  }
}

TEST(Aggregation, SameFramesAndNoMoreMessages) {
  std::size_t strict_cases = 0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    auto cfg = default_session_template();
    cfg.frame_length = 512 + (t % 8) * 512;
    const NoiseSpec noise = BscNoise{0.01 + 0.005 * static_cast<double>(t % 6)};
    auto off = run_trial_detailed(cfg, noise, t);
    cfg.aggregation = true;
    auto on = run_trial_detailed(cfg, noise, t);
    ASSERT_FALSE(off.record.aborted) << off.error;
    ASSERT_FALSE(on.record.aborted) << on.error;
    EXPECT_EQ(on.bob_final, off.bob_final) << t;
    EXPECT_EQ(on.record.parity_bits_disclosed, off.record.parity_bits_disclosed) << t;
    EXPECT_LE(on.record.messages_sent, off.record.messages_sent) << t;
    const auto round0 = std::count_if(off.corrections.begin(), off.corrections.end(),
                                      [](const CorrectionEvent& e) { return e.protocol_round == 0; });
    if (round0 >= 2) {
      ++strict_cases;
      EXPECT_LT(on.record.messages_sent, off.record.messages_sent) << t;
    }
  }
  EXPECT_GT(strict_cases, 100u);
}

TEST(Protocol, UnexpectedMessagesAreRejected) {
  const auto cfg = make_config(64, 0.1, 1);
  ResponderSession bob(as_responder(cfg), BitFrame(64));
  EXPECT_THROW(bob.on_message({0, ParityAnswerMsg{0, {}}}), ProtocolError);
  EXPECT_THROW(bob.on_message({0, FinalizeMsg{0}}), ProtocolError);
  EXPECT_THROW(bob.on_message({0, BlockParitiesMsg{0, {0}}}), ProtocolError);
  EXPECT_THROW(bob.on_message({0, ResultMsg{}}), ProtocolError);

  ResponderSession ready(as_responder(cfg), BitFrame(64));
  ready.on_message({0, to_init(cfg)});
  EXPECT_THROW(ready.on_message({1, BlockParitiesMsg{1, std::vector<Bit>(7, 0)}}), ProtocolError);
  EXPECT_THROW(ready.on_message({1, BlockParitiesMsg{0, std::vector<Bit>(3, 0)}}), ProtocolError);

  InitiatorSession alice(cfg, BitFrame(64));
  EXPECT_THROW(alice.on_message({0, ParityQueryMsg{0, {}}}), ProtocolError);
  alice.start();
  EXPECT_THROW(alice.start(), ProtocolError);
  EXPECT_THROW(alice.on_message({0, InitMsg{}}), ProtocolError);
}

TEST(Engine, ZeroThresholdStopsAtRoundCap) {
  SeededRng rng(11);
  const BitFrame a = BitFrame::random(128, rng);
  auto cfg = make_config(128, 0.05, 2);
  cfg.break_condition = ThresholdBreak{0};
  Session s(cfg, a, with_flips(a, {3}));
  s.run();
  EXPECT_EQ(s.bob.rounds_started(), kMaxRounds);
  EXPECT_EQ(s.bob.final_status().rounds, kMaxRounds);
  EXPECT_EQ(s.bob.final_status().status, SessionStatus::Success);
}

TEST(Engine, DynamicScheduleFollowsCorrections) {
  SeededRng rng(12);
  const BitFrame a = BitFrame::random(1024, rng);
  auto cfg = make_config(1024, 0.02, 4);
  cfg.schedule = DynamicSchedule{0.02};
  NoiseSpec noise = FixedErrors{20};
  Session s(cfg, a, apply_noise(a, noise, rng).frame);
  s.run();
  EXPECT_EQ(s.bob.layout(0).plan.block_size, 50u);
  for (std::size_t r = 1; r < s.bob.rounds_started(); ++r) {
    const std::size_t c = s.bob.history()[r - 1];
    const std::size_t expect = c == 0 ? 1024 : std::clamp<std::size_t>((1024 + c - 1) / c, 2, 1024);
    EXPECT_EQ(s.bob.layout(r).plan.block_size, expect);
  }
}

}  // namespace
}  // namespace cascade
