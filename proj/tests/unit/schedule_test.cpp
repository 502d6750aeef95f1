#include "cascade/schedule.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cascade/errors.hpp"

namespace cascade {
namespace {

TEST(InitialBlockSize, CeilingOfInverse) {
  EXPECT_EQ(initial_block_size(0.01), 100u);
  EXPECT_EQ(initial_block_size(0.08), 13u);  // ceil(12.5)
  EXPECT_EQ(initial_block_size(0.02), 50u);
  EXPECT_EQ(initial_block_size(0.25), 4u);
  EXPECT_EQ(initial_block_size(0.3), 4u);  // ceil(3.33)
}

TEST(InitialBlockSize, NearHalfClampsToMinimum) {
  // ceil(1 / (0.5 - eps)) is 3 for small eps; only the clamp reaches 2.
  const double q = 0.5 - 1e-6;
  EXPECT_EQ(initial_block_size(q), 3u);
  EXPECT_EQ(clamp_block_size(initial_block_size(q), 4096), 3u);
  EXPECT_EQ(clamp_block_size(1, 4096), 2u);
  EXPECT_EQ(first_block_size(StaticSchedule{2, 0.4999999}, 4096), 3u);
}

TEST(InitialBlockSize, RejectsNonPositive) {
  EXPECT_THROW(initial_block_size(0.0), ConfigError);
  EXPECT_THROW(initial_block_size(-0.1), ConfigError);
}

TEST(ClampBlockSize, Bounds) {
  EXPECT_EQ(clamp_block_size(5000, 4096), 4096u);
  EXPECT_EQ(clamp_block_size(0, 4096), 2u);
  EXPECT_EQ(clamp_block_size(7, 1), 1u);
}

TEST(ValidateSchedule, RejectsBadParameters) {
  EXPECT_THROW(validate_schedule(StaticSchedule{1, 0.02}), ConfigError);
  EXPECT_THROW(validate_schedule(StaticSchedule{2, 0.0}), ConfigError);
  EXPECT_THROW(validate_schedule(StaticSchedule{2, 0.5}), ConfigError);
  EXPECT_THROW(validate_schedule(DynamicSchedule{0.6}), ConfigError);
  EXPECT_NO_THROW(validate_schedule(DynamicSchedule{0.1}));
}

TEST(ValidateBreak, RejectsZeroWherePositiveRequired) {
  EXPECT_THROW(validate_break(ProbabilisticBreak{0}), ConfigError);
  EXPECT_THROW(validate_break(StaticBreak{0}), ConfigError);
  EXPECT_NO_THROW(validate_break(ThresholdBreak{0}));
}

TEST(NextBlockSize, StaticGrowsByFactor) {
  const std::vector<std::size_t> history{3, 1, 0};
  const StaticSchedule s{2, 0.125};  // S0 = 8
  EXPECT_EQ(block_size_for_round(s, 0, 1024, history), 8u);
  EXPECT_EQ(block_size_for_round(s, 1, 1024, history), 16u);
  EXPECT_EQ(block_size_for_round(s, 2, 1024, history), 32u);
  EXPECT_EQ(next_block_size(StaticSchedule{3, 0.125}, 2, RoundStats{0, 1024}), 72u);
  EXPECT_EQ(next_block_size(s, 9, RoundStats{0, 1024}), 1024u);  // clamped
}

TEST(NextBlockSize, DynamicUsesObservedRate) {
  const DynamicSchedule d{0.05};
  EXPECT_EQ(next_block_size(d, 1, RoundStats{8, 1024}), 128u);
  EXPECT_EQ(next_block_size(d, 1, RoundStats{3, 1000}), 334u);  // ceil(333.3)
  EXPECT_EQ(next_block_size(d, 1, RoundStats{0, 1024}), 1024u);
  EXPECT_EQ(next_block_size(d, 1, RoundStats{1024, 1024}), 2u);
  EXPECT_EQ(first_block_size(d, 1024), 20u);
}

TEST(Schedule, StaticNondecreasingDynamicBounded) {
  for (std::uint32_t k = 2; k <= 4; ++k) {
    std::size_t prev = 0;
    for (std::size_t r = 0; r < 12; ++r) {
      const std::size_t s = block_size_for_round(StaticSchedule{k, 0.03}, r, 5000, std::vector<std::size_t>(r, 0));
      EXPECT_GE(s, prev);
      prev = s;
    }
  }
  for (std::size_t c = 0; c <= 300; ++c) {
    const std::size_t s = next_block_size(DynamicSchedule{0.1}, 1, RoundStats{c, 300});
    EXPECT_GE(s, 2u);
    EXPECT_LE(s, 300u);
  }
}

TEST(Partition, Examples) {
  EXPECT_EQ(partition_into_blocks(10, 4), (std::vector<Interval>{{0, 4}, {4, 8}, {8, 10}}));
  EXPECT_EQ(partition_into_blocks(8, 8), (std::vector<Interval>{{0, 8}}));
}

TEST(Partition, ExactCoverExhaustive) {
  for (std::size_t n = 1; n <= 64; ++n) {
    for (std::size_t s = 1; s <= 64; ++s) {
      const auto blocks = partition_into_blocks(n, s);
      std::vector<int> hits(n, 0);
      std::size_t expect_lo = 0;
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        ASSERT_EQ(blocks[i].lo, expect_lo);
        ASSERT_GE(blocks[i].size(), 1u);
        if (i + 1 < blocks.size()) ASSERT_EQ(blocks[i].size(), s);
        ASSERT_LE(blocks[i].size(), s);
        for (std::size_t j = blocks[i].lo; j < blocks[i].hi; ++j) ++hits[j];
        expect_lo = blocks[i].hi;
      }
      for (int h : hits) ASSERT_EQ(h, 1);
    }
  }
}

TEST(PlanRound, MatchesSchedule) {
  const std::vector<std::size_t> history{4};
  const RoundPlan p = plan_round(StaticSchedule{2, 0.1}, 1, 45, history);
  EXPECT_EQ(p.round_index, 1u);
  EXPECT_EQ(p.block_size, 20u);
  EXPECT_EQ(p.block_intervals, (std::vector<Interval>{{0, 20}, {20, 40}, {40, 45}}));
}

TEST(ShouldTerminate, Probabilistic) {
  EXPECT_TRUE(should_terminate(ProbabilisticBreak{2}, std::vector<std::size_t>{5, 0, 0}));
  EXPECT_FALSE(should_terminate(ProbabilisticBreak{2}, std::vector<std::size_t>{5, 0}));
  EXPECT_FALSE(should_terminate(ProbabilisticBreak{2}, std::vector<std::size_t>{0, 1}));
  EXPECT_FALSE(should_terminate(ProbabilisticBreak{3}, std::vector<std::size_t>{0, 0}));
}

TEST(ShouldTerminate, StaticFiresExactlyOnce) {
  std::vector<std::size_t> history;
  int fired = 0;
  for (int r = 0; r < 10; ++r) {
    history.push_back(1);
    const bool t = should_terminate(StaticBreak{4}, history);
    fired += t;
    EXPECT_EQ(t, history.size() == 4);
  }
  EXPECT_EQ(fired, 1);
}

TEST(ShouldTerminate, Threshold) {
  EXPECT_TRUE(should_terminate(ThresholdBreak{1}, std::vector<std::size_t>{3, 0}));
  EXPECT_FALSE(should_terminate(ThresholdBreak{1}, std::vector<std::size_t>{0, 3}));
  EXPECT_FALSE(should_terminate(ThresholdBreak{0}, std::vector<std::size_t>{0}));
}

TEST(ShouldTerminate, ProbabilisticImpliesQuietTail) {
  // Every history over {0,1,2} of length <= 6.
  for (std::size_t q = 1; q <= 3; ++q) {
    for (std::size_t len = 1; len <= 6; ++len) {
      std::size_t combos = 1;
      for (std::size_t i = 0; i < len; ++i) combos *= 3;
      for (std::size_t c = 0; c < combos; ++c) {
        std::vector<std::size_t> h;
        for (std::size_t i = 0, x = c; i < len; ++i, x /= 3) h.push_back(x % 3);
        const bool quiet = len >= q && std::all_of(h.end() - static_cast<long>(q), h.end(), [](auto v) { return v == 0; });
        ASSERT_EQ(should_terminate(ProbabilisticBreak{q}, h), quiet);
      }
    }
  }
}

}  // namespace
}  // namespace cascade
