#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "cascade/interval.hpp"

namespace cascade {

/// Block sizes S_r = S_0 * k^r with S_0 = ceil(1 / qber_estimate).
struct StaticSchedule {
  std::uint32_t k = 2;
  double qber_estimate = 0.0;

  friend bool operator==(const StaticSchedule&, const StaticSchedule&) = default;
};

/// Round 0 uses ceil(1 / initial_qber_estimate); round r uses
/// ceil(frame_length / corrected_{r-1}), i.e. 1 / QBER_r with
/// QBER_r = corrected / frame_length.
struct DynamicSchedule {
  double initial_qber_estimate = 0.0;

  friend bool operator==(const DynamicSchedule&, const DynamicSchedule&) = default;
};

using BlockScheduleConfig = std::variant<StaticSchedule, DynamicSchedule>;

/// Stop after `quiet_rounds` consecutive rounds with no corrections.
struct ProbabilisticBreak {
  std::size_t quiet_rounds = 2;

  friend bool operator==(const ProbabilisticBreak&, const ProbabilisticBreak&) = default;
};

/// Stop once a round corrects fewer than `min_corrected` errors.
struct ThresholdBreak {
  std::size_t min_corrected = 1;

  friend bool operator==(const ThresholdBreak&, const ThresholdBreak&) = default;
};

/// Stop after exactly `total_rounds` rounds.
struct StaticBreak {
  std::size_t total_rounds = 4;

  friend bool operator==(const StaticBreak&, const StaticBreak&) = default;
};

using BreakCondition = std::variant<ProbabilisticBreak, ThresholdBreak, StaticBreak>;

struct RoundStats {
  std::size_t corrected = 0;
  std::size_t frame_length = 0;
};

struct RoundPlan {
  std::size_t round_index = 0;
  std::size_t block_size = 0;
  std::vector<Interval> block_intervals;
};

void validate_schedule(const BlockScheduleConfig& config);
void validate_break(const BreakCondition& cond);

/// ceil(1 / qber_estimate). A 1e-9 slack absorbs representation error, so
/// 0.01 gives 100 rather than 101. Callers clamp with clamp_block_size.
std::size_t initial_block_size(double qber_estimate);

/// Clamps to [2, frame_length]; frames shorter than 2 bits get one block.
std::size_t clamp_block_size(std::size_t size, std::size_t frame_length) noexcept;

/// Block size of round 0, clamped.
std::size_t first_block_size(const BlockScheduleConfig& config, std::size_t frame_length);

/// Block size of round >= 1 given the statistics of round - 1, clamped.
/// Dynamic with zero corrections yields frame_length (one block).
std::size_t next_block_size(const BlockScheduleConfig& config, std::size_t round,
                            const RoundStats& prev_round_stats);

/// Block size for `round` given the per-round correction history
/// (history.size() >= round).
std::size_t block_size_for_round(const BlockScheduleConfig& config, std::size_t round,
                                 std::size_t frame_length, std::span<const std::size_t> history);

std::vector<Interval> partition_into_blocks(std::size_t frame_length, std::size_t block_size);

RoundPlan plan_round(const BlockScheduleConfig& config, std::size_t round, std::size_t frame_length,
                     std::span<const std::size_t> history);

/// `history` holds the corrected count of every completed round.
bool should_terminate(const BreakCondition& cond, std::span<const std::size_t> history);

}  // namespace cascade
