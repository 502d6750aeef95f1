#include "cascade/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cascade/errors.hpp"

namespace cascade {

namespace {

void check_estimate(double q, const char* what) {
  if (!(q > 0.0 && q < 0.5)) {
    throw ConfigError(std::string(what) + " must lie in (0, 0.5), got " + std::to_string(q));
  }
}

}  // namespace

void validate_schedule(const BlockScheduleConfig& config) {
  if (const auto* s = std::get_if<StaticSchedule>(&config)) {
    if (s->k < 2) throw ConfigError("static schedule growth factor k must be >= 2");
    check_estimate(s->qber_estimate, "static schedule qber_estimate");
  } else {
    check_estimate(std::get<DynamicSchedule>(config).initial_qber_estimate,
                   "dynamic schedule initial_qber_estimate");
  }
}

void validate_break(const BreakCondition& cond) {
  if (const auto* p = std::get_if<ProbabilisticBreak>(&cond)) {
    if (p->quiet_rounds == 0) throw ConfigError("probabilistic break needs quiet_rounds >= 1");
  } else if (const auto* s = std::get_if<StaticBreak>(&cond)) {
    if (s->total_rounds == 0) throw ConfigError("static break needs total_rounds >= 1");
  }
}

std::size_t initial_block_size(double qber_estimate) {
  if (!(qber_estimate > 0.0)) {
    throw ConfigError("qber estimate must be positive, got " + std::to_string(qber_estimate));
  }
  const double inv = 1.0 / qber_estimate;
  if (inv >= static_cast<double>(std::numeric_limits<std::size_t>::max() / 2)) {
    return std::numeric_limits<std::size_t>::max() / 2;
  }
  return static_cast<std::size_t>(std::ceil(inv - 1e-9));
}

std::size_t clamp_block_size(std::size_t size, std::size_t frame_length) noexcept {
  if (frame_length < 2) return std::max<std::size_t>(frame_length, 1);
  return std::clamp<std::size_t>(size, 2, frame_length);
}

std::size_t first_block_size(const BlockScheduleConfig& config, std::size_t frame_length) {
  const double q = std::holds_alternative<StaticSchedule>(config)
                       ? std::get<StaticSchedule>(config).qber_estimate
                       : std::get<DynamicSchedule>(config).initial_qber_estimate;
  return clamp_block_size(initial_block_size(q), frame_length);
}

std::size_t next_block_size(const BlockScheduleConfig& config, std::size_t round,
                            const RoundStats& prev) {
  if (round == 0) return first_block_size(config, prev.frame_length);
  if (const auto* s = std::get_if<StaticSchedule>(&config)) {
    std::size_t size = clamp_block_size(initial_block_size(s->qber_estimate), prev.frame_length);
    for (std::size_t r = 0; r < round && size < prev.frame_length; ++r) size *= s->k;
    return clamp_block_size(size, prev.frame_length);
  }
  if (prev.corrected == 0) return clamp_block_size(prev.frame_length, prev.frame_length);
  // ceil(1 / (corrected / n)) in exact integer arithmetic.
  const std::size_t size = (prev.frame_length + prev.corrected - 1) / prev.corrected;
  return clamp_block_size(size, prev.frame_length);
}

std::size_t block_size_for_round(const BlockScheduleConfig& config, std::size_t round,
                                 std::size_t frame_length, std::span<const std::size_t> history) {
  if (round == 0) return first_block_size(config, frame_length);
  if (history.size() < round) throw ConfigError("history shorter than the requested round");
  return next_block_size(config, round, RoundStats{history[round - 1], frame_length});
}

std::vector<Interval> partition_into_blocks(std::size_t frame_length, std::size_t block_size) {
  if (block_size == 0) throw ConfigError("block size must be >= 1");
  std::vector<Interval> blocks;
  blocks.reserve((frame_length + block_size - 1) / block_size);
  for (std::size_t lo = 0; lo < frame_length; lo += block_size) {
    blocks.push_back({lo, std::min(lo + block_size, frame_length)});
  }
  return blocks;
}

RoundPlan plan_round(const BlockScheduleConfig& config, std::size_t round, std::size_t frame_length,
                     std::span<const std::size_t> history) {
  RoundPlan plan;
  plan.round_index = round;
  plan.block_size = block_size_for_round(config, round, frame_length, history);
  plan.block_intervals = partition_into_blocks(frame_length, plan.block_size);
  return plan;
}

bool should_terminate(const BreakCondition& cond, std::span<const std::size_t> history) {
  if (const auto* p = std::get_if<ProbabilisticBreak>(&cond)) {
    if (history.size() < p->quiet_rounds) return false;
    return std::all_of(history.end() - static_cast<std::ptrdiff_t>(p->quiet_rounds), history.end(),
                       [](std::size_t c) { return c == 0; });
  }
  if (const auto* t = std::get_if<ThresholdBreak>(&cond)) {
    return !history.empty() && history.back() < t->min_corrected;
  }
  return history.size() == std::get<StaticBreak>(cond).total_rounds;
}

}  // namespace cascade
