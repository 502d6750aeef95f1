#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "cascade/harness.hpp"

namespace cascade::sim {

/// Every setting the CLI understands. Unset fields fall back to defaults;
/// values from flags override values from the config file.
///
/// Config file: a JSON object. Nested objects are flattened with '.', so
/// {"schedule": {"k": 3}} and {"schedule.k": 3} are the same. Keys:
///   length, qber, errors, seed,
///   schedule.variant (static|dynamic), schedule.k, schedule.qber_estimate,
///   break.variant (static|probabilistic|threshold), break.param,
///   permutation (shuffle|lcg), aggregation, parity_reuse (bool or on|off),
///   scheduling (lockstep|concurrent), transcript, out, format (csv|jsonl),
///   repeats, base_seed, threads, estimate_factor,
///   qber_start, qber_step, steps, length_start, length_step, length_stop
struct Settings {
  std::optional<std::size_t> length;
  std::optional<double> qber;
  std::optional<std::size_t> errors;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> schedule_variant;
  std::optional<std::uint32_t> schedule_k;
  std::optional<double> qber_estimate;
  std::optional<std::string> break_variant;
  std::optional<std::size_t> break_param;
  std::optional<std::string> permutation;
  std::optional<bool> aggregation;
  std::optional<bool> parity_reuse;
  std::optional<std::string> scheduling;
  std::optional<std::string> transcript;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::size_t> repeats;
  std::optional<std::uint64_t> base_seed;
  std::optional<std::size_t> threads;
  std::optional<double> estimate_factor;
  std::optional<double> qber_start;
  std::optional<double> qber_step;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> length_start;
  std::optional<std::size_t> length_step;
  std::optional<std::size_t> length_stop;
};

/// Fields set in `overrides` replace those in `base`.
Settings merge(Settings base, const Settings& overrides);

Settings parse_config_text(std::string_view json_text);
Settings load_config(const std::filesystem::path& path);

/// "on"/"off" (also true/false, 1/0).
bool parse_toggle(std::string_view text);
/// "static", "static:k=3" or "dynamic".
void apply_schedule_flag(Settings& s, std::string_view text);
/// "static:4", "probabilistic:2", "threshold:1"; the number is optional.
void apply_break_flag(Settings& s, std::string_view text);

SessionConfig session_config(const Settings& s);
TrialOptions trial_options(const Settings& s);
/// Single-trial noise: exactly one of qber and errors must be set.
NoiseSpec noise_spec(const Settings& s);

enum class SweepKind { Qber, Length };
ExperimentSpec experiment_spec(const Settings& s, SweepKind kind);

}  // namespace cascade::sim
