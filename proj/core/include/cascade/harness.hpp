#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cascade/bitframe.hpp"
#include "cascade/channel.hpp"
#include "cascade/driver.hpp"
#include "cascade/engine.hpp"

namespace cascade {

struct QberSweep {
  std::size_t length = 4096;
  double qber_start = 0.005;
  double qber_step = 0.005;
  std::size_t steps = 60;
};

struct LengthSweep {
  std::size_t start = 512;
  std::size_t step = 512;
  std::size_t stop = 20480;  // inclusive
  std::size_t fixed_errors = 10;
};

using Scenario = std::variant<QberSweep, LengthSweep>;

/// Knobs shared by single trials and sweeps.
struct TrialOptions {
  /// The schedule's qber estimate is the true QBER (BSC) or
  /// injected_errors / length (fixed errors) times this factor.
  double estimate_factor = 1.0;
  /// When false the template's own estimate is used unchanged.
  bool auto_estimate = true;
  Scheduling scheduling = Scheduling::Lockstep;
};

/// Static k=2, Static{4} break, LCG permutations, parity reuse on,
/// aggregation off.
SessionConfig default_session_template();

struct ExperimentSpec {
  Scenario scenario = QberSweep{};
  std::size_t repeats = 3;
  std::uint64_t base_seed = 1;
  /// frame_length and seed are replaced per trial; with auto_estimate the
  /// schedule's qber estimate is too.
  SessionConfig session = default_session_template();
  TrialOptions options;
  std::size_t threads = 0;  // 0: hardware concurrency
};

void validate(const ExperimentSpec& spec);

/// Column order of the CSV export and key order of the JSON-lines export.
struct TrialRecord {
  std::string scenario;
  std::size_t trial_index = 0;
  std::uint64_t seed = 0;
  std::size_t length = 0;
  double qber_true = 0.0;
  double qber_estimate = 0.0;
  std::size_t injected_errors = 0;
  std::size_t rounds_executed = 0;
  std::size_t corrected_errors = 0;
  std::size_t residual_errors = 0;
  std::size_t parity_bits_disclosed = 0;
  double parity_fraction = 0.0;
  std::size_t messages_sent = 0;
  std::optional<std::size_t> messages_baseline;
  bool success = false;
  bool aborted = false;  // the session threw instead of finishing
  double wall_time = 0.0;  // seconds

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Everything a single trial produced, for tests and the CLI.
struct TrialOutcome {
  TrialRecord record;
  Transcript transcript;
  BitFrame alice;
  BitFrame bob_initial;
  BitFrame bob_final;
  FinalStatus initiator_status;
  FinalStatus responder_status;
  std::size_t initiator_disclosed = 0;  // engine counters
  std::size_t responder_disclosed = 0;
  std::size_t transcript_disclosed = 0;
  std::size_t eve_disclosed = 0;
  std::vector<CorrectionEvent> corrections;
  std::string error;  // non-empty when aborted
};

/// Frame, noise and session seeds are derived from `seed`; `session` must
/// have frame_length set.
TrialOutcome run_trial_detailed(const SessionConfig& session, const NoiseSpec& noise,
                                std::uint64_t seed, const TrialOptions& options = {});
TrialRecord run_trial(const SessionConfig& session, const NoiseSpec& noise, std::uint64_t seed,
                      const TrialOptions& options = {});

/// Seed of trial (point, repeat) in a scenario.
std::uint64_t trial_seed(std::uint64_t base_seed, std::string_view scenario, std::size_t point,
                         std::size_t repeat);

/// One planned trial of a sweep.
struct TrialPlan {
  std::string scenario;
  std::size_t trial_index = 0;
  std::size_t length = 0;
  NoiseSpec noise;
  std::uint64_t seed = 0;
};

std::vector<TrialPlan> plan_trials(const ExperimentSpec& spec);

/// Records sorted by trial index, identical for any thread count.
std::vector<TrialRecord> sweep_qber(const ExperimentSpec& spec);
std::vector<TrialRecord> sweep_length(const ExperimentSpec& spec);
std::vector<TrialRecord> run_experiment(const ExperimentSpec& spec);

struct AggregationPair {
  TrialRecord baseline;   // aggregation off
  TrialRecord optimized;  // aggregation on; messages_baseline filled in
  bool frames_identical = false;

  long long reduction() const {
    return static_cast<long long>(baseline.messages_sent) -
           static_cast<long long>(optimized.messages_sent);
  }
};

/// Runs every trial of the spec twice on identical seeds, once per
/// aggregation setting.
std::vector<AggregationPair> compare_aggregation(const ExperimentSpec& spec);

enum class ExportFormat : std::uint8_t { Csv, Jsonl };

ExportFormat parse_export_format(std::string_view name);

/// Header line of the CSV export.
const std::vector<std::string>& record_columns();

void write_records(std::ostream& out, const std::vector<TrialRecord>& records, ExportFormat format);
std::vector<TrialRecord> read_records(std::istream& in, ExportFormat format);

/// Throws ConfigError on an empty record set and Error when the file cannot
/// be written.
void export_records(const std::vector<TrialRecord>& records, ExportFormat format,
                    const std::filesystem::path& path);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
/// exception is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace cascade
