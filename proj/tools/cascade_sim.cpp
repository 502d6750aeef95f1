#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cascade/errors.hpp"
#include "cascade/harness.hpp"
#include "sim_config.hpp"

namespace {

using namespace cascade;
using sim::Settings;

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kTransport = 3 };

struct Flags {
  Settings settings;
  std::optional<std::string> config;
  std::optional<std::string> schedule;
  std::optional<std::string> break_rule;
  std::optional<std::string> aggregation;
  std::optional<std::string> parity_reuse;
  std::string scenario = "length";
};

void add_protocol_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file; flags take precedence");
  cmd->add_option("--schedule", f.schedule, "static[:k=N] | dynamic");
  cmd->add_option("--qber-estimate", f.settings.qber_estimate,
                  "fixed QBER estimate for the schedule (default: derived from the noise)");
  cmd->add_option("--break", f.break_rule, "static:N | probabilistic:N | threshold:N");
  cmd->add_option("--permutation", f.settings.permutation, "shuffle | lcg");
  cmd->add_option("--aggregation", f.aggregation, "on | off");
  cmd->add_option("--parity-reuse", f.parity_reuse, "on | off");
  cmd->add_option("--scheduling", f.settings.scheduling, "lockstep | concurrent");
  cmd->add_option("--estimate-factor", f.settings.estimate_factor, "scale applied to the derived QBER estimate");
  cmd->add_option("--out", f.settings.out, "write records to PATH instead of stdout");
  cmd->add_option("--format", f.settings.format, "csv | jsonl");
}

void add_sweep_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--repeats", f.settings.repeats, "trials per sweep point");
  cmd->add_option("--base-seed", f.settings.base_seed, "seed all trial seeds derive from");
  cmd->add_option("--threads", f.settings.threads, "worker threads (0: all cores)");
}

void add_qber_sweep_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--length", f.settings.length, "frame length in bits");
  cmd->add_option("--qber-start", f.settings.qber_start);
  cmd->add_option("--qber-step", f.settings.qber_step);
  cmd->add_option("--steps", f.settings.steps);
}

void add_length_sweep_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--length-start", f.settings.length_start);
  cmd->add_option("--length-step", f.settings.length_step);
  cmd->add_option("--length-stop", f.settings.length_stop, "inclusive");
  cmd->add_option("--errors", f.settings.errors, "errors injected into every frame");
}

Settings resolve(const Flags& f) {
  Settings s = f.config ? sim::load_config(*f.config) : Settings{};
  Settings o = f.settings;
  if (f.schedule) sim::apply_schedule_flag(o, *f.schedule);
  if (f.break_rule) sim::apply_break_flag(o, *f.break_rule);
  if (f.aggregation) o.aggregation = sim::parse_toggle(*f.aggregation);
  if (f.parity_reuse) o.parity_reuse = sim::parse_toggle(*f.parity_reuse);
  return sim::merge(std::move(s), o);
}

void emit(const std::vector<TrialRecord>& records, const Settings& s) {
  const ExportFormat format = parse_export_format(s.format.value_or("csv"));
  if (s.out) {
    export_records(records, format, *s.out);
  } else {
    write_records(std::cout, records, format);
  }
}

int cmd_run(const Settings& s) {
  const SessionConfig session = sim::session_config(s);
  const NoiseSpec noise = sim::noise_spec(s);
  const TrialOutcome outcome = run_trial_detailed(session, noise, s.seed.value_or(1), sim::trial_options(s));
  const TrialRecord& r = outcome.record;
  if (s.transcript) outcome.transcript.write(*s.transcript);
  if (s.out) export_records({r}, parse_export_format(s.format.value_or("csv")), *s.out);

  std::cout << "status: " << (r.success ? "success" : r.aborted ? "aborted" : "failure") << '\n'
            << "length: " << r.length << '\n'
            << "injected_errors: " << r.injected_errors << '\n'
            << "corrected_errors: " << r.corrected_errors << '\n'
            << "residual_errors: " << r.residual_errors << '\n'
            << "rounds: " << r.rounds_executed << '\n'
            << "parity_bits_disclosed: " << r.parity_bits_disclosed << '\n'
            << "parity_fraction: " << r.parity_fraction << '\n'
            << "messages_sent: " << r.messages_sent << '\n';
  if (r.aborted) {
    std::cerr << "session aborted: " << outcome.error << '\n';
    return kFailure;
  }
  return kOk;
}

int cmd_sweep(const Settings& s, sim::SweepKind kind) {
  const ExperimentSpec spec = sim::experiment_spec(s, kind);
  const auto records = run_experiment(spec);
  emit(records, s);
  const auto ok = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.success; });
  const auto aborted = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.aborted; });
  std::cerr << records.size() << " trials, " << ok << " successful, " << aborted << " aborted\n";
  return aborted == 0 ? kOk : kFailure;
}

int cmd_compare(const Settings& s, const std::string& scenario) {
  if (scenario != "qber" && scenario != "length") throw ConfigError("--scenario must be qber or length");
  const auto kind = scenario == "qber" ? sim::SweepKind::Qber : sim::SweepKind::Length;
  const auto pairs = compare_aggregation(sim::experiment_spec(s, kind));
  std::vector<TrialRecord> records;
  std::vector<long long> reductions;
  std::size_t not_worse = 0;
  std::size_t identical = 0;
  for (const auto& p : pairs) {
    records.push_back(p.optimized);
    reductions.push_back(p.reduction());
    not_worse += p.optimized.messages_sent <= p.baseline.messages_sent;
    identical += p.frames_identical;
  }
  emit(records, s);
  std::sort(reductions.begin(), reductions.end());
  const std::size_t n = reductions.size();
  const double median = n % 2 ? static_cast<double>(reductions[n / 2])
                              : 0.5 * static_cast<double>(reductions[n / 2 - 1] + reductions[n / 2]);
  std::cerr << n << " pairs, messages_on <= messages_off on " << not_worse << ", identical frames on "
            << identical << ", median reduction " << median << " messages\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CASCADE information reconciliation simulator"};
  app.require_subcommand(1);
  Flags flags;

  auto* run = app.add_subcommand("run", "run one reconciliation trial");
  add_protocol_flags(run, flags);
  run->add_option("--length", flags.settings.length, "frame length in bits");
  run->add_option("--qber", flags.settings.qber, "binary symmetric channel error rate");
  run->add_option("--errors", flags.settings.errors, "inject exactly this many errors");
  run->add_option("--seed", flags.settings.seed, "trial seed");
  run->add_option("--transcript", flags.settings.transcript, "write the binary transcript to PATH");

  auto* sweep_qber_cmd = app.add_subcommand("sweep-qber", "fixed length, increasing QBER");
  add_protocol_flags(sweep_qber_cmd, flags);
  add_sweep_flags(sweep_qber_cmd, flags);
  add_qber_sweep_flags(sweep_qber_cmd, flags);

  auto* sweep_length_cmd = app.add_subcommand("sweep-length", "fixed error count, increasing length");
  add_protocol_flags(sweep_length_cmd, flags);
  add_sweep_flags(sweep_length_cmd, flags);
  add_length_sweep_flags(sweep_length_cmd, flags);

  auto* compare = app.add_subcommand("compare-aggregation", "paired runs with aggregation off and on");
  add_protocol_flags(compare, flags);
  add_sweep_flags(compare, flags);
  add_qber_sweep_flags(compare, flags);
  add_length_sweep_flags(compare, flags);
  compare->add_option("--scenario", flags.scenario, "qber | length")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    const Settings s = resolve(flags);
    if (run->parsed()) return cmd_run(s);
    if (sweep_qber_cmd->parsed()) return cmd_sweep(s, sim::SweepKind::Qber);
    if (sweep_length_cmd->parsed()) return cmd_sweep(s, sim::SweepKind::Length);
    return cmd_compare(s, flags.scenario);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << '\n';
    return kTransport;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kTransport;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kFailure;
  }
}
